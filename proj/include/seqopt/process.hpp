#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "seqopt/fem.hpp"
#include "seqopt/grid.hpp"
#include "seqopt/linear_system.hpp"
#include "seqopt/projection.hpp"
#include "seqopt/timefield.hpp"

namespace seqopt {

struct SimulationOptions {
  SolverOptions solver;
  /// Keep each stage's factorization for the adjoint solves. Without it the
  /// adjoint pass refactorizes (needed for large 3D grids).
  bool retain_factorizations = true;
  int threads = 1;
};

/// Everything a forward run produces. Stage-indexed vectors run 0..N with
/// entry 0 unused, so index j is stage j.
struct SimulationResult {
  StageDensities densities;
  std::vector<Eigen::VectorXd> du;  // incremental displacements, full DOF length
  Eigen::VectorXd u;                // accumulated u^N
  /// Global-frame inherent strain per element (Voigt x elements).
  Eigen::MatrixXd element_strain;
  /// d(strain)/d(time gradient) per element, aligned mode only (3 x 2 blocks).
  std::vector<Eigen::Matrix<double, 3, 2>> strain_dgrad;
  int degenerate_gradients = 0;
  bool binary = false;
  std::vector<std::unique_ptr<SpdSolver>> solvers;  // retained factorizations, or empty

  int layers() const { return densities.layers; }
  /// u^j = du^1 + ... + du^j, summed in ascending order.
  Eigen::VectorXd accumulated(int j) const;
};

/// Inherent-strain process model: one linear solve per deposited layer on the
/// full grid, with not-yet-deposited material kept at minimum stiffness.
class ForwardModel {
public:
  ForwardModel(Grid grid, Material material, InherentStrain strain, SimulationOptions options = {});

  const Grid& grid() const { return grid_; }
  const Material& material() const { return material_; }
  const InherentStrain& strain() const { return strain_; }
  const SimulationOptions& options() const { return options_; }
  const DofMap& dofs() const { return dofs_; }
  const StiffnessAssembler& assembler() const { return *assembler_; }
  /// E0 * integral of B^T C over a unit element.
  const Eigen::MatrixXd& load_operator() const { return load_op_; }

  SimulationResult simulate(const TimeField& field, const ProjectionParams& params) const;
  /// Hard 0/1 layers from ceil(t N); for post-validation.
  SimulationResult simulate_binary(const TimeField& field, int layers) const;

  /// Inherent strain of every element in the global frame; fills the
  /// strain-related members of `out`.
  void element_strains(const TimeField& field, SimulationResult& out) const;
  /// Consolidated nodal loads of stage j (full DOF length).
  Eigen::VectorXd stage_loads(const SimulationResult& sim, int j) const;
  /// SIMP-scaled reduced stiffness for a density field.
  SparseMatrix stiffness(const Eigen::VectorXd& rho) const;
  /// Solves one stage in isolation: K(rho) du = loads.
  Eigen::VectorXd solve_stage(const Eigen::VectorXd& rho, const Eigen::VectorXd& loads) const;

private:
  SimulationResult run(const TimeField& field, StageDensities densities, bool binary) const;

  Grid grid_;
  Material material_;
  InherentStrain strain_;
  SimulationOptions options_;
  DofMap dofs_;
  std::unique_ptr<StiffnessAssembler> assembler_;
  Eigen::MatrixXd load_op_;
};

/// Re-sums the increments in a shuffled order and compares with u^N
/// (infinity norm <= tolerance). False on any non-finite value.
bool stage_order_independence_check(const SimulationResult& sim, std::uint64_t seed = 1, double tolerance = 1e-12);

/// Runs fn(i) for i in [0, count) on up to `threads` threads.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace seqopt
