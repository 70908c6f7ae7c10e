#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "seqopt/fem.hpp"
#include "seqopt/grid.hpp"

namespace seqopt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

/// Maps grid DOFs (node * dim + component) to the unknowns left after the
/// fixed nodes are eliminated.
class DofMap {
public:
  explicit DofMap(const Grid& grid);
  int num_dofs() const { return static_cast<int>(reduced_.size()); }
  int num_free() const { return static_cast<int>(full_.size()); }
  int reduced(int dof) const { return reduced_[dof]; }
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;

private:
  std::vector<int> reduced_;
  std::vector<int> full_;
};

/// Reassembles the lower triangle of the reduced global stiffness for a new
/// set of element scale factors without rebuilding the sparsity pattern.
/// Every element of the grid contributes, including quiet and void ones.
class StiffnessAssembler {
public:
  StiffnessAssembler(const Grid& grid, const DofMap& dofs, Eigen::MatrixXd element_matrix);

  SparseMatrix assemble(const Eigen::VectorXd& element_scale) const;
  const Eigen::MatrixXd& element_matrix() const { return ke_; }

private:
  int num_elements_ = 0;
  Eigen::MatrixXd ke_;
  SparseMatrix pattern_;
  // Value slot and local (row, col) of each retained entry, grouped by element.
  std::vector<int> offsets_;
  std::vector<int> slot_;
  std::vector<std::uint8_t> local_row_;
  std::vector<std::uint8_t> local_col_;
};

enum class SolverKind { direct, pcg };

std::string_view to_string(SolverKind kind);
SolverKind solver_kind_from_string(std::string_view s);

struct SolverOptions {
  SolverKind kind = SolverKind::direct;
  double tolerance = 1e-8;  // relative residual target for pcg
  int max_iterations = 20000;
};

/// A factorized (or preconditioned) symmetric positive definite system.
class SpdSolver {
public:
  virtual ~SpdSolver() = default;
  virtual void factorize(const SparseMatrix& lower) = 0;
  /// Throws SolverError when the result is not finite or the iterative
  /// method did not reach its tolerance.
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const = 0;
  /// Accuracy of the most recent solve: relative residual ||K x - b|| / ||b||
  /// for pcg, normwise backward error for the direct solver.
  double last_residual() const { return last_residual_; }

protected:
  mutable double last_residual_ = 0.0;
};

std::unique_ptr<SpdSolver> make_solver(const SolverOptions& options);

/// Relative residual of K x = b with K given by its lower triangle.
double relative_residual(const SparseMatrix& lower, const Eigen::VectorXd& x, const Eigen::VectorXd& b);

/// One-shot solve on the full grid: element densities -> SIMP-scaled K,
/// `loads` is a full-length DOF vector (fixed entries ignored). Returns the
/// full-length displacement with zeros on fixed DOFs.
Eigen::VectorXd assemble_and_solve(const Grid& grid, const Eigen::VectorXd& densities, const Eigen::VectorXd& loads,
                                   const Material& material, const SolverOptions& options = {});

}  // namespace seqopt
