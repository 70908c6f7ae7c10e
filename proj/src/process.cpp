#include "seqopt/process.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace seqopt {

Eigen::VectorXd SimulationResult::accumulated(int j) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(u.size());
  for (int i = 1; i <= j; ++i) acc += du[i];
  return acc;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ForwardModel::ForwardModel(Grid grid, Material material, InherentStrain strain, SimulationOptions options)
    : grid_(std::move(grid)),
      material_(material),
      strain_(std::move(strain)),
      options_(options),
      dofs_(grid_) {
  material_.validate();
  grid_.validate();
  const int nv = grid_.dim() == 2 ? 3 : 6;
  if (strain_.voigt.size() != nv)
    throw std::invalid_argument("inherent strain needs " + std::to_string(nv) + " Voigt components");
  if (!strain_.voigt.allFinite()) throw std::invalid_argument("inherent strain must be finite");
  if (strain_.mode == StrainMode::anisotropic_aligned && grid_.dim() != 2)
    throw std::invalid_argument("aligned anisotropic strain is supported in 2D only");
  assembler_ = std::make_unique<StiffnessAssembler>(
      grid_, dofs_, material_.E0 * element_stiffness_unit(grid_.dim(), material_.nu, material_.plane_strain));
  load_op_ = material_.E0 * seqopt::load_operator(grid_.dim(), material_.nu, material_.plane_strain);
}

void ForwardModel::element_strains(const TimeField& field, SimulationResult& out) const {
  const int ne = grid_.num_elements();
  out.element_strain = strain_.voigt.replicate(1, ne);
  out.strain_dgrad.clear();
  out.degenerate_gradients = 0;
  if (strain_.mode != StrainMode::anisotropic_aligned) return;
  if (field.mode != FieldMode::node)
    throw std::invalid_argument("aligned anisotropic strain requires a node-based time field");
  out.strain_dgrad.assign(ne, Eigen::Matrix<double, 3, 2>::Zero());
  for (int e = 0; e < ne; ++e) {
    if (!grid_.is_active(e)) continue;
    const Eigen::Vector3d g = centroid_gradient(grid_, field.values, e);
    const auto r = rotate_strain_to_global(strain_.voigt.head<3>(), g.head<2>());
    out.element_strain.col(e) = r.strain;
    out.strain_dgrad[e] = r.d_dgrad;
    if (r.degenerate) ++out.degenerate_gradients;
  }
}

Eigen::VectorXd ForwardModel::stage_loads(const SimulationResult& sim, int j) const {
  const int dim = grid_.dim();
  const int npe = grid_.nodes_per_element();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(grid_.num_dofs());
  const Eigen::VectorXd& drho = sim.densities.drho[j];
  for (int e = 0; e < grid_.num_elements(); ++e) {
    if (!grid_.is_active(e) || drho[e] == 0.0) continue;
    const double w = penalized_increment(drho[e], material_.q);
    const Eigen::VectorXd fe = w * (load_op_ * sim.element_strain.col(e));
    const auto nodes = grid_.element_nodes(e);
    for (int a = 0; a < npe; ++a)
      for (int c = 0; c < dim; ++c) f[nodes[a] * dim + c] += fe[a * dim + c];
  }
  return f;
}

SparseMatrix ForwardModel::stiffness(const Eigen::VectorXd& rho) const {
  Eigen::VectorXd scale(grid_.num_elements());
  for (int e = 0; e < grid_.num_elements(); ++e) scale[e] = simp_scale(grid_.is_active(e) ? rho[e] : 0.0, material_);
  return assembler_->assemble(scale);
}

Eigen::VectorXd ForwardModel::solve_stage(const Eigen::VectorXd& rho, const Eigen::VectorXd& loads) const {
  auto solver = make_solver(options_.solver);
  solver->factorize(stiffness(rho));
  return dofs_.expand(solver->solve(dofs_.restrict(loads)));
}

SimulationResult ForwardModel::simulate(const TimeField& field, const ProjectionParams& params) const {
  return run(field, stage_densities(grid_, element_times(grid_, field), params), false);
}

SimulationResult ForwardModel::simulate_binary(const TimeField& field, int layers) const {
  return run(field, binary_stage_densities(grid_, element_times(grid_, field), layers), true);
}

SimulationResult ForwardModel::run(const TimeField& field, StageDensities densities, bool binary) const {
  SimulationResult sim;
  sim.densities = std::move(densities);
  sim.binary = binary;
  element_strains(field, sim);
  const int N = sim.layers();
  sim.du.assign(N + 1, Eigen::VectorXd::Zero(grid_.num_dofs()));
  if (options_.retain_factorizations) sim.solvers.resize(N + 1);

  parallel_for(N, options_.threads, [&](int idx) {
    const int j = idx + 1;
    auto solver = make_solver(options_.solver);
    try {
      solver->factorize(stiffness(sim.densities.rho[j]));
      sim.du[j] = dofs_.expand(solver->solve(dofs_.restrict(stage_loads(sim, j))));
    } catch (const SolverError& err) {
      throw SolverError("stage " + std::to_string(j) + ": " + err.what(), err.residual());
    }
    if (options_.retain_factorizations) sim.solvers[j] = std::move(solver);
  });

  sim.u = Eigen::VectorXd::Zero(grid_.num_dofs());
  for (int j = 1; j <= N; ++j) sim.u += sim.du[j];
  return sim;
}

bool stage_order_independence_check(const SimulationResult& sim, std::uint64_t seed, double tolerance) {
  const int N = sim.layers();
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(sim.u.size());
  for (int j : order) u += sim.du[j];
  if (!u.allFinite() || !sim.u.allFinite()) return false;
  return (u - sim.u).lpNorm<Eigen::Infinity>() <= tolerance;
}

}  // namespace seqopt
