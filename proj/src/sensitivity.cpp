#include "seqopt/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace seqopt {

namespace {

Eigen::VectorXd gather(const Grid& grid, const Eigen::VectorXd& full, int e) {
  const int dim = grid.dim();
  const int npe = grid.nodes_per_element();
  const auto nodes = grid.element_nodes(e);
  Eigen::VectorXd out(npe * dim);
  for (int a = 0; a < npe; ++a)
    for (int c = 0; c < dim; ++c) out[a * dim + c] = full[nodes[a] * dim + c];
  return out;
}

}  // namespace

AdjointWorkspace adjoint_gradient(const ForwardModel& model, const SimulationResult& sim, const TimeField& field,
                                  const QuadraticForm& Q) {
  if (sim.binary) throw std::invalid_argument("binary layers have no gradient");
  const int N = sim.layers();
  if (static_cast<int>(sim.du.size()) != N + 1 || static_cast<int>(sim.densities.rho.size()) != N + 1)
    throw std::invalid_argument("simulation does not hold all stage increments");
  const Grid& grid = model.grid();
  const DofMap& dofs = model.dofs();
  const Material& mat = model.material();
  const Eigen::MatrixXd& K0 = model.assembler().element_matrix();
  const Eigen::MatrixXd& L = model.load_operator();
  const bool retained = static_cast<int>(sim.solvers.size()) == N + 1;

  AdjointWorkspace ws;
  ws.lambda.assign(N + 1, Eigen::VectorXd());
  const Eigen::VectorXd rhs = dofs.restrict(Eigen::VectorXd(-Q.gradient(sim.u)));
  parallel_for(N, model.options().threads, [&](int idx) {
    const int i = idx + 1;
    if (retained && sim.solvers[i]) {
      ws.lambda[i] = dofs.expand(sim.solvers[i]->solve(rhs));
    } else {
      auto solver = make_solver(model.options().solver);
      solver->factorize(model.stiffness(sim.densities.rho[i]));
      ws.lambda[i] = dofs.expand(solver->solve(rhs));
    }
  });

  const int ne = grid.num_elements();
  const bool aligned = !sim.strain_dgrad.empty();
  ws.element_gradient = Eigen::VectorXd::Zero(ne);
  // Per element, sum_i pen(drho_i) lambda_i: the load-weighted adjoint for the
  // strain-orientation term.
  std::vector<Eigen::VectorXd> weighted(aligned ? ne : 0);
  for (int e = 0; e < ne; ++e) {
    if (!grid.is_active(e)) continue;
    const Eigen::VectorXd Le = L * sim.element_strain.col(e);
    double g = 0.0;
    if (aligned) weighted[e] = Eigen::VectorXd::Zero(K0.rows());
    for (int i = 1; i <= N; ++i) {
      const Eigen::VectorXd lam = gather(grid, ws.lambda[i], e);
      const double rho = sim.densities.rho[i][e];
      const double drho = sim.densities.drho[i][e];
      const double dk = simp_scale_derivative(rho, mat) * sim.densities.rho_dt[i][e];
      if (dk != 0.0) g += dk * lam.dot(K0 * gather(grid, sim.du[i], e));
      const double df = penalized_increment_derivative(drho, mat.q) * sim.densities.drho_dt[i][e];
      if (df != 0.0) g -= df * lam.dot(Le);
      if (aligned) weighted[e] += penalized_increment(drho, mat.q) * lam;
    }
    ws.element_gradient[e] = g;
  }

  ws.gradient = scatter_element_gradient(grid, field.mode, ws.element_gradient);
  if (aligned) {
    const Eigen::MatrixXd W = centroid_gradient_weights(grid.dim());
    for (int e = 0; e < ne; ++e) {
      if (!grid.is_active(e)) continue;
      // d f_e / d grad = pen * L * d(strain)/d(grad); chained through the
      // centroid gradient to the element's nodes.
      const Eigen::RowVector2d s = -(weighted[e].transpose() * L) * sim.strain_dgrad[e];
      const Eigen::RowVectorXd dn = s * W.topRows(2);
      const auto nodes = grid.element_nodes(e);
      for (int a = 0; a < grid.nodes_per_element(); ++a) ws.gradient[nodes[a]] += dn[a];
    }
  }
  return ws;
}

double adjoint_identity_error(const ForwardModel& model, const SimulationResult& sim, const AdjointWorkspace& ws,
                              const QuadraticForm& Q) {
  const Eigen::VectorXd Qu2 = Q.gradient(sim.u);
  double worst = 0.0;
  for (int i = 1; i <= sim.layers(); ++i) {
    const double lhs = ws.lambda[i].dot(model.stage_loads(sim, i));
    const double rhs = -Qu2.dot(sim.du[i]);
    const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

double objective(const ForwardModel& model, const TimeField& field, const ProjectionParams& params,
                 const QuadraticForm& Q) {
  return Q.evaluate(model.simulate(field, params).u);
}

double fd_directional(const ForwardModel& model, const TimeField& field, const Eigen::VectorXd& direction, double h,
                      const ProjectionParams& params, const QuadraticForm& Q) {
  TimeField plus = field, minus = field;
  plus.values += h * direction;
  minus.values -= h * direction;
  return (objective(model, plus, params, Q) - objective(model, minus, params, Q)) / (2.0 * h);
}

namespace {

void summarize(GradientCheck& out) {
  double sum = 0.0;
  for (std::size_t i = 0; i < out.adjoint.size(); ++i) {
    const double a = out.adjoint[i], f = out.finite_difference[i];
    const double scale = std::max(std::abs(a), std::abs(f));
    const double rel = scale > 0.0 ? std::abs(a - f) / scale : 0.0;
    out.max_relative_error = std::max(out.max_relative_error, rel);
    sum += rel;
  }
  if (!out.adjoint.empty()) out.mean_relative_error = sum / static_cast<double>(out.adjoint.size());
}

}  // namespace

GradientCheck check_components(const ForwardModel& model, const TimeField& field, const ProjectionParams& params,
                               const QuadraticForm& Q, const std::vector<int>& free, int count, unsigned seed,
                               double h, double resolvable) {
  if (free.empty()) throw std::invalid_argument("no free variables to check");
  const SimulationResult sim = model.simulate(field, params);
  const Eigen::VectorXd g = adjoint_gradient(model, sim, field, Q).gradient;

  double biggest = 0.0;
  for (int k : free) biggest = std::max(biggest, std::abs(g[k]));
  std::vector<int> pick;
  for (int k : free)
    if (std::abs(g[k]) >= resolvable * biggest) pick.push_back(k);
  std::mt19937 rng(seed);
  std::shuffle(pick.begin(), pick.end(), rng);
  pick.resize(std::min<std::size_t>(pick.size(), static_cast<std::size_t>(std::max(count, 1))));
  std::sort(pick.begin(), pick.end());

  GradientCheck out;
  out.components = pick;
  for (int k : pick) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(field.values.size());
    dir[k] = 1.0;
    out.adjoint.push_back(g[k]);
    out.finite_difference.push_back(fd_directional(model, field, dir, h, params, Q));
  }
  summarize(out);
  return out;
}

GradientCheck check_directions(const ForwardModel& model, const TimeField& field, const ProjectionParams& params,
                               const QuadraticForm& Q, const std::vector<int>& free, int count, unsigned seed,
                               double h) {
  if (free.empty()) throw std::invalid_argument("no free variables to check");
  const SimulationResult sim = model.simulate(field, params);
  const Eigen::VectorXd g = adjoint_gradient(model, sim, field, Q).gradient;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  GradientCheck out;
  for (int n = 0; n < count; ++n) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(field.values.size());
    for (int k : free) dir[k] = unit(rng);
    out.adjoint.push_back(g.dot(dir));
    out.finite_difference.push_back(fd_directional(model, field, dir, h, params, Q));
  }
  summarize(out);
  return out;
}

}  // namespace seqopt
