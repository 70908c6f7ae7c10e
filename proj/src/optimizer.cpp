#include "seqopt/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "seqopt/sensitivity.hpp"

namespace seqopt {

void OptSettings::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be non-negative");
  if (!(gamma_c > 0.0) || !(gamma_v > 0.0)) throw std::invalid_argument("gamma_c and gamma_v must be positive");
  if (!(continuation.start > 0.0) || continuation.step < 0.0 || continuation.interval < 1 ||
      continuation.max < continuation.start)
    throw std::invalid_argument("continuation schedule is malformed");
  mma.validate();
}

void RunLog::append(const LogEntry& e) {
  if (!std::isfinite(e.objective)) throw std::runtime_error("objective is not finite");
  entries_.push_back(e);
}

void RunLog::write_csv(std::ostream& out) const {
  out << "iteration,objective,g0,volume_violation,beta,seconds\n";
  const auto old = out.precision(17);
  for (const auto& e : entries_)
    out << e.iteration << ',' << e.objective << ',' << e.g0 << ',' << e.volume_violation << ',' << e.beta << ','
        << e.seconds << '\n';
  out.precision(old);
}

int choose_layer_count(double volume, double thickness, double length) {
  if (!(volume > 0.0) || !(thickness > 0.0) || !(length > 0.0))
    throw std::invalid_argument("layer count needs positive volume, thickness and length");
  return std::max(2, static_cast<int>(std::lround(volume / (thickness * length))));
}

namespace {

struct Evaluation {
  SimulationResult sim;
  double objective = 0.0;
  Eigen::VectorXd gradient;
  ValueAndGradient g0;
  LayerVolumes volumes;
};

Evaluation evaluate(const OptProblem& pb, const FieldLayout& layout, const TimeField& field, double beta,
                    bool gradients) {
  Evaluation ev;
  const ProjectionParams params{pb.layers, beta};
  ev.sim = pb.model->simulate(field, params);
  ev.objective = pb.measure.evaluate(ev.sim.u);
  if (gradients) ev.gradient = adjoint_gradient(*pb.model, ev.sim, field, pb.measure).gradient;
  ev.g0 = continuity(field, layout);
  ev.volumes = layer_volumes(pb.model->grid(), ev.sim.densities, field.mode);
  return ev;
}

}  // namespace

RunReport run(const OptProblem& pb, const ProgressFn& progress) {
  if (!pb.model) throw std::invalid_argument("optimization problem has no model");
  pb.settings.validate();
  ProjectionParams{pb.layers, pb.settings.continuation.start}.validate();
  const Grid& grid = pb.model->grid();
  const FieldLayout layout = make_layout(grid, pb.initial.mode);
  if (pb.initial.values.size() != layout.size) throw std::invalid_argument("initial field does not fit the grid");
  if (pb.measure.num_dofs() != grid.num_dofs()) throw std::invalid_argument("measure does not fit the grid");
  const auto& free = layout.free;
  const int n = static_cast<int>(free.size());
  if (n == 0) throw std::invalid_argument("no free field entries to optimize");
  const int N = pb.layers;
  const double gc = pb.settings.gamma_c, gv = pb.settings.gamma_v;

  RunReport rep;
  rep.field = pb.initial;
  sanitize(rep.field, layout);
  if (pb.model->material().strain_penalty_below_stiffness_penalty()) {
    std::ostringstream w;
    w << "strain penalty q=" << pb.model->material().q << " is below stiffness penalty p=" << pb.model->material().p
      << "; layer volume constraints may not be satisfiable";
    rep.warnings.push_back(w.str());
  }

  Mma mma(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n), 2 * N + 1, pb.settings.mma);
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  double scale = 1.0;

  auto record = [&](int iter, const Evaluation& ev, double beta) {
    LogEntry e{iter, ev.objective, ev.g0.value, max_volume_violation(ev.volumes.values, gv), beta, seconds()};
    rep.log.append(e);
    if (progress) progress(e);
  };

  try {
    for (int k = 0; k < pb.settings.max_iters; ++k) {
      const double beta = continuation_beta(k, pb.settings.continuation);
      const Evaluation ev = evaluate(pb, layout, rep.field, beta, true);
      if (k == 0) {
        rep.initial_objective = ev.objective;
        if (ev.objective > 0.0) scale = ev.objective;
      }
      record(k, ev, beta);

      Eigen::VectorXd x(n), df0(n), fval(2 * N + 1);
      Eigen::MatrixXd dfdx(2 * N + 1, n);
      for (int i = 0; i < n; ++i) {
        x[i] = rep.field.values[free[i]];
        df0[i] = ev.gradient[free[i]] / scale;
        dfdx(0, i) = ev.g0.gradient[free[i]] / gc;
      }
      fval[0] = ev.g0.value / gc - 1.0;
      for (int j = 0; j < N; ++j) {
        fval[1 + j] = ev.volumes.values[j] / gv;
        fval[1 + N + j] = -ev.volumes.values[j] / gv - 1.0;
        for (int i = 0; i < n; ++i) {
          dfdx(1 + j, i) = ev.volumes.gradients[j][free[i]] / gv;
          dfdx(1 + N + j, i) = -dfdx(1 + j, i);
        }
      }
      // The constraints need no stage solves, so trial points are checked against them.
      const ConstraintFn constraints = [&](const Eigen::VectorXd& trial) {
        TimeField t = rep.field;
        for (int i = 0; i < n; ++i) t.values[free[i]] = trial[i];
        sanitize(t, layout);
        const LayerVolumes v = layer_volumes(grid, t, ProjectionParams{N, beta});
        Eigen::VectorXd out(2 * N + 1);
        out[0] = continuity(t, layout).value / gc - 1.0;
        for (int j = 0; j < N; ++j) {
          out[1 + j] = v.values[j] / gv;
          out[1 + N + j] = -v.values[j] / gv - 1.0;
        }
        return out;
      };
      const MmaResult step = mma.update(x, ev.objective / scale, df0, fval, dfdx, constraints);
      if (step.restored) {
        ++rep.restorations;
        rep.warnings.push_back("iteration " + std::to_string(k) + ": MMA subproblem failed, took a restoration step");
      }
      for (int i = 0; i < n; ++i) rep.field.values[free[i]] = step.x[i];
      sanitize(rep.field, layout);
    }

    rep.final_beta = continuation_beta(pb.settings.max_iters, pb.settings.continuation);
    Evaluation last = evaluate(pb, layout, rep.field, rep.final_beta, false);
    if (pb.settings.max_iters == 0) rep.initial_objective = last.objective;
    record(pb.settings.max_iters, last, rep.final_beta);
    rep.final_objective = last.objective;
    rep.g0 = last.g0.value;
    rep.volumes = last.volumes.values;
    last.sim.solvers.clear();
    rep.final_sim = std::move(last.sim);

    rep.binary_sim = pb.model->simulate_binary(rep.field, N);
    rep.binary_sim.solvers.clear();
    rep.binary_objective = pb.measure.evaluate(rep.binary_sim.u);
  } catch (const SolverError& err) {
    rep.aborted = true;
    rep.error = err.what();
    return rep;
  }

  rep.minmax_violations = verify_min_max(rep.field, layout);
  rep.feasible = rep.g0 <= gc + feasibility_slack;
  if (!rep.feasible) {
    std::ostringstream w;
    w << "continuity constraint violated: g0=" << rep.g0 << " > " << gc;
    rep.warnings.push_back(w.str());
  }
  for (int j = 0; j < N; ++j) {
    const double g = rep.volumes[j];
    if (g > feasibility_slack || g < -gv - feasibility_slack) {
      rep.feasible = false;
      std::ostringstream w;
      w << "volume constraint of layer " << j + 1 << " violated: g=" << g << " outside [" << -gv << ", 0]";
      rep.warnings.push_back(w.str());
    }
  }
  return rep;
}

}  // namespace seqopt
