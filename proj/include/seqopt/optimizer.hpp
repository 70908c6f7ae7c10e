#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqopt/constraints.hpp"
#include "seqopt/measures.hpp"
#include "seqopt/mma.hpp"
#include "seqopt/process.hpp"

namespace seqopt {

struct OptSettings {
  int max_iters = 500;
  ContinuationSchedule continuation;
  double gamma_c = 1e-3;
  double gamma_v = 1e-3;
  MmaSettings mma;
  void validate() const;
};

struct OptProblem {
  const ForwardModel* model = nullptr;
  QuadraticForm measure;
  TimeField initial;
  int layers = 8;
  OptSettings settings;
};

struct LogEntry {
  int iteration = 0;
  double objective = 0.0;
  double g0 = 0.0;
  double volume_violation = 0.0;  // max over j of the violation of -gamma_v <= g_j <= 0
  double beta = 0.0;
  double seconds = 0.0;
};

class RunLog {
public:
  void append(const LogEntry& e);
  const std::vector<LogEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  void write_csv(std::ostream& out) const;

private:
  std::vector<LogEntry> entries_;
};

/// Slack allowed on top of gamma_c / gamma_v when judging the final iterate.
inline constexpr double feasibility_slack = 1e-6;

struct RunReport {
  TimeField field;
  RunLog log;
  double initial_objective = 0.0;
  double final_objective = 0.0;   // smooth layers at the final beta
  double final_beta = 0.0;
  double binary_objective = 0.0;  // hard layers from ceil(t N)
  double g0 = 0.0;
  Eigen::VectorXd volumes;        // g_j, j = 1..N
  bool feasible = false;
  std::vector<int> minmax_violations;
  std::vector<std::string> warnings;
  int restorations = 0;
  bool aborted = false;
  std::string error;
  SimulationResult final_sim;     // smooth, without retained factorizations
  SimulationResult binary_sim;
};

using ProgressFn = std::function<void(const LogEntry&)>;

/// MMA on the free field entries: each iteration simulates at the scheduled
/// beta, takes the adjoint gradient and the constraint values, and moves the
/// field. After the last update the field is evaluated once more and
/// re-simulated with hard layers. A failing stage solve ends the run with
/// `aborted` set and the log kept.
RunReport run(const OptProblem& problem, const ProgressFn& progress = {});

/// round(V* / (h l)), at least 2.
int choose_layer_count(double volume, double thickness, double length);

}  // namespace seqopt
