#include "seqopt/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seqopt {

double project(double t, double threshold, double beta) {
  const double a = std::tanh(beta * threshold);
  const double den = a + std::tanh(beta * (1.0 - threshold));
  return 1.0 - (a + std::tanh(beta * (t - threshold))) / den;
}

double project_derivative(double t, double threshold, double beta) {
  const double den = std::tanh(beta * threshold) + std::tanh(beta * (1.0 - threshold));
  const double c = std::cosh(beta * (t - threshold));
  return -beta / (c * c * den);
}

void ProjectionParams::validate() const {
  if (layers < 1) throw std::invalid_argument("layer count must be at least 1");
  if (!(beta > 0.0)) throw std::invalid_argument("projection sharpness must be positive");
}

StageDensities stage_densities(const Grid& grid, const Eigen::VectorXd& element_time, const ProjectionParams& p) {
  p.validate();
  const int n = grid.num_elements();
  const int N = p.layers;
  StageDensities s;
  s.layers = N;
  s.rho.assign(N + 1, Eigen::VectorXd::Zero(n));
  s.rho_dt.assign(N + 1, Eigen::VectorXd::Zero(n));
  s.drho.assign(N + 1, Eigen::VectorXd::Zero(n));
  s.drho_dt.assign(N + 1, Eigen::VectorXd::Zero(n));
  for (int e = 0; e < n; ++e) {
    if (!grid.is_active(e)) continue;
    const double t = element_time[e];
    for (int j = 1; j < N; ++j) {
      s.rho[j][e] = project(t, p.threshold(j), p.beta);
      s.rho_dt[j][e] = project_derivative(t, p.threshold(j), p.beta);
    }
    s.rho[N][e] = 1.0;
  }
  for (int j = 1; j <= N; ++j) {
    s.drho[j] = s.rho[j] - s.rho[j - 1];
    s.drho_dt[j] = s.rho_dt[j] - s.rho_dt[j - 1];
  }
  return s;
}

std::vector<int> binary_layers(const Grid& grid, const Eigen::VectorXd& element_time, int layers) {
  std::vector<int> layer(grid.num_elements(), 0);
  for (int e = 0; e < grid.num_elements(); ++e) {
    if (!grid.is_active(e)) continue;
    const double t = std::clamp(element_time[e], 0.0, 1.0);
    layer[e] = std::clamp(static_cast<int>(std::ceil(t * layers)), 1, layers);
  }
  return layer;
}

StageDensities binary_stage_densities(const Grid& grid, const Eigen::VectorXd& element_time, int layers) {
  const int n = grid.num_elements();
  const auto layer = binary_layers(grid, element_time, layers);
  StageDensities s;
  s.layers = layers;
  s.rho.assign(layers + 1, Eigen::VectorXd::Zero(n));
  s.rho_dt.assign(layers + 1, Eigen::VectorXd::Zero(n));
  s.drho.assign(layers + 1, Eigen::VectorXd::Zero(n));
  s.drho_dt.assign(layers + 1, Eigen::VectorXd::Zero(n));
  for (int e = 0; e < n; ++e) {
    if (layer[e] == 0) continue;
    s.drho[layer[e]][e] = 1.0;
    for (int j = layer[e]; j <= layers; ++j) s.rho[j][e] = 1.0;
  }
  return s;
}

double continuation_beta(int iteration, const ContinuationSchedule& schedule) {
  if (iteration < 0) throw std::invalid_argument("iteration must be non-negative");
  const double b = schedule.start + schedule.step * (iteration / std::max(schedule.interval, 1));
  return std::min(schedule.max, b);
}

}  // namespace seqopt
