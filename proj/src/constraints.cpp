#include "seqopt/constraints.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace seqopt {

ValueAndGradient continuity(const TimeField& field, const FieldLayout& layout) {
  if (field.values.size() != layout.size) throw std::invalid_argument("field size does not match layout");
  const auto& t = field.values;
  ValueAndGradient out;
  out.gradient = Eigen::VectorXd::Zero(layout.size);
  int count = 0;
  for (int e = 0; e < layout.size; ++e)
    if (layout.relevant[e] && !layout.pinned[e]) ++count;
  if (count == 0) return out;

  for (int e = 0; e < layout.size; ++e) {
    if (!layout.relevant[e] || layout.pinned[e]) continue;
    const auto& nb = layout.neighbors[e];
    if (nb.empty()) throw std::invalid_argument("entry " + std::to_string(e) + " has no neighbours");
    double mean = 0.0;
    for (int i : nb) mean += t[i];
    mean /= static_cast<double>(nb.size());
    const double r = t[e] - mean;
    out.value += r * r;
    const double w = 2.0 * r / count;
    out.gradient[e] += w;
    for (int i : nb) out.gradient[i] -= w / static_cast<double>(nb.size());
  }
  out.value /= count;
  return out;
}

std::vector<int> verify_min_max(const TimeField& field, const FieldLayout& layout, double tolerance) {
  const auto& t = field.values;
  std::vector<int> bad;
  // Entries with a truncated neighbourhood lie on the contour, where a maximum is a free edge.
  std::size_t full = 0;
  for (const auto& n : layout.neighbors) full = std::max(full, n.size());
  for (int e = 0; e < layout.size; ++e) {
    if (!layout.relevant[e] || layout.pinned[e] || layout.neighbors[e].empty()) continue;
    const bool contour = layout.neighbors[e].size() < full;
    double lo = t[layout.neighbors[e].front()], hi = lo;
    for (int i : layout.neighbors[e]) {
      lo = std::min(lo, t[i]);
      hi = std::max(hi, t[i]);
    }
    if (t[e] < lo - tolerance || (!contour && t[e] > hi + tolerance)) bad.push_back(e);
  }
  return bad;
}

LayerVolumes layer_volumes(const Grid& grid, const StageDensities& densities, FieldMode mode) {
  const int N = densities.layers;
  const double vstar = grid.num_active();
  LayerVolumes out;
  out.values.resize(N);
  out.gradients.resize(N);
  for (int j = 1; j <= N; ++j) {
    double v = 0.0;
    for (int e = 0; e < grid.num_elements(); ++e)
      if (grid.is_active(e)) v += densities.rho[j][e];
    out.values[j - 1] = v / vstar - static_cast<double>(j) / N;
    out.gradients[j - 1] = scatter_element_gradient(grid, mode, densities.rho_dt[j] / vstar);
  }
  return out;
}

LayerVolumes layer_volumes(const Grid& grid, const TimeField& field, const ProjectionParams& params) {
  return layer_volumes(grid, stage_densities(grid, element_times(grid, field), params), field.mode);
}

double max_volume_violation(const Eigen::VectorXd& g, double gamma_v) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) worst = std::max({worst, g[j], -gamma_v - g[j]});
  return worst;
}

}  // namespace seqopt
