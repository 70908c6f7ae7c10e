#include "seqopt/timefield.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace seqopt {

std::string_view to_string(FieldMode mode) { return mode == FieldMode::element ? "element" : "node"; }

FieldMode field_mode_from_string(std::string_view s) {
  if (s == "element") return FieldMode::element;
  if (s == "node") return FieldMode::node;
  throw std::invalid_argument("unknown field mode '" + std::string(s) + "'");
}

FieldLayout make_layout(const Grid& grid, FieldMode mode) {
  FieldLayout lay;
  lay.mode = mode;
  if (mode == FieldMode::element) {
    lay.size = grid.num_elements();
    lay.relevant = grid.active_mask();
    lay.pinned.assign(lay.size, 0);
    for (int e : grid.start_elements()) lay.pinned[e] = 1;
    lay.neighbors.resize(lay.size);
    for (int e = 0; e < lay.size; ++e)
      if (lay.relevant[e]) lay.neighbors[e] = grid.active_neighbors(e);
  } else {
    lay.size = grid.num_nodes();
    lay.relevant = grid.active_node_mask();
    lay.pinned.assign(lay.size, 0);
    std::vector<std::uint8_t> fixed(lay.size, 0);
    for (int n : grid.fixed_nodes()) fixed[n] = 1;
    std::vector<int> start_nodes;
    for (int e : grid.start_elements()) {
      const auto nodes = grid.element_nodes(e);
      start_nodes.insert(start_nodes.end(), nodes.begin(), nodes.begin() + grid.nodes_per_element());
    }
    bool any_fixed = false;
    for (int n : start_nodes) any_fixed = any_fixed || fixed[n];
    for (int n : start_nodes)
      if (!any_fixed || fixed[n]) lay.pinned[n] = 1;

    // Nodes sharing an active element.
    std::vector<std::vector<int>> nb(lay.size);
    for (int e = 0; e < grid.num_elements(); ++e) {
      if (!grid.is_active(e)) continue;
      const auto nodes = grid.element_nodes(e);
      for (int a = 0; a < grid.nodes_per_element(); ++a)
        for (int b = 0; b < grid.nodes_per_element(); ++b)
          if (a != b) nb[nodes[a]].push_back(nodes[b]);
    }
    for (auto& v : nb) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    lay.neighbors = std::move(nb);
  }
  for (int i = 0; i < lay.size; ++i)
    if (lay.relevant[i] && !lay.pinned[i]) lay.free.push_back(i);
  return lay;
}

TimeField init_time_field(const Grid& grid, FieldMode mode) {
  if (grid.start_elements().empty()) throw std::invalid_argument("start region is empty");
  TimeField f{mode, {}};
  if (mode == FieldMode::element) {
    f.values = geodesic_element_distance(grid);
  } else {
    const auto lay = make_layout(grid, mode);
    std::vector<int> sources;
    for (int n = 0; n < lay.size; ++n)
      if (lay.pinned[n]) sources.push_back(n);
    f.values = geodesic_node_distance(grid, sources);
  }
  return f;
}

TimeField planar_time_field(const Grid& grid, FieldMode mode) {
  const int up = grid.dim() - 1;
  const auto lay = make_layout(grid, mode);
  TimeField f{mode, Eigen::VectorXd::Zero(lay.size)};
  int top = 0;
  auto height = [&](int i) {
    return mode == FieldMode::element ? grid.element_coords(i)[up] : grid.node_coords(i)[up];
  };
  for (int i = 0; i < lay.size; ++i)
    if (lay.relevant[i]) top = std::max(top, height(i));
  for (int i = 0; i < lay.size; ++i)
    if (lay.relevant[i] && !lay.pinned[i] && top > 0) f.values[i] = double(height(i)) / top;
  return f;
}

double centroid_value(const Grid& grid, const Eigen::VectorXd& node_values, int e) {
  const auto nodes = grid.element_nodes(e);
  const int npe = grid.nodes_per_element();
  double s = 0.0;
  for (int a = 0; a < npe; ++a) s += node_values[nodes[a]];
  return s / npe;
}

Eigen::MatrixXd centroid_gradient_weights(int dim) {
  // Reference-corner signs in element node order.
  static constexpr int sx[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
  static constexpr int sy[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
  static constexpr int sz[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
  const int npe = dim == 2 ? 4 : 8;
  // Unit element: d/dx = 2 d/dxi; dN/dxi at the centre = sign / npe * 2 / 2.
  const double w = 2.0 / npe;
  Eigen::MatrixXd g(dim, npe);
  for (int a = 0; a < npe; ++a) {
    g(0, a) = w * sx[a];
    g(1, a) = w * sy[a];
    if (dim == 3) g(2, a) = w * sz[a];
  }
  return g;
}

Eigen::Vector3d centroid_gradient(const Grid& grid, const Eigen::VectorXd& node_values, int e) {
  const auto nodes = grid.element_nodes(e);
  const Eigen::MatrixXd w = centroid_gradient_weights(grid.dim());
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (int a = 0; a < grid.nodes_per_element(); ++a)
    for (int d = 0; d < grid.dim(); ++d) g[d] += w(d, a) * node_values[nodes[a]];
  return g;
}

Eigen::VectorXd element_times(const Grid& grid, const TimeField& field) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(grid.num_elements());
  if (field.mode == FieldMode::element) {
    if (field.values.size() != grid.num_elements()) throw std::invalid_argument("element field size mismatch");
    for (int e = 0; e < grid.num_elements(); ++e)
      if (grid.is_active(e)) t[e] = field.values[e];
  } else {
    if (field.values.size() != grid.num_nodes()) throw std::invalid_argument("node field size mismatch");
    for (int e = 0; e < grid.num_elements(); ++e)
      if (grid.is_active(e)) t[e] = centroid_value(grid, field.values, e);
  }
  return t;
}

Eigen::VectorXd scatter_element_gradient(const Grid& grid, FieldMode mode, const Eigen::VectorXd& element_gradient) {
  if (mode == FieldMode::element) {
    Eigen::VectorXd g = element_gradient;
    for (int e = 0; e < grid.num_elements(); ++e)
      if (!grid.is_active(e)) g[e] = 0.0;
    return g;
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(grid.num_nodes());
  const int npe = grid.nodes_per_element();
  for (int e = 0; e < grid.num_elements(); ++e) {
    if (!grid.is_active(e)) continue;
    const auto nodes = grid.element_nodes(e);
    for (int a = 0; a < npe; ++a) g[nodes[a]] += element_gradient[e] / npe;
  }
  return g;
}

void sanitize(TimeField& field, const FieldLayout& layout) {
  if (field.values.size() != layout.size) throw std::invalid_argument("field size does not match layout");
  for (int i = 0; i < layout.size; ++i) {
    if (!layout.relevant[i] || layout.pinned[i])
      field.values[i] = 0.0;
    else
      field.values[i] = std::clamp(field.values[i], 0.0, 1.0);
  }
}

}  // namespace seqopt
