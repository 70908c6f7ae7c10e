#include "seqopt/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

namespace seqopt {

Grid::Grid(std::array<int, 3> elements, int dim) : dim_(dim), nel_(elements) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
  if (dim == 2) nel_[2] = 0;
  for (int a = 0; a < dim; ++a)
    if (nel_[a] <= 0) throw std::invalid_argument("grid extents must be positive");
  num_elements_ = nel_[0] * nel_[1] * (dim == 3 ? nel_[2] : 1);
  num_nodes_ = (nel_[0] + 1) * (nel_[1] + 1) * (dim == 3 ? nel_[2] + 1 : 1);
  active_.assign(num_elements_, 1);
  num_active_ = num_elements_;
}

std::array<int, 3> Grid::element_coords(int e) const {
  const int i = e % nel_[0];
  const int rest = e / nel_[0];
  return {i, rest % nel_[1], rest / nel_[1]};
}

std::array<int, 3> Grid::node_coords(int n) const {
  const int nx = nel_[0] + 1;
  const int ny = nel_[1] + 1;
  return {n % nx, (n / nx) % ny, n / (nx * ny)};
}

std::array<int, 8> Grid::element_nodes(int e) const {
  const auto [i, j, k] = element_coords(e);
  std::array<int, 8> n{};
  n[0] = node_id(i, j, k);
  n[1] = node_id(i + 1, j, k);
  n[2] = node_id(i + 1, j + 1, k);
  n[3] = node_id(i, j + 1, k);
  if (dim_ == 3) {
    n[4] = node_id(i, j, k + 1);
    n[5] = node_id(i + 1, j, k + 1);
    n[6] = node_id(i + 1, j + 1, k + 1);
    n[7] = node_id(i, j + 1, k + 1);
  }
  return n;
}

Eigen::Vector3d Grid::centroid(int e) const {
  const auto [i, j, k] = element_coords(e);
  return {i + 0.5, j + 0.5, dim_ == 3 ? k + 0.5 : 0.0};
}

Eigen::Vector3d Grid::node_position(int n) const {
  const auto [i, j, k] = node_coords(n);
  return {double(i), double(j), double(k)};
}

void Grid::set_active_mask(std::vector<std::uint8_t> mask) {
  if (static_cast<int>(mask.size()) != num_elements_)
    throw std::invalid_argument("active mask size does not match the grid");
  active_ = std::move(mask);
  num_active_ = static_cast<int>(std::count_if(active_.begin(), active_.end(), [](auto v) { return v != 0; }));
}

void Grid::set_fixed_nodes(std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (int n : nodes)
    if (n < 0 || n >= num_nodes_) throw std::invalid_argument("fixed node id out of range");
  fixed_nodes_ = std::move(nodes);
}

void Grid::set_start_elements(std::vector<int> elements) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  for (int e : elements)
    if (e < 0 || e >= num_elements_) throw std::invalid_argument("start element id out of range");
  start_elements_ = std::move(elements);
}

std::vector<std::uint8_t> Grid::active_node_mask() const {
  std::vector<std::uint8_t> mask(num_nodes_, 0);
  for (int e = 0; e < num_elements_; ++e) {
    if (!active_[e]) continue;
    const auto nodes = element_nodes(e);
    for (int a = 0; a < nodes_per_element(); ++a) mask[nodes[a]] = 1;
  }
  return mask;
}

std::vector<int> Grid::active_neighbors(int e) const {
  const auto [i, j, k] = element_coords(e);
  std::vector<int> out;
  const int kr = dim_ == 3 ? 1 : 0;
  for (int dk = -kr; dk <= kr; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const int ii = i + di, jj = j + dj, kk = k + dk;
        if (ii < 0 || jj < 0 || ii >= nel_[0] || jj >= nel_[1]) continue;
        if (dim_ == 3 && (kk < 0 || kk >= nel_[2])) continue;
        const int n = element_id(ii, jj, kk);
        if (active_[n]) out.push_back(n);
      }
  return out;
}

void Grid::validate() const {
  if (num_active_ == 0) throw std::invalid_argument("grid has no active elements");
  if (fixed_nodes_.empty()) throw std::invalid_argument("grid has no fixed nodes");
  for (int e : start_elements_)
    if (!active_[e]) throw std::invalid_argument("start element " + std::to_string(e) + " is not active");

  // Face connectivity of the active region.
  std::vector<std::uint8_t> seen(num_elements_, 0);
  int first = 0;
  while (!active_[first]) ++first;
  std::vector<int> stack{first};
  seen[first] = 1;
  int reached = 0;
  while (!stack.empty()) {
    const int e = stack.back();
    stack.pop_back();
    ++reached;
    const auto c = element_coords(e);
    for (int axis = 0; axis < dim_; ++axis)
      for (int step : {-1, 1}) {
        auto d = c;
        d[axis] += step;
        if (d[axis] < 0 || d[axis] >= nel_[axis]) continue;
        const int n = element_id(d[0], d[1], d[2]);
        if (active_[n] && !seen[n]) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
  }
  if (reached != num_active_) throw std::invalid_argument("active region is not connected");
}

std::uint64_t Grid::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(dim_));
  for (int v : nel_) mix(static_cast<std::uint64_t>(v));
  for (auto v : active_) mix(v);
  for (int v : fixed_nodes_) mix(static_cast<std::uint64_t>(v));
  for (int v : start_elements_) mix(static_cast<std::uint64_t>(v));
  return h;
}

std::vector<int> bottom_nodes(const Grid& grid) {
  const auto mask = grid.active_node_mask();
  const int up = grid.dim() - 1;
  std::vector<int> out;
  for (int n = 0; n < grid.num_nodes(); ++n)
    if (mask[n] && grid.node_coords(n)[up] == 0) out.push_back(n);
  return out;
}

std::vector<int> start_region_elements(const Grid& grid, StartRegion start) {
  const int up = grid.dim() - 1;
  std::vector<int> out;
  for (int e = 0; e < grid.num_elements(); ++e) {
    if (!grid.is_active(e) || grid.element_coords(e)[up] != 0) continue;
    out.push_back(e);
    if (start == StartRegion::corner) break;
  }
  if (out.empty()) throw std::invalid_argument("no active element touches the build plate");
  return out;
}

namespace {

void finish_boundary(Grid& grid, StartRegion start) {
  grid.set_fixed_nodes(bottom_nodes(grid));
  grid.set_start_elements(start_region_elements(grid, start));
  grid.validate();
}

Grid make_lshape2d(std::array<int, 3> res) {
  const int nx = res[0], ny = res[1];
  if (nx % 2 != 0 || ny % 2 != 0) throw std::invalid_argument("lshape2d needs even extents");
  Grid g({nx, ny, 0}, 2);
  std::vector<std::uint8_t> mask(g.num_elements(), 1);
  const double fx = nx * (1.0 - preset_geometry::lshape_notch_fraction);
  const double fy = ny * preset_geometry::lshape_notch_fraction;
  for (int e = 0; e < g.num_elements(); ++e) {
    const auto c = g.centroid(e);
    if (c.x() > fx && c.y() < fy) mask[e] = 0;
  }
  g.set_active_mask(std::move(mask));
  return g;
}

Grid make_lshape3d(std::array<int, 3> res) {
  const int nx = res[0], ny = res[1], nz = res[2];
  if (nx % 2 != 0 || nz % 2 != 0 || ny <= 0) throw std::invalid_argument("lshape3d needs even x and z extents");
  Grid g({nx, ny, nz}, 3);
  std::vector<std::uint8_t> mask(g.num_elements(), 1);
  const double fx = nx * (1.0 - preset_geometry::lshape_notch_fraction);
  const double fz = nz * preset_geometry::lshape_notch_fraction;
  for (int e = 0; e < g.num_elements(); ++e) {
    const auto c = g.centroid(e);
    if (c.x() > fx && c.z() < fz) mask[e] = 0;
  }
  g.set_active_mask(std::move(mask));
  return g;
}

Grid make_bracket2d(std::array<int, 3> res) {
  namespace pg = preset_geometry;
  const int nx = res[0], ny = res[1];
  if (static_cast<long>(nx) * 2 != static_cast<long>(ny) * 3)
    throw std::invalid_argument("bracket2d needs a 3:2 aspect ratio");
  Grid g({nx, ny, 0}, 2);
  const double sx = pg::bracket_ref_width / nx;
  const double sy = pg::bracket_ref_height / ny;
  std::vector<std::uint8_t> mask(g.num_elements(), 0);
  for (int e = 0; e < g.num_elements(); ++e) {
    const auto c = g.centroid(e);
    const double x = c.x() * sx, y = c.y() * sy;
    const double r = std::hypot(x - pg::bracket_center_x, y - pg::bracket_center_y);
    const bool plate = y <= pg::bracket_plate_height;
    const bool lug = x >= pg::bracket_lug_left && x <= pg::bracket_lug_right && y <= pg::bracket_center_y;
    const bool cap = r <= pg::bracket_outer_radius;
    const bool hole = r <= pg::bracket_hole_radius;
    mask[e] = (plate || lug || cap) && !hole;
  }
  g.set_active_mask(std::move(mask));
  return g;
}

}  // namespace

Grid build_preset(std::string_view name, std::array<int, 3> resolution, StartRegion start) {
  Grid g;
  if (name == "lshape2d") {
    g = make_lshape2d(resolution);
  } else if (name == "bracket2d") {
    g = make_bracket2d(resolution);
  } else if (name == "square2d") {
    g = Grid({resolution[0], resolution[1], 0}, 2);
  } else if (name == "lshape3d") {
    g = make_lshape3d(resolution);
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  g.name = std::string(name);
  finish_boundary(g, start);
  return g;
}

Grid grid_from_mask(std::array<int, 3> elements, int dim, std::vector<std::uint8_t> mask, StartRegion start) {
  Grid g(elements, dim);
  g.set_active_mask(std::move(mask));
  g.name = "external-mask";
  finish_boundary(g, start);
  return g;
}

namespace {

// Dijkstra over an implicit graph. `visit(v, relax)` calls relax(w, length)
// for each neighbour w of v.
template <class Visit>
std::vector<double> shortest_paths(int count, const std::vector<int>& sources, Visit visit) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(count, inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int s : sources) {
    dist[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    visit(v, [&](int w, double len) {
      if (d + len < dist[w]) {
        dist[w] = d + len;
        heap.emplace(dist[w], w);
      }
    });
  }
  return dist;
}

Eigen::VectorXd normalize_distances(const std::vector<double>& dist, const std::vector<std::uint8_t>& include,
                                    const char* what) {
  double dmax = 0.0;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (!include[v]) continue;
    if (!std::isfinite(dist[v]))
      throw std::invalid_argument(std::string(what) + " " + std::to_string(v) + " is unreachable from the start region");
    dmax = std::max(dmax, dist[v]);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dist.size()));
  for (std::size_t v = 0; v < dist.size(); ++v)
    if (include[v] && dmax > 0.0) out[static_cast<Eigen::Index>(v)] = dist[v] / dmax;
  return out;
}

}  // namespace

Eigen::VectorXd geodesic_element_distance(const Grid& grid) {
  if (grid.start_elements().empty()) throw std::invalid_argument("start region is empty");
  const auto dist = shortest_paths(grid.num_elements(), grid.start_elements(), [&](int e, auto&& relax) {
    const auto c = grid.element_coords(e);
    for (int n : grid.active_neighbors(e)) {
      const auto d = grid.element_coords(n);
      const int steps = std::abs(d[0] - c[0]) + std::abs(d[1] - c[1]) + std::abs(d[2] - c[2]);
      relax(n, std::sqrt(static_cast<double>(steps)));
    }
  });
  return normalize_distances(dist, grid.active_mask(), "element");
}

Eigen::VectorXd geodesic_node_distance(const Grid& grid, const std::vector<int>& sources) {
  if (sources.empty()) throw std::invalid_argument("start region is empty");
  // Node -> incident active elements.
  std::vector<std::vector<int>> incident(grid.num_nodes());
  for (int e = 0; e < grid.num_elements(); ++e) {
    if (!grid.is_active(e)) continue;
    const auto nodes = grid.element_nodes(e);
    for (int a = 0; a < grid.nodes_per_element(); ++a) incident[nodes[a]].push_back(e);
  }
  const auto dist = shortest_paths(grid.num_nodes(), sources, [&](int v, auto&& relax) {
    const Eigen::Vector3d pv = grid.node_position(v);
    for (int e : incident[v]) {
      const auto nodes = grid.element_nodes(e);
      for (int a = 0; a < grid.nodes_per_element(); ++a)
        if (nodes[a] != v) relax(nodes[a], (grid.node_position(nodes[a]) - pv).norm());
    }
  });
  return normalize_distances(dist, grid.active_node_mask(), "node");
}

namespace {

std::vector<int> sample_evenly(const std::vector<int>& sorted, int samples) {
  if (samples <= 0 || samples >= static_cast<int>(sorted.size())) return sorted;
  std::vector<int> out;
  const double step = (sorted.size() - 1.0) / (samples - 1.0);
  for (int s = 0; s < samples; ++s) out.push_back(sorted[static_cast<std::size_t>(std::lround(s * step))]);
  return out;
}

bool in_box(const NodeSelector& sel, const Eigen::Vector3d& p) {
  for (int a = 0; a < 3; ++a) {
    if (sel.box_lo && p[a] < (*sel.box_lo)[a] - 1e-9) return false;
    if (sel.box_hi && p[a] > (*sel.box_hi)[a] + 1e-9) return false;
  }
  return true;
}

}  // namespace

std::vector<int> resolve_nodes(const Grid& grid, const NodeSelector& sel) {
  const auto attached = grid.active_node_mask();
  std::vector<int> out;
  switch (sel.kind) {
    case NodeSelector::Kind::list:
      for (int n : sel.nodes) {
        if (n < 0 || n >= grid.num_nodes()) throw std::invalid_argument("node id out of range in node list");
        out.push_back(n);
      }
      break;
    case NodeSelector::Kind::point: {
      std::array<int, 3> c{0, 0, 0};
      for (int a = 0; a < grid.dim(); ++a) {
        c[a] = sel.point[a] < 0 ? grid.nel(a) + 1 + sel.point[a] : sel.point[a];
        if (c[a] < 0 || c[a] > grid.nel(a)) throw std::invalid_argument("point selector outside grid");
      }
      const int n = grid.node_id(c[0], c[1], c[2]);
      if (attached[n]) out.push_back(n);
      break;
    }
    case NodeSelector::Kind::plane: {
      if (sel.axis < 0 || sel.axis >= grid.dim()) throw std::invalid_argument("plane selector axis out of range");
      const int pos = sel.position < 0 ? grid.nel(sel.axis) + 1 + sel.position : sel.position;
      if (pos < 0 || pos > grid.nel(sel.axis)) throw std::invalid_argument("plane selector position outside grid");
      std::vector<int> all;
      for (int n = 0; n < grid.num_nodes(); ++n)
        if (attached[n] && grid.node_coords(n)[sel.axis] == pos && in_box(sel, grid.node_position(n)))
          all.push_back(n);
      if (grid.dim() == 2 || sel.samples <= 0) {
        out = sample_evenly(all, sel.samples);
      } else {
        // Lattice sampling over the two in-plane axes.
        const int a0 = sel.axis == 0 ? 1 : 0;
        const int a1 = sel.axis == 2 ? 1 : 2;
        int lo0 = grid.nel(a0), hi0 = 0, lo1 = grid.nel(a1), hi1 = 0;
        for (int n : all) {
          const auto c = grid.node_coords(n);
          lo0 = std::min(lo0, c[a0]);
          hi0 = std::max(hi0, c[a0]);
          lo1 = std::min(lo1, c[a1]);
          hi1 = std::max(hi1, c[a1]);
        }
        std::vector<std::uint8_t> in_set(grid.num_nodes(), 0);
        for (int n : all) in_set[n] = 1;
        const int s = std::max(sel.samples, 2);
        for (int u = 0; u < s; ++u)
          for (int v = 0; v < s; ++v) {
            std::array<int, 3> c{};
            c[sel.axis] = pos;
            c[a0] = static_cast<int>(std::lround(lo0 + (hi0 - lo0) * u / (s - 1.0)));
            c[a1] = static_cast<int>(std::lround(lo1 + (hi1 - lo1) * v / (s - 1.0)));
            const int n = grid.node_id(c[0], c[1], c[2]);
            if (in_set[n]) out.push_back(n);
          }
      }
      break;
    }
    case NodeSelector::Kind::circle: {
      if (grid.dim() != 2) throw std::invalid_argument("circle selector is 2D only");
      std::vector<int> all;
      for (int n = 0; n < grid.num_nodes(); ++n) {
        if (!attached[n]) continue;
        const auto p = grid.node_position(n);
        const double r = std::hypot(p.x() - sel.center[0], p.y() - sel.center[1]);
        if (std::abs(r - sel.radius) <= sel.tolerance) all.push_back(n);
      }
      if (sel.samples > 0) {
        auto angle = [&](int n) {
          const auto p = grid.node_position(n);
          return std::atan2(p.y() - sel.center[1], p.x() - sel.center[0]);
        };
        std::sort(all.begin(), all.end(), [&](int a, int b) { return angle(a) < angle(b); });
      }
      out = sample_evenly(all, sel.samples);
      break;
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw std::invalid_argument("node selector resolved to an empty set");
  return out;
}

}  // namespace seqopt
