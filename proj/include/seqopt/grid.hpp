#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace seqopt {

/// Structured grid of unit elements (squares in 2D, cubes in 3D).
///
/// Element (i, j[, k]) occupies [i, i+1] x [j, j+1] [x [k, k+1]]; the last
/// axis is the build direction, so the build plate is the plane at 0 along
/// it. Node and element ids run x fastest, then y, then z.
///
/// Corner ordering inside an element is counter-clockwise on the bottom face
/// starting at the lowest corner, followed (3D) by the top face in the same
/// order. All element kernels in fem.hpp use this ordering.
class Grid {
public:
  Grid() = default;
  /// Full rectangle/box, everything active, no boundary conditions yet.
  explicit Grid(std::array<int, 3> elements, int dim);

  int dim() const { return dim_; }
  const std::array<int, 3>& extents() const { return nel_; }
  int nel(int axis) const { return nel_[axis]; }

  int num_elements() const { return num_elements_; }
  int num_nodes() const { return num_nodes_; }
  int num_dofs() const { return num_nodes_ * dim_; }
  int nodes_per_element() const { return dim_ == 2 ? 4 : 8; }
  int num_active() const { return num_active_; }

  int element_id(int i, int j, int k = 0) const { return i + nel_[0] * (j + nel_[1] * k); }
  int node_id(int i, int j, int k = 0) const { return i + (nel_[0] + 1) * (j + (nel_[1] + 1) * k); }
  std::array<int, 3> element_coords(int e) const;
  std::array<int, 3> node_coords(int n) const;

  /// Corner node ids of element `e`; only the first nodes_per_element() are used.
  std::array<int, 8> element_nodes(int e) const;
  Eigen::Vector3d centroid(int e) const;
  Eigen::Vector3d node_position(int n) const;

  bool is_active(int e) const { return active_[e] != 0; }
  const std::vector<std::uint8_t>& active_mask() const { return active_; }
  void set_active_mask(std::vector<std::uint8_t> mask);

  const std::vector<int>& fixed_nodes() const { return fixed_nodes_; }
  void set_fixed_nodes(std::vector<int> nodes);
  const std::vector<int>& start_elements() const { return start_elements_; }
  void set_start_elements(std::vector<int> elements);

  /// Nodes touched by at least one active element.
  std::vector<std::uint8_t> active_node_mask() const;

  /// Active elements sharing a face, edge or corner with `e` (8 / 26 stencil).
  std::vector<int> active_neighbors(int e) const;

  /// Checks the invariants: start elements active, fixed nodes present,
  /// active region face-connected. Throws std::invalid_argument.
  void validate() const;

  /// FNV-1a hash of the extents, mask and boundary sets.
  std::uint64_t fingerprint() const;

  std::string name;

private:
  int dim_ = 2;
  std::array<int, 3> nel_{0, 0, 1};
  int num_elements_ = 0;
  int num_nodes_ = 0;
  int num_active_ = 0;
  std::vector<std::uint8_t> active_;
  std::vector<int> fixed_nodes_;
  std::vector<int> start_elements_;
};

enum class StartRegion { corner, bottom };

/// Geometry parameters of the built-in benchmark shapes, in units of the
/// reference resolution they were drawn at. Exposed so tests and reports can
/// reproduce the rasterization.
namespace preset_geometry {
// L-shape: the lower-right quarter is removed, leaving an overhanging arm.
inline constexpr double lshape_notch_fraction = 0.5;
// Bracket drawn on a 144 x 96 canvas.
inline constexpr double bracket_ref_width = 144.0;
inline constexpr double bracket_ref_height = 96.0;
inline constexpr double bracket_plate_height = 18.0;
inline constexpr double bracket_lug_left = 36.0;
inline constexpr double bracket_lug_right = 108.0;
inline constexpr double bracket_center_x = 72.0;
inline constexpr double bracket_center_y = 60.0;
inline constexpr double bracket_outer_radius = 36.0;
inline constexpr double bracket_hole_radius = 16.0;
}  // namespace preset_geometry

/// Builds one of the benchmark domains: lshape2d, bracket2d, square2d,
/// lshape3d. Bottom nodes of the component are fixed.
Grid build_preset(std::string_view name, std::array<int, 3> resolution,
                  StartRegion start = StartRegion::corner);

/// Grid from an explicit occupancy mask (length = product of extents).
Grid grid_from_mask(std::array<int, 3> elements, int dim, std::vector<std::uint8_t> mask,
                    StartRegion start = StartRegion::corner);

/// Nodes on the build plate that belong to active elements.
std::vector<int> bottom_nodes(const Grid& grid);
std::vector<int> start_region_elements(const Grid& grid, StartRegion start);

/// Normalized geodesic distance from the start elements through active
/// elements (8/26-neighbour graph, Euclidean step lengths). Inactive entries
/// are 0. Throws if an active element cannot be reached.
Eigen::VectorXd geodesic_element_distance(const Grid& grid);

/// Same on nodes of active elements, starting from `sources`; the graph joins
/// corners of a common active element.
Eigen::VectorXd geodesic_node_distance(const Grid& grid, const std::vector<int>& sources);

/// Declarative node set.
struct NodeSelector {
  enum class Kind { plane, point, circle, list };
  Kind kind = Kind::plane;

  // plane: nodes with coordinate[axis] == position (negative position counts
  // from the far end, -1 meaning the last node plane), optionally restricted
  // to a box [lo, hi] on every axis.
  int axis = 1;
  int position = -1;
  std::optional<std::array<double, 3>> box_lo;
  std::optional<std::array<double, 3>> box_hi;
  // plane/circle: number of equally spaced samples (0 = all). In 3D a plane
  // is sampled on a samples x samples lattice.
  int samples = 0;

  // point: node coordinates; negative values count from the far end.
  std::array<int, 3> point{0, 0, 0};

  // circle (2D): nodes within `tolerance` of the circle.
  std::array<double, 2> center{0.0, 0.0};
  double radius = 0.0;
  double tolerance = 0.5;

  std::vector<int> nodes;
};

/// Sorted unique node ids selected by `sel`, restricted to nodes of active
/// elements (except for explicit lists). Throws if the result is empty.
std::vector<int> resolve_nodes(const Grid& grid, const NodeSelector& sel);

}  // namespace seqopt
