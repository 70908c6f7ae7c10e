#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "seqopt/grid.hpp"

namespace seqopt {

enum class FieldMode { element, node };

std::string_view to_string(FieldMode mode);
FieldMode field_mode_from_string(std::string_view s);

/// Pseudo-time field. `values` spans the whole grid (elements or nodes);
/// entries outside the component are kept at 0 and ignored.
struct TimeField {
  FieldMode mode = FieldMode::element;
  Eigen::VectorXd values;
};

/// Which entries of a field are design variables, which are pinned to the
/// start time, and who neighbours whom for the continuity measure.
struct FieldLayout {
  FieldMode mode = FieldMode::element;
  int size = 0;
  std::vector<std::uint8_t> relevant;  // active elements, or nodes of active elements
  std::vector<std::uint8_t> pinned;    // start region, held at t = 0
  std::vector<int> free;               // relevant and not pinned, ascending
  std::vector<std::vector<int>> neighbors;
};

/// Element mode pins the start elements. Node mode pins the start elements'
/// nodes that sit on fixed nodes, or all their nodes if none do.
FieldLayout make_layout(const Grid& grid, FieldMode mode);

/// Normalized geodesic distance from the start region (0 on pinned entries).
TimeField init_time_field(const Grid& grid, FieldMode mode = FieldMode::element);

/// Height above the build plate, normalized over the component: planar layers.
TimeField planar_time_field(const Grid& grid, FieldMode mode = FieldMode::element);

/// Bilinear/trilinear interpolant at the element centroid: the corner mean.
double centroid_value(const Grid& grid, const Eigen::VectorXd& node_values, int e);

/// Gradient of the interpolant at the centroid (z = 0 in 2D).
Eigen::Vector3d centroid_gradient(const Grid& grid, const Eigen::VectorXd& node_values, int e);

/// d(gradient)/d(corner value), dim x nodes_per_element, for unit elements.
Eigen::MatrixXd centroid_gradient_weights(int dim);

/// Per-element time used by the projection: the values themselves in element
/// mode, centroid values in node mode. Inactive elements get 0.
Eigen::VectorXd element_times(const Grid& grid, const TimeField& field);

/// Transpose of element_times(): maps d/d(element time) to d/d(field values).
Eigen::VectorXd scatter_element_gradient(const Grid& grid, FieldMode mode, const Eigen::VectorXd& element_gradient);

/// Clamps to [0, 1], zeroes irrelevant and pinned entries.
void sanitize(TimeField& field, const FieldLayout& layout);

}  // namespace seqopt
