#pragma once

#include <vector>

#include <Eigen/Core>

#include "seqopt/grid.hpp"
#include "seqopt/projection.hpp"
#include "seqopt/timefield.hpp"

namespace seqopt {

struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // full field length
};

/// Mean squared deviation of each unpinned entry from the mean of its
/// neighbours: (1/|M|) sum_{e in M} (t_e - mean_{N_e} t)^2. Zero iff every
/// entry of M equals its neighbourhood mean.
ValueAndGradient continuity(const TimeField& field, const FieldLayout& layout);

/// Entries of M lying outside [min, max] of their neighbours by more than
/// `tolerance`: isolated patches (local minima) or enclosed voids (local maxima
/// away from the contour).
std::vector<int> verify_min_max(const TimeField& field, const FieldLayout& layout, double tolerance = 1e-3);

/// g_j = V^j / V* - j / N for j = 1..N (entry j-1), with gradients.
struct LayerVolumes {
  Eigen::VectorXd values;
  std::vector<Eigen::VectorXd> gradients;
};

/// From precomputed stage densities; `mode` selects the gradient space.
LayerVolumes layer_volumes(const Grid& grid, const StageDensities& densities, FieldMode mode);
LayerVolumes layer_volumes(const Grid& grid, const TimeField& field, const ProjectionParams& params);

/// Largest violation of -gamma_v <= g_j <= 0 over all layers (0 when feasible).
double max_volume_violation(const Eigen::VectorXd& g, double gamma_v);

}  // namespace seqopt
