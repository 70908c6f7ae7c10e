#pragma once

#include <vector>

#include <Eigen/Core>

#include "seqopt/measures.hpp"
#include "seqopt/process.hpp"

namespace seqopt {

/// Adjoint vectors and the stagewise bookkeeping behind a gradient.
struct AdjointWorkspace {
  std::vector<Eigen::VectorXd> lambda;   // K^i lambda_i = -2 Q u^N, stage-indexed, fixed DOFs zero
  Eigen::VectorXd element_gradient;      // d d / d(element time)
  Eigen::VectorXd gradient;              // d d / d(field values), full field length
};

/// Gradient of d = u^T Q u with respect to the field that produced `sim`.
/// Uses the factorizations retained in `sim` when present, otherwise
/// refactorizes each stage.
AdjointWorkspace adjoint_gradient(const ForwardModel& model, const SimulationResult& sim, const TimeField& field,
                                  const QuadraticForm& Q);

/// Largest relative mismatch over stages of lambda_i^T f^i against
/// -2 u^T Q du^i; both sides are the same bilinear form through K^i.
double adjoint_identity_error(const ForwardModel& model, const SimulationResult& sim, const AdjointWorkspace& ws,
                              const QuadraticForm& Q);

/// Distortion of a field: one forward run.
double objective(const ForwardModel& model, const TimeField& field, const ProjectionParams& params,
                 const QuadraticForm& Q);

/// Central difference (d(t + h dir) - d(t - h dir)) / 2h.
double fd_directional(const ForwardModel& model, const TimeField& field, const Eigen::VectorXd& direction, double h,
                      const ProjectionParams& params, const QuadraticForm& Q);

struct GradientCheck {
  double max_relative_error = 0.0;
  double mean_relative_error = 0.0;
  std::vector<int> components;  // empty for directional checks
  std::vector<double> adjoint;
  std::vector<double> finite_difference;
};

/// Adjoint vs central-difference partials on `count` free components drawn
/// with `seed` from those whose adjoint magnitude is at least `resolvable`
/// times the largest one; smaller partials sit below the roundoff of a
/// difference quotient. Relative error |a - f| / max(|a|, |f|).
GradientCheck check_components(const ForwardModel& model, const TimeField& field, const ProjectionParams& params,
                               const QuadraticForm& Q, const std::vector<int>& free, int count, unsigned seed,
                               double h = 1e-6, double resolvable = 1e-4);

/// Same along `count` random directions supported on `free` (entries uniform
/// in [-1, 1]); no magnitude filter.
GradientCheck check_directions(const ForwardModel& model, const TimeField& field, const ProjectionParams& params,
                               const QuadraticForm& Q, const std::vector<int>& free, int count, unsigned seed,
                               double h = 1e-6);

}  // namespace seqopt
