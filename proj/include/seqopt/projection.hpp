#pragma once

#include <vector>

#include <Eigen/Core>

#include "seqopt/grid.hpp"

namespace seqopt {

/// Smoothed Heaviside step: ~1 for t < T, ~0 for t > T, exactly 1 at t = 0
/// and exactly 0 at t = 1. `beta` sets the sharpness.
double project(double t, double threshold, double beta);
/// d project / d t.
double project_derivative(double t, double threshold, double beta);

struct ProjectionParams {
  int layers = 8;
  double beta = 30.0;
  double threshold(int j) const { return static_cast<double>(j) / layers; }
  void validate() const;
};

/// Cumulative densities per stage and their layer increments.
///
/// rho[j] (j = 0..N) is the material present after stage j; drho[j]
/// (j = 1..N, drho[0] unused) is the material added by stage j. The
/// d*_dt vectors hold derivatives w.r.t. each element's own time value
/// (the maps are diagonal).
struct StageDensities {
  int layers = 0;
  std::vector<Eigen::VectorXd> rho;
  std::vector<Eigen::VectorXd> drho;
  std::vector<Eigen::VectorXd> rho_dt;
  std::vector<Eigen::VectorXd> drho_dt;
};

/// Differentiable layers from per-element times (see element_times()).
/// rho[0] = 0 and rho[N] = mask exactly, so increments telescope to the mask.
StageDensities stage_densities(const Grid& grid, const Eigen::VectorXd& element_time, const ProjectionParams& p);

/// Hard layer index in 1..N: ceil(t N), with t = 0 in layer 1. 0 for inactive.
std::vector<int> binary_layers(const Grid& grid, const Eigen::VectorXd& element_time, int layers);

/// 0/1 densities from binary_layers(); derivatives are zero.
StageDensities binary_stage_densities(const Grid& grid, const Eigen::VectorXd& element_time, int layers);

/// Sharpness schedule: start, raised by `step` every `interval` iterations, capped.
struct ContinuationSchedule {
  double start = 30.0;
  double step = 10.0;
  int interval = 30;
  double max = 100.0;
};

double continuation_beta(int iteration, const ContinuationSchedule& schedule = {});

}  // namespace seqopt
