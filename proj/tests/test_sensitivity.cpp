#include <doctest.h>

#include <random>

#include "seqopt/constraints.hpp"
#include "seqopt/sensitivity.hpp"

using namespace seqopt;

namespace {

DistortionMeasure top_flatness() {
  DistortionMeasure m;
  m.kind = MeasureKind::edge_flatness;
  m.primary.axis = 1;
  m.primary.position = -1;
  return m;
}

TimeField jittered(const Grid& grid, FieldMode mode, unsigned seed) {
  TimeField f = init_time_field(grid, mode);
  const auto lay = make_layout(grid, mode);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int i : lay.free) f.values[i] = std::clamp(f.values[i] + jitter(rng), 0.0, 1.0);
  return f;
}

}  // namespace

TEST_CASE("adjoint matches central differences on the element-mode L-shape") {
  Grid grid = build_preset("lshape2d", {12, 8, 0});
  ForwardModel model(grid, Material{}, InherentStrain::isotropic(2, -0.01));
  const QuadraticForm Q = compile(top_flatness(), grid);
  const ProjectionParams params{3, 30.0};
  const TimeField field = jittered(grid, FieldMode::element, 7);
  const auto lay = make_layout(grid, FieldMode::element);
  const auto check = check_components(model, field, params, Q, lay.free, 20, 11);
  MESSAGE("max rel error " << check.max_relative_error);
  CHECK(check.max_relative_error <= 1e-4);
}

TEST_CASE("adjoint matches central differences with aligned strain on nodes") {
  Grid grid = build_preset("square2d", {8, 8, 0});
  InherentStrain strain{Eigen::Vector3d(-0.01, 0.0, 0.0), StrainMode::anisotropic_aligned};
  ForwardModel model(grid, Material{}, strain);
  const QuadraticForm Q = compile(top_flatness(), grid);
  const ProjectionParams params{2, 30.0};
  const TimeField field = jittered(grid, FieldMode::node, 3);
  const auto lay = make_layout(grid, FieldMode::node);
  const auto check = check_components(model, field, params, Q, lay.free, 20, 5);
  MESSAGE("max rel error " << check.max_relative_error);
  CHECK(check.max_relative_error <= 1e-4);
}

TEST_CASE("adjoint identity holds stage by stage") {
  Grid grid = build_preset("bracket2d", {24, 16, 0});
  ForwardModel model(grid, Material{}, InherentStrain::isotropic(2, -0.01));
  const QuadraticForm Q = compile(top_flatness(), grid);
  const TimeField field = jittered(grid, FieldMode::element, 5);
  const auto sim = model.simulate(field, {4, 50.0});
  const auto ws = adjoint_gradient(model, sim, field, Q);
  CHECK(adjoint_identity_error(model, sim, ws, Q) <= 1e-10);
  CHECK(ws.lambda.size() == 5);
  for (int n : grid.fixed_nodes())
    for (int j = 1; j <= 4; ++j) CHECK(ws.lambda[j].segment(2 * n, 2).norm() == 0.0);
}

TEST_CASE("adjoint matches central differences along random directions") {
  Grid grid = build_preset("lshape3d", {6, 2, 4});
  SimulationOptions opt;
  opt.retain_factorizations = false;
  ForwardModel model(grid, Material{}, InherentStrain::isotropic(3, -0.01), opt);
  DistortionMeasure m;
  m.kind = MeasureKind::surface_flatness_3d;
  m.primary.axis = 0;
  m.primary.position = -1;
  NodeSelector top;
  top.axis = 2;
  top.position = -1;
  m.secondary = top;
  const QuadraticForm Q = compile(m, grid);
  const TimeField field = jittered(grid, FieldMode::element, 9);
  const auto lay = make_layout(grid, FieldMode::element);
  const auto check = check_directions(model, field, {3, 30.0}, Q, lay.free, 4, 2);
  CHECK(check.adjoint.size() == 4);
  CHECK(check.max_relative_error <= 1e-5);
}
