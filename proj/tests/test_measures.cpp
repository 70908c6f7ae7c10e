#include <doctest.h>

#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "seqopt/measures.hpp"

using namespace seqopt;

namespace {

Eigen::VectorXd random_vec(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// Direct formulas on the displacement vector.
double mismatch(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / v.size();
}

double oracle(const Grid& g, const DistortionMeasure& m, const Eigen::VectorXd& u) {
  const int dim = g.dim();
  const auto P = resolve_nodes(g, m.primary);
  auto comp = [&](const std::vector<int>& nodes, int c) {
    std::vector<double> v;
    for (int n : nodes) v.push_back(u[n * dim + c]);
    return v;
  };
  auto sq = [&](const std::vector<int>& nodes) {
    double s = 0.0;
    for (int n : nodes) s += u.segment(n * dim, dim).squaredNorm();
    return s;
  };
  switch (m.kind) {
    case MeasureKind::node_displacement: return sq(P);
    case MeasureKind::node_set_average: return sq(P) / P.size();
    case MeasureKind::edge_flatness: return mismatch(comp(P, dim - 1));
    case MeasureKind::perpendicularity:
      return mismatch(comp(P, 1)) + mismatch(comp(resolve_nodes(g, *m.secondary), 0));
    case MeasureKind::surface_flatness_3d:
      return mismatch(comp(P, 0)) + mismatch(comp(resolve_nodes(g, *m.secondary), 2));
  }
  return 0.0;
}

// Dense Q from the oracle by polarization on unit vectors.
Eigen::MatrixXd dense_from_oracle(const Grid& g, const DistortionMeasure& m) {
  const int n = g.num_dofs();
  Eigen::MatrixXd Q(n, n);
  Eigen::VectorXd diag(n);
  for (int a = 0; a < n; ++a) diag[a] = oracle(g, m, Eigen::VectorXd::Unit(n, a));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) {
        Q(a, a) = diag[a];
        continue;
      }
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, a) + Eigen::VectorXd::Unit(n, b);
      Q(a, b) = 0.5 * (oracle(g, m, e) - diag[a] - diag[b]);
    }
  return Q;
}

std::vector<std::pair<Grid, DistortionMeasure>> cases() {
  std::vector<std::pair<Grid, DistortionMeasure>> out;
  Grid l = build_preset("lshape2d", {6, 4, 0});
  DistortionMeasure m;
  m.kind = MeasureKind::node_displacement;
  m.primary.kind = NodeSelector::Kind::point;
  m.primary.point = {-1, -1, 0};
  out.emplace_back(l, m);
  m = {};
  m.kind = MeasureKind::edge_flatness;
  m.primary.axis = 1;
  m.primary.position = -1;
  out.emplace_back(l, m);
  m.kind = MeasureKind::perpendicularity;
  NodeSelector right;
  right.axis = 0;
  right.position = -1;
  m.secondary = right;
  out.emplace_back(l, m);
  m = {};
  m.kind = MeasureKind::node_set_average;
  m.primary.kind = NodeSelector::Kind::circle;
  m.primary.center = {3.0, 2.0};
  m.primary.radius = 1.5;
  out.emplace_back(build_preset("square2d", {6, 4, 0}), m);
  Grid l3 = build_preset("lshape3d", {4, 2, 4});
  m = {};
  m.kind = MeasureKind::surface_flatness_3d;
  m.primary.axis = 0;
  m.primary.position = -1;
  NodeSelector top;
  top.axis = 2;
  top.position = -1;
  m.secondary = top;
  out.emplace_back(l3, m);
  return out;
}

}  // namespace

TEST_CASE("compiled forms agree with a dense oracle") {
  for (const auto& [g, m] : cases()) {
    const QuadraticForm Q = compile(m, g);
    const Eigen::MatrixXd dense = dense_from_oracle(g, m);
    const Eigen::MatrixXd got = Eigen::MatrixXd(Q.to_sparse());
    CHECK((got - dense).cwiseAbs().maxCoeff() <= 1e-14);
    for (unsigned s = 1; s <= 3; ++s) {
      const Eigen::VectorXd u = random_vec(g.num_dofs(), s);
      CHECK(Q.evaluate(u) == doctest::Approx(u.dot(dense * u)).epsilon(1e-13));
      CHECK((Q.apply(u) - dense * u).cwiseAbs().maxCoeff() <= 1e-14);
      CHECK(Q.evaluate(u) == doctest::Approx(oracle(g, m, u)).epsilon(1e-13));
    }
  }
}

TEST_CASE("compiled forms are positive semidefinite") {
  for (const auto& [g, m] : cases()) {
    const Eigen::MatrixXd Q = Eigen::MatrixXd(compile(m, g).to_sparse());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    CHECK(es.eigenvalues().minCoeff() >= -1e-14);
  }
}

TEST_CASE("flatness ignores rigid translation") {
  for (const auto& [g, m] : cases()) {
    if (m.kind == MeasureKind::node_displacement || m.kind == MeasureKind::node_set_average) continue;
    const QuadraticForm Q = compile(m, g);
    const Eigen::VectorXd u = random_vec(g.num_dofs(), 4);
    for (double shift : {-3.0, 0.5, 7.25}) {
      Eigen::VectorXd v = u;
      for (int n = 0; n < g.num_nodes(); ++n)
        for (int c = 0; c < g.dim(); ++c) v[n * g.dim() + c] += shift * (c + 1);
      CHECK(std::abs(Q.evaluate(v) - Q.evaluate(u)) <= 1e-12);
    }
  }
}

TEST_CASE("measures are quadratically homogeneous") {
  for (const auto& [g, m] : cases()) {
    const QuadraticForm Q = compile(m, g);
    const Eigen::VectorXd u = random_vec(g.num_dofs(), 5);
    for (double a : {-2.0, 0.1, 3.0})
      CHECK(Q.evaluate(a * u) == doctest::Approx(a * a * Q.evaluate(u)).epsilon(1e-13));
    CHECK((Q.gradient(u) - 2.0 * Q.apply(u)).norm() == 0.0);
  }
}

TEST_CASE("measure construction errors") {
  Grid g = build_preset("lshape2d", {6, 4, 0});
  DistortionMeasure m;
  m.kind = MeasureKind::perpendicularity;
  m.primary.axis = 1;
  m.primary.position = -1;
  CHECK_THROWS(compile(m, g));  // no second set
  m.kind = MeasureKind::surface_flatness_3d;
  NodeSelector s;
  m.secondary = s;
  CHECK_THROWS(compile(m, g));  // 2D grid
  m = {};
  m.primary.kind = NodeSelector::Kind::point;
  m.primary.point = {0, -1, 0};
  CHECK_THROWS(compile(m, g));  // one node cannot be flat or crooked
  QuadraticForm q(4);
  CHECK_THROWS(q.add_term({{0, 9}, 1.0, false}));
  CHECK_THROWS(q.add_term({{0, 1}, -1.0, false}));
  CHECK(measure_kind_from_string("edge-flatness") == MeasureKind::edge_flatness);
  CHECK_THROWS(measure_kind_from_string("roundness"));
}
