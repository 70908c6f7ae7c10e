#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "seqopt/projection.hpp"

using namespace seqopt;

namespace {

// One active element carrying time t.
StageDensities single(double t, int layers, double beta) {
  Grid g({1, 1, 0}, 2);
  Eigen::VectorXd times(1);
  times << t;
  return stage_densities(g, times, {layers, beta});
}

}  // namespace

TEST_CASE("projection matches high-precision reference values") {
  // 32-digit references computed with mpmath.
  CHECK(project(0.2, 0.4, 100) == doctest::Approx(0.99999999999999999575164574470841).epsilon(1e-15));
  CHECK(project(0.3, 0.4, 30) == doctest::Approx(0.99752737688102322568426452898764).epsilon(1e-14));
  CHECK(project(0.45, 0.4, 30) == doctest::Approx(0.047425873179356950448356995998464).epsilon(1e-12));
  CHECK(project(0.7, 0.6, 10) == doctest::Approx(0.11890817835738621762269121022413).epsilon(1e-13));
  CHECK(project_derivative(0.45, 0.4, 30) == doctest::Approx(-2.7105995839570590033).epsilon(1e-12));
  CHECK(project_derivative(0.1, 0.5, 10) == doctest::Approx(-0.0067053622334380369082).epsilon(1e-12));
}

TEST_CASE("projection is exact at the ends of the time interval") {
  for (double T : {0.1, 0.25, 0.5, 0.9})
    for (double beta : {1.0, 30.0, 100.0}) {
      CHECK(project(0.0, T, beta) == 1.0);
      CHECK(std::abs(project(1.0, T, beta)) <= 1e-15);
    }
}

TEST_CASE("projection derivative agrees with central differences") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double t = u(rng), T = 0.05 + 0.9 * u(rng), beta = 1.0 + 40.0 * u(rng);
    const double h = 1e-6;
    const double fd = (project(t + h, T, beta) - project(t - h, T, beta)) / (2 * h);
    CHECK(project_derivative(t, T, beta) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
  }
}

TEST_CASE("single element increments match reference values") {
  const auto s = single(0.3, 4, 30);
  const double want[] = {0.047425887685251467788, 0.95256796814023989258, 6.1441726291102710792e-6,
                         1.8795293628625812805e-12};
  for (int j = 1; j <= 4; ++j) CHECK(std::abs(s.drho[j][0] - want[j - 1]) <= 1e-15 + 1e-10 * want[j - 1]);
  const auto s2 = single(0.62, 5, 100);
  CHECK(s2.drho[3][0] == doctest::Approx(0.017986209962091573637).epsilon(1e-10));
  CHECK(s2.drho[4][0] == doctest::Approx(0.98201379003790819433).epsilon(1e-12));
  CHECK(std::abs(s2.drho[1][0]) < 1e-30);
}

TEST_CASE("layer increments telescope to the active mask") {
  Grid g({9, 7, 0}, 2);
  std::vector<std::uint8_t> mask(g.num_elements(), 1);
  for (int e = 0; e < g.num_elements(); e += 5) mask[e] = 0;
  mask[1] = 1;
  g.set_active_mask(mask);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double beta : {30.0, 100.0})
    for (int N : {1, 2, 5, 12}) {
      Eigen::VectorXd t(g.num_elements());
      for (int e = 0; e < t.size(); ++e) t[e] = u(rng);
      const auto s = stage_densities(g, t, {N, beta});
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(g.num_elements());
      for (int j = 1; j <= N; ++j) sum += s.drho[j];
      for (int e = 0; e < g.num_elements(); ++e) CHECK(std::abs(sum[e] - mask[e]) <= 1e-12);
      CHECK(s.rho[0].isZero(0.0));
      Eigen::VectorXd dsum = Eigen::VectorXd::Zero(g.num_elements());
      for (int j = 1; j <= N; ++j) dsum += s.drho_dt[j];
      CHECK(dsum.cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("hard layers assign each active element exactly one layer") {
  Grid g({6, 5, 0}, 2);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd t(g.num_elements());
  for (int e = 0; e < t.size(); ++e) t[e] = u(rng);
  t[0] = 0.0;
  t[1] = 1.0;
  t[2] = 0.5;
  const int N = 4;
  const auto layers = binary_layers(g, t, N);
  CHECK(layers[0] == 1);
  CHECK(layers[1] == N);
  CHECK(layers[2] == 2);
  const auto s = binary_stage_densities(g, t, N);
  for (int e = 0; e < g.num_elements(); ++e) {
    int count = 0;
    for (int j = 1; j <= N; ++j) {
      CHECK((s.drho[j][e] == 0.0 || s.drho[j][e] == 1.0));
      count += s.drho[j][e] == 1.0;
    }
    CHECK(count == 1);
    CHECK(s.drho[layers[e]][e] == 1.0);
    CHECK(layers[e] == std::clamp(static_cast<int>(std::ceil(t[e] * N)), 1, N));
  }
}

TEST_CASE("continuation raises sharpness in steps up to the cap") {
  CHECK(continuation_beta(0) == 30.0);
  CHECK(continuation_beta(29) == 30.0);
  CHECK(continuation_beta(30) == 40.0);
  CHECK(continuation_beta(209) == 90.0);
  CHECK(continuation_beta(210) == 100.0);
  CHECK(continuation_beta(500) == 100.0);
  CHECK_THROWS(continuation_beta(-1));
  CHECK_THROWS(ProjectionParams{0, 30.0}.validate());
  CHECK_THROWS(ProjectionParams{3, 0.0}.validate());
}
