#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "seqopt/fem.hpp"

using namespace seqopt;

namespace {

// Closed-form plane-stress stiffness of a unit square, E = 1, corners
// counter-clockwise from the lower left.
Eigen::MatrixXd q4_closed_form(double nu) {
  const double k[8] = {0.5 - nu / 6,       0.125 + nu / 8, -0.25 - nu / 12, -0.125 + 3 * nu / 8,
                       -0.25 + nu / 12,   -0.125 - nu / 8, nu / 6,          0.125 - 3 * nu / 8};
  const int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
                         {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                         {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  Eigen::MatrixXd K(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) K(i, j) = k[idx[i][j]] / (1 - nu * nu);
  return K;
}

// Nodal displacements of the homogeneous field u = eps x on the unit element.
Eigen::VectorXd linear_field(int dim, const Eigen::VectorXd& eps) {
  static const int cx[8] = {0, 1, 1, 0, 0, 1, 1, 0};
  static const int cy[8] = {0, 0, 1, 1, 0, 0, 1, 1};
  static const int cz[8] = {0, 0, 0, 0, 1, 1, 1, 1};
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, dim);
  if (dim == 2) {
    G << eps[0], 0.5 * eps[2], 0.5 * eps[2], eps[1];
  } else {
    G << eps[0], 0.5 * eps[5], 0.5 * eps[4],  //
        0.5 * eps[5], eps[1], 0.5 * eps[3],   //
        0.5 * eps[4], 0.5 * eps[3], eps[2];
  }
  const int npe = dim == 2 ? 4 : 8;
  Eigen::VectorXd u(npe * dim);
  for (int a = 0; a < npe; ++a) {
    Eigen::Vector3d x(cx[a], cy[a], cz[a]);
    u.segment(a * dim, dim) = G * x.head(dim);
  }
  return u;
}

Eigen::VectorXd random_vec(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("unit square stiffness matches the closed form") {
  for (double nu : {0.3, 0.0, 0.45}) {
    const Eigen::MatrixXd K = element_stiffness_unit(2, nu);
    CHECK((K - q4_closed_form(nu)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("element stiffness has exactly the rigid body null space") {
  for (int dim : {2, 3}) {
    for (bool ps : {false, true}) {
      if (dim == 3 && ps) continue;
      const Eigen::MatrixXd K = element_stiffness_unit(dim, 0.3, ps);
      CHECK((K - K.transpose()).norm() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
      const auto& ev = es.eigenvalues();
      const int rigid = dim == 2 ? 3 : 6;
      for (int i = 0; i < rigid; ++i) CHECK(std::abs(ev[i]) <= 1e-12);
      CHECK(ev[rigid] > 1e-3);
    }
  }
}

TEST_CASE("patch test: homogeneous strain gives the eigenstrain load") {
  // For u = eps x every Gauss point sees strain eps, so K u = (int B^T C) eps.
  for (int dim : {2, 3}) {
    const int nv = dim == 2 ? 3 : 6;
    for (unsigned seed = 1; seed <= 5; ++seed) {
      const Eigen::VectorXd eps = random_vec(nv, seed);
      const Eigen::VectorXd u = linear_field(dim, eps);
      const Eigen::VectorXd lhs = element_stiffness_unit(dim, 0.3) * u;
      const Eigen::VectorXd rhs = equivalent_forces(eps, dim, 0.3);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14);
    }
  }
}

TEST_CASE("eigenstrain loads are self-equilibrated") {
  for (int dim : {2, 3}) {
    const Eigen::VectorXd f = equivalent_forces(InherentStrain::isotropic(dim, -0.01).voigt, dim, 0.3);
    for (int c = 0; c < dim; ++c) {
      double s = 0.0;
      for (int a = 0; a < f.size() / dim; ++a) s += f[a * dim + c];
      CHECK(std::abs(s) <= 1e-16);
    }
  }
  CHECK_THROWS(equivalent_forces(Eigen::VectorXd::Zero(6), 2, 0.3));
}

TEST_CASE("elasticity matrices") {
  const Eigen::MatrixXd Cs = elasticity_matrix(2, 2.0, 0.25);
  CHECK(Cs(0, 0) == doctest::Approx(2.0 / (1 - 0.0625)));
  CHECK(Cs(0, 1) == doctest::Approx(0.5 / (1 - 0.0625)));
  CHECK(Cs(2, 2) == doctest::Approx(0.75 / (1 - 0.0625)));
  const Eigen::MatrixXd Ce = elasticity_matrix(2, 1.0, 0.3, true);
  CHECK(Ce(0, 0) == doctest::Approx(0.7 / (1.3 * 0.4)));
  CHECK(Ce(2, 2) == doctest::Approx(1.0 / 2.6));
  const Eigen::MatrixXd C3 = elasticity_matrix(3, 1.0, 0.3);
  CHECK(C3(0, 0) == doctest::Approx(0.7 / (1.3 * 0.4)));
  CHECK(C3(0, 1) == doctest::Approx(0.3 / (1.3 * 0.4)));
  CHECK(C3(5, 5) == doctest::Approx(1.0 / 2.6));
}

TEST_CASE("material interpolation") {
  Material m;
  CHECK(simp_scale(0.0, m) == m.Emin);
  CHECK(simp_scale(1.0, m) == 1.0);
  CHECK(simp_scale(0.5, m) == doctest::Approx(1e-9 + (1 - 1e-9) * 0.125));
  const double h = 1e-6;
  for (double r : {0.1, 0.5, 0.9}) {
    const double fd = (simp_scale(r + h, m) - simp_scale(r - h, m)) / (2 * h);
    CHECK(simp_scale_derivative(r, m) == doctest::Approx(fd).epsilon(1e-8));
  }
  CHECK(penalized_increment(-0.5, 3) == -0.125);
  CHECK(penalized_increment(0.5, 1) == 0.5);
  CHECK(penalized_increment_derivative(-0.5, 3) == doctest::Approx(0.75));
  CHECK(penalized_increment_derivative(0.0, 1) == 1.0);
  CHECK(penalized_increment_derivative(0.0, 3) == 0.0);
  m.q = 1.0;
  CHECK(m.strain_penalty_below_stiffness_penalty());
  m.nu = 0.5;
  CHECK_THROWS(m.validate());
}

TEST_CASE("aligned strain rotates with the time gradient") {
  const Eigen::Vector3d local(-0.01, 0.0, 0.0);
  // Vertical gradient: deposition along x, strain unchanged.
  auto r = rotate_strain_to_global(local, Eigen::Vector2d(0.0, 3.0));
  CHECK((r.strain - local).norm() <= 1e-18);
  // Horizontal gradient: deposition along y.
  r = rotate_strain_to_global(local, Eigen::Vector2d(2.0, 0.0));
  CHECK((r.strain - Eigen::Vector3d(0.0, -0.01, 0.0)).norm() <= 1e-18);
  // 45 degrees: engineering shear appears.
  r = rotate_strain_to_global(local, Eigen::Vector2d(1.0, 1.0));
  CHECK(r.strain[0] == doctest::Approx(-0.005));
  CHECK(r.strain[1] == doctest::Approx(-0.005));
  CHECK(r.strain[2] == doctest::Approx(0.01));
  // Trace is invariant.
  const Eigen::Vector3d gen(-0.01, 0.004, 0.003);
  r = rotate_strain_to_global(gen, Eigen::Vector2d(0.3, -0.7));
  CHECK(r.strain[0] + r.strain[1] == doctest::Approx(gen[0] + gen[1]));
  CHECK(rotate_strain_to_global(local, Eigen::Vector2d(1e-12, 0.0)).degenerate);
}

TEST_CASE("aligned strain derivative agrees with central differences") {
  const Eigen::Vector3d local(-0.01, 0.004, 0.003);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Vector2d g(u(rng), u(rng));
    const auto r = rotate_strain_to_global(local, g);
    for (int c = 0; c < 2; ++c) {
      const double h = 1e-7;
      Eigen::Vector2d gp = g, gm = g;
      gp[c] += h;
      gm[c] -= h;
      const Eigen::Vector3d fd =
          (rotate_strain_to_global(local, gp).strain - rotate_strain_to_global(local, gm).strain) / (2 * h);
      CHECK((r.d_dgrad.col(c) - fd).norm() <= 1e-7 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("strain mode names") {
  CHECK(strain_mode_from_string("isotropic") == StrainMode::isotropic);
  CHECK(strain_mode_from_string(to_string(StrainMode::anisotropic_aligned)) == StrainMode::anisotropic_aligned);
  CHECK_THROWS(strain_mode_from_string("sheared"));
}
