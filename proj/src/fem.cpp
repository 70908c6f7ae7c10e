#include "seqopt/fem.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace seqopt {

void Material::validate() const {
  if (!(E0 > 0.0)) throw std::invalid_argument("material.E0 must be positive");
  if (!(nu > 0.0 && nu < 0.5)) throw std::invalid_argument("material.nu must lie in (0, 0.5)");
  if (!(Emin > 0.0 && Emin < 1e-2)) throw std::invalid_argument("material.Emin must lie in (0, 1e-2)");
  if (!(p >= 1.0)) throw std::invalid_argument("material.p must be at least 1");
  if (!(q > 0.0)) throw std::invalid_argument("material.q must be positive");
}

std::string_view to_string(StrainMode mode) {
  return mode == StrainMode::isotropic ? "isotropic" : "anisotropic-aligned";
}

StrainMode strain_mode_from_string(std::string_view s) {
  if (s == "isotropic") return StrainMode::isotropic;
  if (s == "anisotropic-aligned" || s == "anisotropic") return StrainMode::anisotropic_aligned;
  throw std::invalid_argument("unknown strain mode '" + std::string(s) + "'");
}

InherentStrain InherentStrain::isotropic(int dim, double value) {
  InherentStrain s;
  s.voigt = Eigen::VectorXd::Zero(dim == 2 ? 3 : 6);
  for (int d = 0; d < dim; ++d) s.voigt[d] = value;
  return s;
}

Eigen::MatrixXd elasticity_matrix(int dim, double E, double nu, bool plane_strain) {
  if (dim == 2) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(3, 3);
    if (plane_strain) {
      const double f = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
      C << 1.0 - nu, nu, 0.0, nu, 1.0 - nu, 0.0, 0.0, 0.0, 0.5 - nu;
      C *= f;
    } else {
      const double f = E / (1.0 - nu * nu);
      C << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu);
      C *= f;
    }
    return C;
  }
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) C(i, j) = lambda;
    C(i, i) += 2.0 * mu;
    C(i + 3, i + 3) = mu;
  }
  return C;
}

namespace {

constexpr std::array<int, 8> sx{-1, 1, 1, -1, -1, 1, 1, -1};
constexpr std::array<int, 8> sy{-1, -1, 1, 1, -1, -1, 1, 1};
constexpr std::array<int, 8> sz{-1, -1, -1, -1, 1, 1, 1, 1};

// Strain-displacement matrix at reference point (xi, eta, zeta) of a unit element.
Eigen::MatrixXd strain_displacement(int dim, double xi, double eta, double zeta) {
  if (dim == 2) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(3, 8);
    for (int a = 0; a < 4; ++a) {
      // dN/dx = 2 dN/dxi on a unit element.
      const double dx = 0.5 * sx[a] * (1.0 + sy[a] * eta);
      const double dy = 0.5 * sy[a] * (1.0 + sx[a] * xi);
      B(0, 2 * a) = dx;
      B(1, 2 * a + 1) = dy;
      B(2, 2 * a) = dy;
      B(2, 2 * a + 1) = dx;
    }
    return B;
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 24);
  for (int a = 0; a < 8; ++a) {
    const double fx = 1.0 + sx[a] * xi, fy = 1.0 + sy[a] * eta, fz = 1.0 + sz[a] * zeta;
    const double dx = 0.25 * sx[a] * fy * fz;
    const double dy = 0.25 * sy[a] * fx * fz;
    const double dz = 0.25 * sz[a] * fx * fy;
    const int c = 3 * a;
    B(0, c) = dx;
    B(1, c + 1) = dy;
    B(2, c + 2) = dz;
    B(3, c + 1) = dz;
    B(3, c + 2) = dy;
    B(4, c) = dz;
    B(4, c + 2) = dx;
    B(5, c) = dy;
    B(5, c + 1) = dx;
  }
  return B;
}

// Calls f(B, weight) at each 2-point Gauss point; weight includes det J.
template <class F>
void for_each_gauss_point(int dim, F&& f) {
  const double g = 1.0 / std::sqrt(3.0);
  const double pts[2] = {-g, g};
  if (dim == 2) {
    for (double xi : pts)
      for (double eta : pts) f(strain_displacement(2, xi, eta, 0.0), 0.25);
  } else {
    for (double xi : pts)
      for (double eta : pts)
        for (double zeta : pts) f(strain_displacement(3, xi, eta, zeta), 0.125);
  }
}

}  // namespace

Eigen::MatrixXd element_stiffness_unit(int dim, double nu, bool plane_strain) {
  const Eigen::MatrixXd C = elasticity_matrix(dim, 1.0, nu, plane_strain);
  const int n = dim == 2 ? 8 : 24;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for_each_gauss_point(dim, [&](const Eigen::MatrixXd& B, double w) { K.noalias() += w * B.transpose() * C * B; });
  return 0.5 * (K + K.transpose());
}

Eigen::MatrixXd load_operator(int dim, double nu, bool plane_strain) {
  const Eigen::MatrixXd C = elasticity_matrix(dim, 1.0, nu, plane_strain);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim == 2 ? 8 : 24, C.rows());
  for_each_gauss_point(dim, [&](const Eigen::MatrixXd& B, double w) { L.noalias() += w * B.transpose() * C; });
  return L;
}

Eigen::VectorXd equivalent_forces(const Eigen::VectorXd& strain, int dim, double nu, bool plane_strain) {
  const int nv = dim == 2 ? 3 : 6;
  if (strain.size() != nv) throw std::invalid_argument("strain must have " + std::to_string(nv) + " Voigt components");
  return load_operator(dim, nu, plane_strain) * strain;
}

double simp_scale(double rho, const Material& m) { return m.Emin + (1.0 - m.Emin) * std::pow(rho, m.p); }

double simp_scale_derivative(double rho, const Material& m) {
  if (rho <= 0.0) return m.p == 1.0 ? 1.0 - m.Emin : 0.0;
  return (1.0 - m.Emin) * m.p * std::pow(rho, m.p - 1.0);
}

double penalized_increment(double drho, double q) {
  const double a = std::pow(std::abs(drho), q);
  return drho < 0.0 ? -a : a;
}

double penalized_increment_derivative(double drho, double q) {
  if (drho == 0.0) return q == 1.0 ? 1.0 : 0.0;
  return q * std::pow(std::abs(drho), q - 1.0);
}

RotatedStrain rotate_strain_to_global(const Eigen::Vector3d& strain_local, const Eigen::Vector2d& grad,
                                      double tolerance) {
  RotatedStrain r;
  const double len = grad.norm();
  if (!(len > tolerance)) {
    r.strain = strain_local;
    r.d_dgrad.setZero();
    r.degenerate = true;
    return r;
  }
  const double ex = strain_local[0], ey = strain_local[1], gxy = strain_local[2];
  const double a = grad[0] / len, b = grad[1] / len;
  // Frame x = (b, -a), y = (a, b); eps = R eps_local R^T.
  r.strain << ex * b * b + ey * a * a + gxy * a * b,  //
      ex * a * a + ey * b * b - gxy * a * b,           //
      2.0 * (-ex * a * b + ey * a * b) + gxy * (b * b - a * a);
  Eigen::Matrix<double, 3, 2> d_dn;
  d_dn << 2.0 * ey * a + gxy * b, 2.0 * ex * b + gxy * a,  //
      2.0 * ex * a - gxy * b, 2.0 * ey * b - gxy * a,       //
      2.0 * (-ex * b + ey * b - gxy * a), 2.0 * (-ex * a + ey * a + gxy * b);
  const Eigen::Vector2d n(a, b);
  const Eigen::Matrix2d dn_dg = (Eigen::Matrix2d::Identity() - n * n.transpose()) / len;
  r.d_dgrad = d_dn * dn_dg;
  return r;
}

}  // namespace seqopt
