#pragma once

#include <string_view>

#include <Eigen/Core>

namespace seqopt {

/// Linear elastic material with SIMP interpolation.
struct Material {
  double E0 = 1.0;
  double nu = 0.3;
  double Emin = 1e-9;
  double p = 3.0;  // stiffness penalty
  double q = 3.0;  // inherent-strain penalty
  bool plane_strain = false;

  void validate() const;
  /// True when q < p, the regime where soft material receives a
  /// disproportionate load.
  bool strain_penalty_below_stiffness_penalty() const { return q < p; }
};

enum class StrainMode { isotropic, anisotropic_aligned };

std::string_view to_string(StrainMode mode);
StrainMode strain_mode_from_string(std::string_view s);

/// Inherent strain in Voigt order: 2D [xx, yy, xy], 3D [xx, yy, zz, yz, xz, xy],
/// engineering shear. In aligned mode the components are in the local frame
/// (x along deposition, y along the time gradient).
struct InherentStrain {
  Eigen::VectorXd voigt;
  StrainMode mode = StrainMode::isotropic;

  static InherentStrain isotropic(int dim, double value);
};

/// Elasticity matrix C for Young's modulus E (plane stress or plane strain in 2D).
Eigen::MatrixXd elasticity_matrix(int dim, double E, double nu, bool plane_strain = false);

/// Stiffness matrix of a unit square/cube with E = 1 (2x2[x2] Gauss).
Eigen::MatrixXd element_stiffness_unit(int dim, double nu, bool plane_strain = false);

/// Integral of B^T C over the unit element with E = 1, so that the nodal
/// forces equivalent to a uniform eigenstrain are load_operator * strain.
Eigen::MatrixXd load_operator(int dim, double nu, bool plane_strain = false);

/// Nodal forces equivalent to a uniform eigenstrain in a unit element, E = 1.
Eigen::VectorXd equivalent_forces(const Eigen::VectorXd& strain, int dim, double nu, bool plane_strain = false);

/// Emin + (1 - Emin) rho^p
double simp_scale(double rho, const Material& m);
double simp_scale_derivative(double rho, const Material& m);

/// sign(x) |x|^q and its derivative; the strain penalty applied to layer increments.
double penalized_increment(double drho, double q);
double penalized_increment_derivative(double drho, double q);

/// Global-frame 2D strain for a local strain aligned with a time gradient.
struct RotatedStrain {
  Eigen::Vector3d strain;
  Eigen::Matrix<double, 3, 2> d_dgrad;  // derivative w.r.t. the raw gradient
  bool degenerate = false;
};

inline constexpr double degenerate_gradient_tolerance = 1e-9;

/// Local frame: y along grad/|grad|, x = y rotated by -90 degrees. Below the
/// tolerance the global frame is used and the derivative is zero.
RotatedStrain rotate_strain_to_global(const Eigen::Vector3d& strain_local, const Eigen::Vector2d& grad,
                                      double tolerance = degenerate_gradient_tolerance);

}  // namespace seqopt
