#pragma once

#include <functional>

#include <Eigen/Core>

namespace seqopt {

/// Method of moving asymptotes (Svanberg), for
///   min f0(x)  s.t.  f_i(x) <= 0,  xmin <= x <= xmax,
/// with the usual artificial variables (a0 = 1, a_i = 0, c_i, d_i).
struct MmaSettings {
  double asyinit = 0.5;
  double asydecr = 0.7;
  double asyincr = 1.2;
  double move = 0.1;    // fraction of the box
  /// Closest an asymptote may come to the iterate, as a fraction of the box.
  double asymin = 1e-4;
  double albefa = 0.1;
  double raa0 = 1e-5;
  double c = 1000.0;    // penalty on constraint slack y_i
  double d = 1.0;
  double epsimin = 1e-7;
  /// Subproblem re-solves per outer iteration while a constraint
  /// approximation is not conservative.
  int max_conservative = 20;
  void validate() const;
};

struct MmaResult {
  Eigen::VectorXd x;
  /// True when the subproblem failed and a constraint-restoration step was
  /// taken instead.
  bool restored = false;
  int inner_iterations = 0;
  /// Subproblems solved after the first one to make the constraint
  /// approximations conservative.
  int conservative_iterations = 0;
  /// False when some constraint still exceeded its approximation at x.
  bool conservative = true;
};

/// Evaluates f_i at a trial point.
using ConstraintFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

class Mma {
public:
  Mma(Eigen::VectorXd xmin, Eigen::VectorXd xmax, int constraints, MmaSettings settings = {});

  /// One outer iteration from x. `fval` holds f_i(x); `dfdx` is m x n.
  /// With `constraints`, the constraint approximations are made conservative
  /// as in GCMMA: the curvature of every f_i that the trial point shows to be
  /// underestimated is raised and the subproblem solved again.
  MmaResult update(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& df0dx, const Eigen::VectorXd& fval,
                   const Eigen::MatrixXd& dfdx, const ConstraintFn& constraints = {});

  const Eigen::VectorXd& low() const { return low_; }
  const Eigen::VectorXd& upp() const { return upp_; }
  int iteration() const { return iter_; }
  const MmaSettings& settings() const { return s_; }

private:
  MmaSettings s_;
  int m_;
  Eigen::VectorXd xmin_, xmax_;
  Eigen::VectorXd low_, upp_, xold1_, xold2_;
  Eigen::VectorXd raa_;
  int iter_ = 0;
};

}  // namespace seqopt
