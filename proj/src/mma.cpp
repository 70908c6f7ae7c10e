#include "seqopt/mma.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace seqopt {

void MmaSettings::validate() const {
  if (!(asyinit > 0.0 && asyinit <= 1.0)) throw std::invalid_argument("mma.asyinit must be in (0, 1]");
  if (!(asydecr > 0.0 && asydecr < 1.0)) throw std::invalid_argument("mma.asydecr must be in (0, 1)");
  if (!(asyincr > 1.0)) throw std::invalid_argument("mma.asyincr must exceed 1");
  if (!(move > 0.0 && move <= 1.0)) throw std::invalid_argument("mma.move must be in (0, 1]");
  if (!(asymin > 0.0 && asymin < asyinit)) throw std::invalid_argument("mma.asymin must be in (0, asyinit)");
  if (!(albefa > 0.0 && albefa < 1.0)) throw std::invalid_argument("mma.albefa must be in (0, 1)");
  if (!(c > 0.0) || !(d >= 0.0)) throw std::invalid_argument("mma.c must be positive and mma.d non-negative");
  if (!(raa0 > 0.0)) throw std::invalid_argument("mma.raa0 must be positive");
  if (max_conservative < 0) throw std::invalid_argument("mma.max_conservative must be non-negative");
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Subproblem {
  int m, n;
  const VectorXd &low, &upp, &alfa, &beta, &p0, &q0;
  const MatrixXd &P, &Q;
  const VectorXd& b;
  double c, d;
};

// Primal-dual interior point on the separable convex approximation.
struct Iterate {
  VectorXd x, y, lam, xsi, eta, mu, s;
  double z, zet;
};

VectorXd residual(const Subproblem& sp, const Iterate& it, double epsi) {
  const int n = sp.n, m = sp.m;
  const VectorXd ux1 = sp.upp - it.x, xl1 = it.x - sp.low;
  const VectorXd plam = sp.p0 + sp.P.transpose() * it.lam;
  const VectorXd qlam = sp.q0 + sp.Q.transpose() * it.lam;
  const VectorXd gvec = sp.P * ux1.cwiseInverse() + sp.Q * xl1.cwiseInverse();
  const VectorXd dpsidx = plam.cwiseQuotient(ux1.cwiseProduct(ux1)) - qlam.cwiseQuotient(xl1.cwiseProduct(xl1));
  VectorXd r(3 * n + 4 * m + 2);
  int k = 0;
  r.segment(k, n) = dpsidx - it.xsi + it.eta, k += n;
  r.segment(k, m) = (sp.c - it.mu.array() - it.lam.array()).matrix() + sp.d * it.y, k += m;
  r[k++] = 1.0 - it.zet;  // a0 = 1, a = 0
  r.segment(k, m) = gvec - it.y + it.s - sp.b, k += m;
  r.segment(k, n) = (it.xsi.array() * (it.x - sp.alfa).array() - epsi).matrix(), k += n;
  r.segment(k, n) = (it.eta.array() * (sp.beta - it.x).array() - epsi).matrix(), k += n;
  r.segment(k, m) = (it.mu.array() * it.y.array() - epsi).matrix(), k += m;
  r[k++] = it.zet * it.z - epsi;
  r.segment(k, m) = (it.lam.array() * it.s.array() - epsi).matrix();
  return r;
}

int subsolv(const Subproblem& sp, double epsimin, Iterate& it) {
  const int n = sp.n, m = sp.m;
  it.x = 0.5 * (sp.alfa + sp.beta);
  it.y = VectorXd::Ones(m);
  it.z = 1.0;
  it.lam = VectorXd::Ones(m);
  it.xsi = (it.x - sp.alfa).cwiseInverse().cwiseMax(1.0);
  it.eta = (sp.beta - it.x).cwiseInverse().cwiseMax(1.0);
  it.mu = VectorXd::Constant(m, std::max(1.0, 0.5 * sp.c));
  it.zet = 1.0;
  it.s = VectorXd::Ones(m);

  int total = 0;
  double epsi = 1.0;
  while (epsi > epsimin) {
    VectorXd res = residual(sp, it, epsi);
    double resnorm = res.norm();
    double resmax = res.lpNorm<Eigen::Infinity>();
    for (int inner = 0; inner < 200 && resmax > 0.9 * epsi; ++inner) {
      ++total;
      const VectorXd ux1 = sp.upp - it.x, xl1 = it.x - sp.low;
      const VectorXd ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
      const VectorXd ux3 = ux1.cwiseProduct(ux2), xl3 = xl1.cwiseProduct(xl2);
      const VectorXd plam = sp.p0 + sp.P.transpose() * it.lam;
      const VectorXd qlam = sp.q0 + sp.Q.transpose() * it.lam;
      const VectorXd gvec = sp.P * ux1.cwiseInverse() + sp.Q * xl1.cwiseInverse();
      const MatrixXd GG = sp.P * ux2.cwiseInverse().asDiagonal() - sp.Q * xl2.cwiseInverse().asDiagonal();
      const VectorXd dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);
      const VectorXd delx =
          dpsidx - (epsi * (it.x - sp.alfa).cwiseInverse()) + epsi * (sp.beta - it.x).cwiseInverse();
      const VectorXd dely = (sp.c - it.lam.array() - epsi / it.y.array()).matrix() + sp.d * it.y;
      const double delz = 1.0 - epsi / it.z;
      const VectorXd dellam = gvec - it.y - sp.b + epsi * it.lam.cwiseInverse();
      const VectorXd diagx = 2.0 * (plam.cwiseQuotient(ux3) + qlam.cwiseQuotient(xl3)) +
                             it.xsi.cwiseQuotient(it.x - sp.alfa) + it.eta.cwiseQuotient(sp.beta - it.x);
      const VectorXd diagy = (sp.d + it.mu.array() / it.y.array()).matrix();
      const VectorXd diaglamyi = it.s.cwiseQuotient(it.lam) + diagy.cwiseInverse();

      VectorXd dx, dlam;
      double dz;
      if (m < n) {
        MatrixXd AA = MatrixXd::Zero(m + 1, m + 1);
        AA.topLeftCorner(m, m) = GG * diagx.cwiseInverse().asDiagonal() * GG.transpose();
        AA.topLeftCorner(m, m).diagonal() += diaglamyi;
        AA(m, m) = -it.zet / it.z;  // a = 0 leaves the border zero
        VectorXd bb(m + 1);
        bb.head(m) = dellam + dely.cwiseQuotient(diagy) - GG * delx.cwiseQuotient(diagx);
        bb[m] = delz;
        const VectorXd sol = AA.partialPivLu().solve(bb);
        dlam = sol.head(m);
        dz = sol[m];
        dx = -(delx + GG.transpose() * dlam).cwiseQuotient(diagx);
      } else {
        const VectorXd diaglamyiinv = diaglamyi.cwiseInverse();
        const VectorXd dellamyi = dellam + dely.cwiseQuotient(diagy);
        MatrixXd AA = MatrixXd::Zero(n + 1, n + 1);
        AA.topLeftCorner(n, n) = GG.transpose() * diaglamyiinv.asDiagonal() * GG;
        AA.topLeftCorner(n, n).diagonal() += diagx;
        AA(n, n) = it.zet / it.z;
        VectorXd bb(n + 1);
        bb.head(n) = -delx - GG.transpose() * dellamyi.cwiseProduct(diaglamyiinv);
        bb[n] = -delz;
        const VectorXd sol = AA.partialPivLu().solve(bb);
        dx = sol.head(n);
        dz = sol[n];
        dlam = (GG * dx).cwiseProduct(diaglamyiinv) + dellamyi.cwiseProduct(diaglamyiinv);
      }
      const VectorXd dy = (dlam - dely).cwiseQuotient(diagy);
      const VectorXd dxsi = -it.xsi + epsi * (it.x - sp.alfa).cwiseInverse() -
                            it.xsi.cwiseProduct(dx).cwiseQuotient(it.x - sp.alfa);
      const VectorXd deta = -it.eta + epsi * (sp.beta - it.x).cwiseInverse() +
                            it.eta.cwiseProduct(dx).cwiseQuotient(sp.beta - it.x);
      const VectorXd dmu = -it.mu + epsi * it.y.cwiseInverse() - it.mu.cwiseProduct(dy).cwiseQuotient(it.y);
      const double dzet = -it.zet + epsi / it.z - it.zet * dz / it.z;
      const VectorXd ds = -it.s + epsi * it.lam.cwiseInverse() - it.s.cwiseProduct(dlam).cwiseQuotient(it.lam);

      // Largest step keeping every positive quantity positive.
      double stm = 1.0;
      auto limit = [&](const VectorXd& v, const VectorXd& dv) {
        for (Eigen::Index i = 0; i < v.size(); ++i) stm = std::max(stm, -1.01 * dv[i] / v[i]);
      };
      limit(it.y, dy);
      limit(it.lam, dlam);
      limit(it.xsi, dxsi);
      limit(it.eta, deta);
      limit(it.mu, dmu);
      limit(it.s, ds);
      stm = std::max({stm, -1.01 * dz / it.z, -1.01 * dzet / it.zet});
      for (int i = 0; i < n; ++i)
        stm = std::max({stm, -1.01 * dx[i] / (it.x[i] - sp.alfa[i]), 1.01 * dx[i] / (sp.beta[i] - it.x[i])});
      double step = 1.0 / stm;

      const Iterate old = it;
      double resnew = 2.0 * resnorm;
      for (int back = 0; back < 50 && resnew > resnorm; ++back) {
        it.x = old.x + step * dx;
        it.y = old.y + step * dy;
        it.z = old.z + step * dz;
        it.lam = old.lam + step * dlam;
        it.xsi = old.xsi + step * dxsi;
        it.eta = old.eta + step * deta;
        it.mu = old.mu + step * dmu;
        it.zet = old.zet + step * dzet;
        it.s = old.s + step * ds;
        res = residual(sp, it, epsi);
        resnew = res.norm();
        step *= 0.5;
      }
      resnorm = resnew;
      resmax = res.lpNorm<Eigen::Infinity>();
    }
    epsi *= 0.1;
  }
  return total;
}

}  // namespace

Mma::Mma(Eigen::VectorXd xmin, Eigen::VectorXd xmax, int constraints, MmaSettings settings)
    : s_(settings), m_(constraints), xmin_(std::move(xmin)), xmax_(std::move(xmax)) {
  s_.validate();
  if (xmin_.size() != xmax_.size()) throw std::invalid_argument("mma bounds differ in length");
  if ((xmax_.array() <= xmin_.array()).any()) throw std::invalid_argument("mma bounds must satisfy xmin < xmax");
  if (m_ < 0) throw std::invalid_argument("mma needs a non-negative constraint count");
}

MmaResult Mma::update(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& df0dx, const Eigen::VectorXd& fval,
                      const Eigen::MatrixXd& dfdx, const ConstraintFn& constraints) {
  const int n = static_cast<int>(x.size());
  if (n != xmin_.size() || df0dx.size() != n || fval.size() != m_ || dfdx.rows() != m_ || dfdx.cols() != n)
    throw std::invalid_argument("mma update called with inconsistent sizes");
  if (!std::isfinite(f0) || !df0dx.allFinite() || !fval.allFinite() || !dfdx.allFinite())
    throw std::invalid_argument("mma update called with non-finite values");
  ++iter_;
  const VectorXd range = xmax_ - xmin_;
  if (iter_ <= 2) {
    low_ = x - s_.asyinit * range;
    upp_ = x + s_.asyinit * range;
  } else {
    for (int i = 0; i < n; ++i) {
      const double sgn = (x[i] - xold1_[i]) * (xold1_[i] - xold2_[i]);
      const double factor = sgn > 0.0 ? s_.asyincr : (sgn < 0.0 ? s_.asydecr : 1.0);
      low_[i] = x[i] - factor * (xold1_[i] - low_[i]);
      upp_[i] = x[i] + factor * (upp_[i] - xold1_[i]);
      low_[i] = std::clamp(low_[i], x[i] - 10.0 * range[i], x[i] - s_.asymin * range[i]);
      upp_[i] = std::clamp(upp_[i], x[i] + s_.asymin * range[i], x[i] + 10.0 * range[i]);
    }
  }

  VectorXd alfa(n), beta(n);
  for (int i = 0; i < n; ++i) {
    alfa[i] = std::max({low_[i] + s_.albefa * (x[i] - low_[i]), x[i] - s_.move * range[i], xmin_[i]});
    beta[i] = std::min({upp_[i] - s_.albefa * (upp_[i] - x[i]), x[i] + s_.move * range[i], xmax_[i]});
  }

  const VectorXd ux1 = upp_ - x, xl1 = x - low_;
  const VectorXd ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
  const VectorXd rinv = range.cwiseMax(1e-5).cwiseInverse();
  VectorXd p0 = df0dx.cwiseMax(0.0), q0 = (-df0dx).cwiseMax(0.0);
  const VectorXd pq0 = 0.001 * (p0 + q0) + s_.raa0 * rinv;
  p0 = (p0 + pq0).cwiseProduct(ux2);
  q0 = (q0 + pq0).cwiseProduct(xl2);
  const MatrixXd Pg = dfdx.cwiseMax(0.0), Qg = (-dfdx).cwiseMax(0.0);
  const MatrixXd PQg = 0.001 * (Pg + Qg);

  if (raa_.size() != m_) raa_ = VectorXd::Constant(m_, s_.raa0);
  raa_ = (0.1 * raa_).cwiseMax(s_.raa0);

  MatrixXd P, Q;
  VectorXd b;
  auto build = [&] {
    const MatrixXd R = raa_ * rinv.transpose();
    P = (Pg + PQg + R) * ux2.asDiagonal();
    Q = (Qg + PQg + R) * xl2.asDiagonal();
    b = P * ux1.cwiseInverse() + Q * xl1.cwiseInverse() - fval;
  };
  build();

  MmaResult out;
  Iterate it;
  for (int round = 0;; ++round) {
    const Subproblem sp{m_, n, low_, upp_, alfa, beta, p0, q0, P, Q, b, s_.c, s_.d};
    out.inner_iterations += subsolv(sp, s_.epsimin, it);
    out.x = it.x;
    if (!constraints || m_ == 0 || !out.x.allFinite()) break;
    const VectorXd actual = constraints(out.x);
    const VectorXd ux = upp_ - out.x, xl = out.x - low_;
    const VectorXd approx = P * ux.cwiseInverse() + Q * xl.cwiseInverse() - b;
    // Growth of the curvature term per unit raa.
    const VectorXd dx = out.x - x;
    const double dist =
        ((upp_ - low_).array() * dx.array().square() * rinv.array() / (ux.array() * xl.array())).sum();
    bool ok = true;
    for (int i = 0; i < m_; ++i) {
      const double excess = actual[i] - approx[i];
      if (excess <= 1e-10 * (1.0 + std::abs(actual[i]))) continue;
      ok = false;
      if (dist > 0.0) raa_[i] = std::min(1.1 * (raa_[i] + excess / dist), 10.0 * raa_[i]);
    }
    out.conservative = ok;
    if (ok || round == s_.max_conservative || dist == 0.0) break;
    ++out.conservative_iterations;
    build();
  }

  if (!out.x.allFinite()) {
    // Restoration: steepest descent on the summed positive violations,
    // limited to the move box.
    VectorXd dir = VectorXd::Zero(n);
    for (int i = 0; i < m_; ++i)
      if (fval[i] > 0.0) dir -= dfdx.row(i).transpose();
    if (dir.squaredNorm() == 0.0) dir = -df0dx;
    const double scale = dir.lpNorm<Eigen::Infinity>();
    out.x = x;
    if (scale > 0.0) out.x += (s_.move * dir / scale).cwiseProduct(range);
    out.x = out.x.cwiseMax(alfa).cwiseMin(beta);
    out.restored = true;
  }
  xold2_ = iter_ >= 2 ? xold1_ : x;
  xold1_ = x;
  return out;
}

}  // namespace seqopt
