#include "asi/lmi_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace asi {

double lambda_max(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[es.eigenvalues().size() - 1];
}

double lambda_min(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

namespace {

struct Barrier {
  const LmiQp& qp;

  Eigen::MatrixXd G(const Eigen::VectorXd& d) const {
    Eigen::MatrixXd g = qp.B0;
    for (std::size_t i = 0; i < qp.B.size(); ++i) g += d[static_cast<Eigen::Index>(i)] * qp.B[i];
    return g;
  }

  bool inside(const Eigen::VectorXd& d) const {
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(d[i] > qp.lo[i] && d[i] < qp.hi[i])) return false;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(-G(d));
    return llt.info() == Eigen::Success;
  }

  int box_count() const {
    int c = 0;
    for (Eigen::Index i = 0; i < qp.lo.size(); ++i) {
      c += std::isfinite(qp.lo[i]) ? 1 : 0;
      c += std::isfinite(qp.hi[i]) ? 1 : 0;
    }
    return c;
  }
};

struct NewtonSystem {
  Eigen::MatrixXd Sinv;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::VectorXd step;
  double decrement = 0.0;
  bool ok = false;
};

// Gradient, Hessian and Newton step of
// t (g^T d + d^T H d / 2) - logdet(-G(d)) - sum log(box slack).
NewtonSystem newton_system(const LmiQp& qp, const Barrier& bar, const Eigen::VectorXd& d, double t) {
  const Eigen::Index n = d.size();
  const Eigen::Index p = qp.B0.rows();
  NewtonSystem ns;
  Eigen::LLT<Eigen::MatrixXd> llt(-bar.G(d));
  ns.Sinv = llt.solve(Eigen::MatrixXd::Identity(p, p));
  std::vector<Eigen::MatrixXd> SB(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) SB[static_cast<std::size_t>(i)] = ns.Sinv * qp.B[static_cast<std::size_t>(i)];
  ns.grad = t * (qp.g + qp.H * d);
  ns.hess = t * qp.H;
  for (Eigen::Index i = 0; i < n; ++i) {
    ns.grad[i] += SB[static_cast<std::size_t>(i)].trace();
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double h = (SB[static_cast<std::size_t>(i)].cwiseProduct(SB[static_cast<std::size_t>(j)].transpose())).sum();
      ns.hess(i, j) += h;
      if (j != i) ns.hess(j, i) += h;
    }
    if (std::isfinite(qp.hi[i])) {
      const double s = qp.hi[i] - d[i];
      ns.grad[i] += 1.0 / s;
      ns.hess(i, i) += 1.0 / (s * s);
    }
    if (std::isfinite(qp.lo[i])) {
      const double s = d[i] - qp.lo[i];
      ns.grad[i] -= 1.0 / s;
      ns.hess(i, i) += 1.0 / (s * s);
    }
  }
  // Symmetric diagonal scaling keeps the Newton system well conditioned
  // once t is large.
  const Eigen::VectorXd dscale = ns.hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd hs = dscale.asDiagonal() * ns.hess * dscale.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> hl(hs);
  if (hl.info() != Eigen::Success) return ns;
  ns.step = -(dscale.asDiagonal() * hl.solve(dscale.asDiagonal() * ns.grad)).eval();
  ns.decrement = -ns.grad.dot(ns.step);
  ns.ok = ns.decrement >= 0.0;
  return ns;
}

}  // namespace

LmiQpResult solve_lmi_qp(const LmiQp& qp, const Eigen::VectorXd& start, double gap_tol) {
  const Eigen::Index n = qp.g.size();
  if (qp.H.rows() != n || static_cast<Eigen::Index>(qp.B.size()) != n || qp.lo.size() != n ||
      qp.hi.size() != n || start.size() != n) {
    throw std::invalid_argument("LMI-QP dimensions disagree");
  }
  const Barrier bar{qp};
  if (!bar.inside(start)) throw std::invalid_argument("LMI-QP start point is not strictly feasible");
  const Eigen::Index p = qp.B0.rows();
  const double constraints = static_cast<double>(p + bar.box_count());

  LmiQpResult res;
  Eigen::VectorXd d = start;
  double t = 1.0;
  for (int outer = 0; outer < 200; ++outer) {
    double prev_lam = std::numeric_limits<double>::infinity();
    for (int inner = 0; inner < 200; ++inner) {
      const NewtonSystem ns = newton_system(qp, bar, d, t);
      if (!ns.ok) break;
      // Damped Newton on a self-concordant barrier: the step 1/(1+lambda)
      // stays strictly feasible and needs no function values.
      const double lam = std::sqrt(ns.decrement);
      Eigen::VectorXd trial = d + (lam > 0.25 ? 1.0 / (1.0 + lam) : 1.0) * ns.step;
      for (int k = 0; k < 60 && !bar.inside(trial); ++k) trial = d + 0.5 * (trial - d);
      if (!bar.inside(trial)) break;
      d = trial;
      ++res.newton_steps;
      // Stop at the centring tolerance or once rounding stalls the decrement.
      if (ns.decrement < 1e-16 || (lam < 1e-6 && lam > 0.5 * prev_lam)) break;
      prev_lam = lam;
    }
    if (constraints / t < gap_tol) break;
    t *= 8.0;
  }

  // Multipliers from one more Newton step. The linearised centring condition
  // holds exactly for them, so stationarity does not inherit the rounding
  // left in the slacks.
  const NewtonSystem ns = newton_system(qp, bar, d, t);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
  if (ns.ok && bar.inside(d + ns.step)) step = ns.step;
  Eigen::MatrixXd dG = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) dG += step[i] * qp.B[static_cast<std::size_t>(i)];
  res.Lambda = (ns.Sinv + ns.Sinv * dG * ns.Sinv) / t;
  res.Lambda = 0.5 * (res.Lambda + res.Lambda.transpose()).eval();
  res.nu_lo = Eigen::VectorXd::Zero(n);
  res.nu_hi = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(qp.hi[i])) {
      const double s = qp.hi[i] - d[i];
      res.nu_hi[i] = std::max(0.0, (1.0 / s + step[i] / (s * s)) / t);
    }
    if (std::isfinite(qp.lo[i])) {
      const double s = d[i] - qp.lo[i];
      res.nu_lo[i] = std::max(0.0, (1.0 / s - step[i] / (s * s)) / t);
    }
  }
  d += step;
  const Eigen::MatrixXd S = -bar.G(d);
  Eigen::VectorXd r = qp.g + qp.H * d + res.nu_hi - res.nu_lo;
  res.gap = (res.Lambda * S).trace();
  for (Eigen::Index i = 0; i < n; ++i) {
    r[i] += (res.Lambda * qp.B[static_cast<std::size_t>(i)]).trace();
    if (std::isfinite(qp.hi[i])) res.gap += res.nu_hi[i] * (qp.hi[i] - d[i]);
    if (std::isfinite(qp.lo[i])) res.gap += res.nu_lo[i] * (d[i] - qp.lo[i]);
  }
  res.kkt_residual = r.norm();
  res.d = d;
  return res;
}

}  // namespace asi
