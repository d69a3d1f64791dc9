#include "asi/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "asi/lmi_qp.hpp"
#include "asi/si_solver.hpp"

namespace asi {

Eigen::MatrixXd sensitivity(const ReducedModel& rom, const SourceParams& p) {
  return rom.lu.solve(model_jacobian(rom, p));
}

Eigen::MatrixXd fim(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X) {
  if (X.cols() != S.rows()) throw std::invalid_argument("design matrix and sensitivity disagree");
  const Eigen::MatrixXd XS = X * S;
  return XS.transpose() * XS;
}

PlannerState make_planner_state(const ReducedModel& rom, const SourceParams& p,
                                const std::vector<Point>& waypoints, PlannerOptions opt) {
  PlannerState st;
  st.rom = &rom;
  st.S = sensitivity(rom, p);
  st.X = design_matrix(rom, waypoints);
  st.F = fim(st.S, st.X);
  st.opt = opt;
  return st;
}

BMatrix b_matrix(const PlannerState& st, double z, const Point& x, bool derivatives) {
  const ReducedModel& rom = *st.rom;
  const Eigen::Index q = st.S.cols();
  const Eigen::RowVectorXd a = eval_basis(rom, x) * st.S;
  BMatrix out;
  out.B = (st.opt.eps_bar + z) * Eigen::MatrixXd::Identity(q, q) - st.F - a.transpose() * a;
  if (!derivatives) return out;
  const auto grad = eval_basis_grad(rom, x);
  const auto hess = eval_basis_hess(rom, x);
  const Eigen::RowVectorXd a1 = grad.row(0) * st.S, a2 = grad.row(1) * st.S;
  const Eigen::RowVectorXd a11 = hess.row(0) * st.S, a12 = hess.row(1) * st.S,
                           a22 = hess.row(2) * st.S;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(q, q);
  out.d1[0] = Eigen::MatrixXd::Identity(q, q);
  out.d1[1] = -(a1.transpose() * a + a.transpose() * a1);
  out.d1[2] = -(a2.transpose() * a + a.transpose() * a2);
  for (auto& row : out.d2) row.fill(zero);
  out.d2[1][1] = -(a11.transpose() * a + 2.0 * a1.transpose() * a1 + a.transpose() * a11);
  out.d2[2][2] = -(a22.transpose() * a + 2.0 * a2.transpose() * a2 + a.transpose() * a22);
  out.d2[2][1] = -(a12.transpose() * a + a1.transpose() * a2 + a2.transpose() * a1 +
                   a.transpose() * a12);
  out.d2[1][2] = out.d2[2][1];
  return out;
}

double information_gain(const PlannerState& st, const Point& x) {
  const Eigen::RowVectorXd a = eval_basis(*st.rom, x) * st.S;
  return lambda_min(st.F + a.transpose() * a);
}

std::vector<Point> coarse_samples(const Mesh& mesh, const Box& region, std::size_t stride) {
  if (stride < 1) throw std::invalid_argument("sample stride must be positive");
  std::vector<Point> pts;
  for (std::size_t j = 0; j < mesh.ny(); j += stride) {
    for (std::size_t i = 0; i < mesh.nx(); i += stride) {
      const std::size_t id = mesh.index(i, j);
      const Point x = mesh.node(id);
      if (mesh.active(id) && region.contains(x) && mesh.domain().contains(x)) pts.push_back(x);
    }
  }
  return pts;
}

namespace {

struct Sampled {
  Point x;
  double g = -std::numeric_limits<double>::infinity();
};

Sampled best_sample(const PlannerState& st, const std::vector<Point>& pts) {
  Sampled best;
  for (const Point& x : pts) {
    const double g = information_gain(st, x);
    if (g > best.g) best = {x, g};
  }
  return best;
}

double positive_part(double v) { return std::max(0.0, v); }

constexpr double kSingularRatio = 1e-12;

}  // namespace

PlanResult next_best(const PlannerState& st_in, const Box& subdomain) {
  if (st_in.rom == nullptr) throw std::invalid_argument("planner has no reduced model");
  const Mesh& mesh = st_in.rom->mesh;
  const PlannerOptions& opt = st_in.opt;
  std::vector<Point> pts = coarse_samples(mesh, subdomain, opt.sample_stride);
  if (pts.empty()) {
    const Point c = subdomain.center();
    if (!mesh.domain().contains(c)) throw std::invalid_argument("subdomain has no admissible points");
    pts.push_back(c);
  }
  const Sampled init = best_sample(st_in, pts);

  // Work on information normalized by the best sampled value so the barrier
  // tolerances are relative.
  PlanResult res;
  res.x0 = init.x;
  res.g0 = init.g;
  const double fmax = lambda_max(st_in.F);
  if (!(init.g > kSingularRatio * fmax)) {
    // The information matrix is singular to working precision at every
    // sample, so the tangent problems carry no signal.
    res.x = init.x;
    res.lambda_min = init.g;
    res.flagged = true;
    res.non_improving = true;
    return res;
  }
  const double scale = init.g;
  PlannerState st = st_in;
  st.S /= std::sqrt(scale);
  st.F /= scale;

  double z = init.g / scale;
  Point x = init.x;
  const Eigen::Index q = st.S.cols();
  Eigen::MatrixXd Lambda = Eigen::MatrixXd::Identity(q, q) / static_cast<double>(q);
  double gamma = Lambda.trace() + opt.gamma_bar;

  auto theta = [&](double zz, const Point& xx, double gam) {
    return -zz + gam * positive_part(lambda_max(b_matrix(st, zz, xx, false).B));
  };

  for (int k = 0; k < opt.max_iterations; ++k) {
    res.iterations = k + 1;
    const BMatrix bm = b_matrix(st, z, x);
    Eigen::Matrix3d hl = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) hl(i, j) = (bm.d2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].cwiseProduct(Lambda)).sum();
    }
    const double mu = std::max(0.0, opt.delta - lambda_min(hl));
    const Eigen::Matrix3d H = hl + mu * Eigen::Matrix3d::Identity();

    LmiQp qp;
    qp.g = Eigen::Vector3d(-1.0, 0.0, 0.0);
    qp.H = H;
    qp.B0 = bm.B;
    qp.B = {bm.d1[0], bm.d1[1], bm.d1[2]};
    const double inf = std::numeric_limits<double>::infinity();
    qp.lo = Eigen::Vector3d(-inf, subdomain.lower.x() - x.x(), subdomain.lower.y() - x.y());
    qp.hi = Eigen::Vector3d(inf, subdomain.upper.x() - x.x(), subdomain.upper.y() - x.y());
    Eigen::VectorXd start = Eigen::Vector3d::Zero();
    for (int i = 1; i < 3; ++i) {
      const double w = qp.hi[i] - qp.lo[i];
      start[i] = std::clamp(0.0, qp.lo[i] + 1e-3 * w, qp.hi[i] - 1e-3 * w);
    }
    start[0] = -lambda_max(bm.B + start[1] * bm.d1[1] + start[2] * bm.d1[2]) - 1.0;
    LmiQpResult sol;
    try {
      sol = solve_lmi_qp(qp, start);
    } catch (const std::exception&) {
      break;
    }
    const Eigen::VectorXd& d = sol.d;
    const Eigen::MatrixXd& Lnext = sol.Lambda;

    // Stationarity of the Lagrangian (box duals included), feasibility and
    // complementarity at v_k.
    Eigen::Vector3d gradL(-1.0, 0.0, 0.0);
    for (int i = 0; i < 3; ++i) gradL[i] += (Lnext.cwiseProduct(bm.d1[static_cast<std::size_t>(i)])).sum();
    gradL += sol.nu_hi - sol.nu_lo;
    const double viol = positive_part(lambda_max(bm.B));
    const double compl_ = std::abs((Lnext * bm.B).trace());
    res.trace.push_back({k, z * scale, x, information_gain(st_in, x), 0.0, gamma});
    if ((gradL.norm() <= opt.eps1 && viol <= opt.eps2 && compl_ <= opt.eps3) ||
        d.norm() <= 1e-12) {
      res.converged = true;
      Lambda = Lnext;
      break;
    }

    if (gamma < Lnext.trace() + opt.gamma_bar) gamma = std::max(1.5 * gamma, Lnext.trace() + opt.gamma_bar);
    const double Delta = -d.dot(H * d) + (Lnext * bm.B).trace() - gamma * viol;
    const double th0 = theta(z, x, gamma);
    double alpha = 1.0;
    bool accepted = false;
    for (int t = 0; t < 50; ++t, alpha *= opt.rho) {
      const double zn = z + alpha * d[0];
      const Point xn = (x + alpha * d.tail<2>()).cwiseMax(subdomain.lower).cwiseMin(subdomain.upper);
      if (!mesh.domain().contains(xn)) continue;
      if (theta(zn, xn, gamma) <= th0 + opt.omega * alpha * Delta) {
        z = zn;
        x = xn;
        accepted = true;
        break;
      }
    }
    Lambda = Lnext;
    if (!accepted) break;
    res.trace.back().step = alpha;
  }

  if (res.converged) {
    res.x = x;
  } else {
    res.x = init.x;
    res.flagged = true;
  }
  res.lambda_min = information_gain(st_in, res.x);
  if (res.lambda_min < init.g) {
    // Never hand back less than the initializer guarantees.
    res.x = init.x;
    res.lambda_min = init.g;
  }
  res.non_improving = !(res.lambda_min > init.g);
  return res;
}

PlanResult plan_next(const PlannerState& st, const ConvexCover& cover) {
  const Mesh& mesh = st.rom->mesh;
  const Sampled init =
      best_sample(st, coarse_samples(mesh, mesh.domain().bounds, st.opt.sample_stride));
  const Box* sub = cover.largest_containing(init.x);
  return next_best(st, sub ? *sub : mesh.domain().bounds);
}

}  // namespace asi
