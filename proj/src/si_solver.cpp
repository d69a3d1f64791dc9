#include "asi/si_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace asi {

Eigen::MatrixXd design_matrix(const ReducedModel& rom, const std::vector<Point>& waypoints) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(waypoints.size()), rom.size());
  for (std::size_t m = 0; m < waypoints.size(); ++m) {
    X.row(static_cast<Eigen::Index>(m)) = eval_basis(rom, waypoints[m]);
  }
  return X;
}

SiProblem make_si_problem(const ReducedModel& rom, const std::vector<Point>& waypoints,
                          const std::vector<double>& readings, double tau,
                          std::vector<Box> bounds, double weight) {
  if (waypoints.size() != readings.size()) {
    throw std::invalid_argument("waypoint and reading counts differ");
  }
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  SiProblem prob;
  prob.rom = &rom;
  prob.X = design_matrix(rom, waypoints);
  prob.y = Eigen::Map<const Eigen::VectorXd>(readings.data(), static_cast<Eigen::Index>(readings.size()));
  prob.tau = tau;
  prob.weight = weight;
  prob.Lcc = weight * prob.X.transpose() * prob.X;
  prob.data_rhs = weight * prob.X.transpose() * prob.y;
  prob.bounds = std::move(bounds);
  return prob;
}

namespace {

void check_params(const SiProblem& prob, const SourceParams& p) {
  if (prob.rom == nullptr) throw std::invalid_argument("problem has no reduced model");
  if (!is_feasible(p)) throw std::invalid_argument("infeasible source parameters");
}

double regularization(const SourceParams& p) {
  double r = 0.0;
  for (const Tower& t : p.towers) r += t.beta * t.area();
  return r;
}

}  // namespace

double objective(const SiProblem& prob, const SourceParams& p) {
  check_params(prob, p);
  const Eigen::VectorXd c = prob.rom->solve(reduced_rhs(*prob.rom, p));
  const Eigen::VectorXd r = prob.X * c - prob.y;
  return 0.5 * prob.weight * r.squaredNorm() + prob.tau * regularization(p);
}

Eigen::VectorXd adjoint(const SiProblem& prob, const SourceParams& p) {
  const Eigen::VectorXd c = prob.rom->solve(reduced_rhs(*prob.rom, p));
  const Eigen::VectorXd d = prob.Lcc * c - prob.data_rhs;
  return prob.rom->solve_transposed(-d);
}

Eigen::MatrixXd model_jacobian(const ReducedModel& rom, const SourceParams& p) {
  Eigen::MatrixXd Mp(rom.size(), kTowerParams * static_cast<Eigen::Index>(p.size()));
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Tower& t = p.towers[j];
    const Eigen::Index o = kTowerParams * static_cast<Eigen::Index>(j);
    const double b = t.beta;
    Mp.col(o) = -box_integrals(rom, t.support());
    Mp.col(o + 1) = b * line_integrals(rom, true, t.lower.x(), t.lower.y(), t.upper.y());
    Mp.col(o + 2) = b * line_integrals(rom, false, t.lower.y(), t.lower.x(), t.upper.x());
    Mp.col(o + 3) = -b * line_integrals(rom, true, t.upper.x(), t.lower.y(), t.upper.y());
    Mp.col(o + 4) = -b * line_integrals(rom, false, t.upper.y(), t.lower.x(), t.upper.x());
  }
  return Mp;
}

namespace {

Eigen::VectorXd regularization_gradient(const SourceParams& p, double tau) {
  Eigen::VectorXd g(kTowerParams * static_cast<Eigen::Index>(p.size()));
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Tower& t = p.towers[j];
    const double w1 = t.upper.x() - t.lower.x(), w2 = t.upper.y() - t.lower.y();
    g.segment<kTowerParams>(kTowerParams * static_cast<Eigen::Index>(j))
        << tau * w1 * w2, -tau * t.beta * w2, -tau * t.beta * w1, tau * t.beta * w2,
        tau * t.beta * w1;
  }
  return g;
}

}  // namespace

Eigen::VectorXd gradient(const SiProblem& prob, const SourceParams& p) {
  check_params(prob, p);
  const Eigen::VectorXd w = adjoint(prob, p);
  return regularization_gradient(p, prob.tau) + model_jacobian(*prob.rom, p).transpose() * w;
}

Eigen::MatrixXd lagrangian_hessian_pp(const ReducedModel& rom, const SourceParams& p,
                                      const Eigen::VectorXd& w, double tau) {
  const Eigen::Index q = kTowerParams * static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Tower& t = p.towers[j];
    const double b = t.beta;
    const double lx = t.lower.x(), ly = t.lower.y(), ux = t.upper.x(), uy = t.upper.y();
    const double w1 = ux - lx, w2 = uy - ly;
    auto wd = [&](double x, double y) { return bilinear_basis(rom, {x, y}).dot(w); };
    auto line = [&](bool vertical, double at, double a, double c, bool deriv) {
      return line_integrals(rom, vertical, at, a, c, deriv).dot(w);
    };
    // Regularization part (lower triangle).
    Eigen::Matrix<double, 5, 5> Jpp = Eigen::Matrix<double, 5, 5>::Zero();
    Jpp(1, 0) = -w2;
    Jpp(2, 0) = -w1;
    Jpp(2, 1) = b;
    Jpp(3, 0) = w2;
    Jpp(3, 2) = -b;
    Jpp(4, 0) = w1;
    Jpp(4, 1) = -b;
    Jpp(4, 3) = b;
    Jpp *= tau;
    // Second derivatives of l(w_d; s_d) = beta int_box w_d.
    Eigen::Matrix<double, 5, 5> Lp = Eigen::Matrix<double, 5, 5>::Zero();
    Lp(1, 0) = -line(true, lx, ly, uy, false);
    Lp(2, 0) = -line(false, ly, lx, ux, false);
    Lp(3, 0) = line(true, ux, ly, uy, false);
    Lp(4, 0) = line(false, uy, lx, ux, false);
    Lp(1, 1) = -b * line(true, lx, ly, uy, true);
    Lp(2, 2) = -b * line(false, ly, lx, ux, true);
    Lp(3, 3) = b * line(true, ux, ly, uy, true);
    Lp(4, 4) = b * line(false, uy, lx, ux, true);
    Lp(2, 1) = b * wd(lx, ly);
    Lp(3, 2) = -b * wd(ux, ly);
    Lp(4, 1) = -b * wd(lx, uy);
    Lp(4, 3) = b * wd(ux, uy);
    Eigen::Matrix<double, 5, 5> blk = Jpp - Lp;
    blk.triangularView<Eigen::StrictlyUpper>() = blk.transpose().triangularView<Eigen::StrictlyUpper>();
    const Eigen::Index o = kTowerParams * static_cast<Eigen::Index>(j);
    H.block<5, 5>(o, o) = blk;
  }
  return H;
}

Eigen::VectorXd hess_vec(const SiProblem& prob, const SourceParams& p, const Eigen::VectorXd& v) {
  check_params(prob, p);
  if (v.size() != kTowerParams * static_cast<Eigen::Index>(p.size())) {
    throw std::invalid_argument("direction length does not match the parameters");
  }
  const ReducedModel& rom = *prob.rom;
  const Eigen::VectorXd w = adjoint(prob, p);
  const Eigen::MatrixXd Mp = model_jacobian(rom, p);
  // State sensitivity dc = -A^{-1} M_p v, then the adjoint sensitivity.
  const Eigen::VectorXd h1 = rom.solve(-(Mp * v));
  const Eigen::VectorXd h3 = prob.Lcc * h1;
  const Eigen::VectorXd h4 = rom.solve_transposed(-h3);
  return Mp.transpose() * h4 + lagrangian_hessian_pp(rom, p, w, prob.tau) * v;
}

SaResult sa_initialize(const SiProblem& prob, const ConvexCover& cover, const SaOptions& opt) {
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (prob.rom == nullptr) throw std::invalid_argument("problem has no reduced model");
  const ReducedModel& rom = *prob.rom;
  const Mesh& mesh = rom.mesh;
  SaResult out;
  const Eigen::VectorXd wbar = rom.solve_transposed(-prob.data_rhs);
  out.sensitivity = rom.psi * wbar;

  double wmin = 0.0;
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (mesh.active(id)) wmin = std::min(wmin, out.sensitivity[static_cast<Eigen::Index>(id)]);
  }
  if (!(wmin < 0.0)) throw NoSourceDetected();
  std::vector<std::size_t> kept;
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (mesh.active(id) && out.sensitivity[static_cast<Eigen::Index>(id)] <= opt.alpha * wmin) {
      kept.push_back(id);
    }
  }

  // Single linkage: union nodes closer than the cutoff.
  const double h = std::max(mesh.hx(), mesh.hy());
  const double cutoff = opt.link_factor * h;
  std::vector<long> slot(mesh.node_count(), -1);
  for (std::size_t k = 0; k < kept.size(); ++k) slot[kept[k]] = static_cast<long>(k);
  std::vector<std::size_t> parent(kept.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  const long rx = static_cast<long>(std::ceil(cutoff / mesh.hx()));
  const long ry = static_cast<long>(std::ceil(cutoff / mesh.hy()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const long i = static_cast<long>(kept[k] % mesh.nx()), j = static_cast<long>(kept[k] / mesh.nx());
    for (long dj = -ry; dj <= ry; ++dj) {
      for (long di = -rx; di <= rx; ++di) {
        const long ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= static_cast<long>(mesh.nx()) || jj >= static_cast<long>(mesh.ny())) continue;
        const long other = slot[mesh.index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj))];
        if (other < 0) continue;
        if ((mesh.node(kept[k]) - mesh.node(kept[static_cast<std::size_t>(other)])).norm() > cutoff) continue;
        const std::size_t a = find(k), b = find(static_cast<std::size_t>(other));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<long> cluster_of(kept.size(), -1);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t r = find(k);
    if (cluster_of[r] < 0) {
      cluster_of[r] = static_cast<long>(out.clusters.size());
      out.clusters.emplace_back();
    }
    out.clusters[static_cast<std::size_t>(cluster_of[r])].push_back(kept[k]);
  }
  for (const auto& c : out.clusters) {
    std::size_t best = c.front();
    for (std::size_t id : c) {
      if (out.sensitivity[static_cast<Eigen::Index>(id)] < out.sensitivity[static_cast<Eigen::Index>(best)]) best = id;
    }
    out.centers.push_back(best);
  }
  // Strongest cluster first; ties by node id.
  std::vector<std::size_t> order(out.clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = out.sensitivity[static_cast<Eigen::Index>(out.centers[a])];
    const double vb = out.sensitivity[static_cast<Eigen::Index>(out.centers[b])];
    if (va != vb) return va < vb;
    return out.centers[a] < out.centers[b];
  });
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> centers;
  for (std::size_t k : order) {
    clusters.push_back(std::move(out.clusters[k]));
    centers.push_back(out.centers[k]);
  }
  out.clusters = std::move(clusters);
  out.centers = std::move(centers);

  const double vmax = std::abs(out.sensitivity[static_cast<Eigen::Index>(out.centers.front())]);
  const double half = opt.half_side * h;
  for (std::size_t c : out.centers) {
    const Point z = mesh.node(c);
    const Box* sub = cover.largest_containing(z);
    const Box bound = sub ? *sub : mesh.domain().bounds;
    Tower t;
    t.beta = std::abs(out.sensitivity[static_cast<Eigen::Index>(c)]) / vmax * opt.beta_scale;
    t.lower = (z - Point{half, half}).cwiseMax(bound.lower);
    t.upper = (z + Point{half, half}).cwiseMin(bound.upper);
    out.init.towers.push_back(t);
    out.init.bounds.push_back(bound);
  }
  return out;
}

namespace {

struct Limits {
  Eigen::VectorXd lo, hi;
};

Limits limits(const SourceParams& p, const Eigen::VectorXd& x) {
  const Eigen::Index q = x.size();
  Limits l{Eigen::VectorXd(q), Eigen::VectorXd(q)};
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Box& b = p.bounds[j];
    const Eigen::Index o = kTowerParams * static_cast<Eigen::Index>(j);
    l.lo[o] = 0.0;
    l.hi[o] = std::numeric_limits<double>::infinity();
    for (int d = 0; d < 2; ++d) {
      l.lo[o + 1 + d] = b.lower[d];
      l.hi[o + 1 + d] = x[o + 3 + d];
      l.lo[o + 3 + d] = x[o + 1 + d];
      l.hi[o + 3 + d] = b.upper[d];
    }
  }
  return l;
}

}  // namespace

SiSolution solve_si(const SiProblem& prob, const SourceParams& p0, const SiOptions& opt) {
  if (prob.rom == nullptr) throw std::invalid_argument("problem has no reduced model");
  if (!is_feasible(p0)) throw std::invalid_argument("initial source parameters are infeasible");
  auto project = [&](const Eigen::VectorXd& x) { return project_feasible(p0.with(x)).flatten(); };

  SiSolution sol;
  Eigen::VectorXd x = p0.flatten();
  double J = objective(prob, p0);
  Eigen::VectorXd g = gradient(prob, p0);
  const Eigen::Index q = x.size();

  int it = 0;
  for (;; ++it) {
    const double pg = (project(x - g) - x).norm();
    sol.trace.push_back({it, J, pg, x});
    if (pg <= opt.tolerance * (1.0 + std::abs(J))) {
      sol.converged = true;
      break;
    }
    if (it >= opt.max_iterations) break;

    const SourceParams p = p0.with(x);
    const Limits lim = limits(p0, x);
    Eigen::VectorXd free = Eigen::VectorXd::Ones(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      const double tol = 1e-12 * (1.0 + std::abs(x[i]));
      if ((x[i] <= lim.lo[i] + tol && g[i] > 0.0) || (x[i] >= lim.hi[i] - tol && g[i] < 0.0)) free[i] = 0.0;
    }
    const Eigen::VectorXd gf = g.cwiseProduct(free);

    // Truncated CG on the free block.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd r = -gf, s = r;
    const double gnorm = gf.norm();
    const double cg_tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;
    for (Eigen::Index k = 0; k < 2 * q && r.norm() > cg_tol; ++k) {
      const Eigen::VectorXd Hs = hess_vec(prob, p, s).cwiseProduct(free);
      const double curv = s.dot(Hs);
      if (!(curv > 0.0)) {
        if (k == 0) d = -gf;
        break;
      }
      const double a = r.squaredNorm() / curv;
      d += a * s;
      const Eigen::VectorXd r_new = r - a * Hs;
      s = r_new + (r_new.squaredNorm() / r.squaredNorm()) * s;
      r = r_new;
    }
    if (!(d.dot(g) < 0.0)) d = -gf;

    auto line_search = [&](const Eigen::VectorXd& dir, Eigen::VectorXd& x_new, double& J_new) {
      double step = 1.0;
      for (int k = 0; k < 60; ++k, step *= 0.5) {
        x_new = project(x + step * dir);
        if ((x_new - x).norm() <= 1e-15 * (1.0 + x.norm())) return false;
        J_new = objective(prob, p0.with(x_new));
        if (J_new <= J + 1e-4 * g.dot(x_new - x)) return true;
      }
      return false;
    };
    Eigen::VectorXd x_new;
    double J_new = J;
    bool ok = line_search(d, x_new, J_new);
    if (!ok && d != -gf) ok = line_search(-gf, x_new, J_new);
    if (!ok) break;
    x = x_new;
    J = J_new;
    g = gradient(prob, p0.with(x));
  }
  sol.iterations = it;
  sol.p_hat = p0.with(x);
  sol.objective_value = J;
  sol.w = adjoint(prob, sol.p_hat);
  return sol;
}

}  // namespace asi
