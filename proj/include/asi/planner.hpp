#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "asi/geometry.hpp"
#include "asi/rom.hpp"
#include "asi/source_model.hpp"

namespace asi {

struct PlannerOptions {
  double eps_bar = 1e-8;
  double delta = 1e-6;
  double gamma_bar = 1.0;
  double rho = 0.5;
  double omega = 1e-4;
  double eps1 = 1e-6, eps2 = 1e-6, eps3 = 1e-6;
  int max_iterations = 100;
  std::size_t sample_stride = 4;  // coarse samples on every stride-th node
};

/// Everything the next-best-measurement problem needs at one mission step.
struct PlannerState {
  const ReducedModel* rom = nullptr;
  Eigen::MatrixXd S;  // N x q sensitivity A^{-1} M_p
  Eigen::MatrixXd X;  // m x N design matrix
  Eigen::MatrixXd F;  // q x q information of the current measurements
  PlannerOptions opt;
};

/// S(p) = A^{-1} M_p.
Eigen::MatrixXd sensitivity(const ReducedModel& rom, const SourceParams& p);

/// F = S^T X^T X S.
Eigen::MatrixXd fim(const Eigen::MatrixXd& S, const Eigen::MatrixXd& X);

PlannerState make_planner_state(const ReducedModel& rom, const SourceParams& p,
                                const std::vector<Point>& waypoints, PlannerOptions opt = {});

/// B(z, x) and its derivatives with respect to v = (z, x1, x2).
struct BMatrix {
  Eigen::MatrixXd B;
  std::array<Eigen::MatrixXd, 3> d1;                   // B^(i)
  std::array<std::array<Eigen::MatrixXd, 3>, 3> d2;   // B^(i,j)
};

BMatrix b_matrix(const PlannerState& st, double z, const Point& x, bool derivatives = true);

/// g(x) = lambda_min(F + S^T psi(x)^T psi(x) S).
double information_gain(const PlannerState& st, const Point& x);

struct SsdpIterate {
  int iteration = 0;
  double z = 0.0;
  Point x{0.0, 0.0};
  double lambda_min = 0.0;
  double step = 0.0;
  double gamma = 0.0;
};

struct PlanResult {
  Point x{0.0, 0.0};
  double lambda_min = 0.0;  // g at the returned point
  Point x0{0.0, 0.0};       // sampled initializer
  double g0 = 0.0;
  int iterations = 0;
  bool converged = false;
  bool flagged = false;        // SSDP did not converge, initializer returned
  bool non_improving = false;  // no gain over the initializer
  std::vector<SsdpIterate> trace;
};

/// Coarse sample points (every stride-th active node) inside `region`.
std::vector<Point> coarse_samples(const Mesh& mesh, const Box& region, std::size_t stride);

/// SSDP on the nonlinear eigenvalue problem restricted to `subdomain`.
PlanResult next_best(const PlannerState& st, const Box& subdomain);

/// Sample all of the domain, pick the cover subdomain around the best sample
/// and refine there.
PlanResult plan_next(const PlannerState& st, const ConvexCover& cover);

}  // namespace asi
