#pragma once

#include <vector>

#include <Eigen/Core>

namespace asi {

/// min g^T d + 1/2 d^T H d  s.t.  G(d) = B0 + sum_i d_i B_i <= 0 (negative
/// semidefinite),  lo <= d <= hi  (entries may be infinite).
struct LmiQp {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;  // positive definite
  Eigen::MatrixXd B0;
  std::vector<Eigen::MatrixXd> B;
  Eigen::VectorXd lo, hi;
};

struct LmiQpResult {
  Eigen::VectorXd d;
  Eigen::MatrixXd Lambda;           // dual of the LMI, PSD
  Eigen::VectorXd nu_lo, nu_hi;     // duals of the box
  double kkt_residual = 0.0;        // || g + H d + A^*(Lambda) + nu_hi - nu_lo ||
  double gap = 0.0;                 // complementarity left over
  int newton_steps = 0;
};

/// Log-barrier path following. The starting point must satisfy the box
/// strictly and make G(d) negative definite; `start` gives such a point.
/// Throws std::invalid_argument for mismatched sizes or an infeasible start.
LmiQpResult solve_lmi_qp(const LmiQp& qp, const Eigen::VectorXd& start, double gap_tol = 1e-8);

/// Largest eigenvalue of a symmetric matrix.
double lambda_max(const Eigen::MatrixXd& m);
double lambda_min(const Eigen::MatrixXd& m);

}  // namespace asi
