#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "asi/geometry.hpp"
#include "asi/rom.hpp"
#include "asi/source_model.hpp"

namespace asi {

/// Measurements are modelled as point readings: the data term is
/// (weight / 2) * sum_m (c_d(x_m) - y_m)^2, with c_d evaluated through
/// eval_basis. Lcc = weight * X^T X.
struct SiProblem {
  const ReducedModel* rom = nullptr;
  Eigen::MatrixXd X;  // m x N design matrix
  Eigen::VectorXd y;
  double tau = 1e-8;
  double weight = 1.0;
  Eigen::MatrixXd Lcc;
  Eigen::VectorXd data_rhs;  // weight * X^T y
  std::vector<Box> bounds;   // per tower
};

SiProblem make_si_problem(const ReducedModel& rom, const std::vector<Point>& waypoints,
                          const std::vector<double>& readings, double tau,
                          std::vector<Box> bounds, double weight = 1.0);

/// Design matrix with rows eval_basis(x_m).
Eigen::MatrixXd design_matrix(const ReducedModel& rom, const std::vector<Point>& waypoints);

double objective(const SiProblem& prob, const SourceParams& p);
Eigen::VectorXd gradient(const SiProblem& prob, const SourceParams& p);
/// Hessian of the reduced objective applied to v.
Eigen::VectorXd hess_vec(const SiProblem& prob, const SourceParams& p, const Eigen::VectorXd& v);

/// N x 5M derivative of A c - b(p) with respect to p.
Eigen::MatrixXd model_jacobian(const ReducedModel& rom, const SourceParams& p);

/// Second derivative of J - w^T b with respect to p for a fixed adjoint w
/// (block diagonal, one 5x5 block per tower).
Eigen::MatrixXd lagrangian_hessian_pp(const ReducedModel& rom, const SourceParams& p,
                                      const Eigen::VectorXd& w, double tau);

/// Adjoint state -A^{-T} d for the current fit.
Eigen::VectorXd adjoint(const SiProblem& prob, const SourceParams& p);

struct NoSourceDetected : std::runtime_error {
  NoSourceDetected() : std::runtime_error("no source detected") {}
};

struct SaOptions {
  double alpha = 0.7;
  double link_factor = 3.0;   // linkage cutoff in units of max(hx, hy)
  double half_side = 1.0;     // tower half side in units of max(hx, hy)
  double beta_scale = 1.0;
};

struct SaResult {
  SourceParams init;
  Eigen::VectorXd sensitivity;          // nodal adjoint field
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> centers;     // node id per cluster
};

/// Thresholded adjoint sensitivity, single-linkage clustering, one small
/// tower per cluster bounded by the largest cover subdomain containing it.
SaResult sa_initialize(const SiProblem& prob, const ConvexCover& cover, const SaOptions& opt = {});

struct SiIterate {
  int iteration = 0;
  double objective = 0.0;
  double pg_norm = 0.0;
  Eigen::VectorXd p;
};

struct SiOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;
};

struct SiSolution {
  SourceParams p_hat;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd w;
  std::vector<SiIterate> trace;
};

/// Projected Newton-CG with Armijo backtracking along the projection arc.
SiSolution solve_si(const SiProblem& prob, const SourceParams& p0, const SiOptions& opt = {});

}  // namespace asi
