#pragma once

#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

#include "asi/fem.hpp"
#include "asi/geometry.hpp"
#include "asi/source_model.hpp"

namespace asi {

/// POD reduced model on a fixed mesh. The basis is stored as nodal values
/// together with finite-difference derivative tables, which feed a C1
/// bicubic Hermite interpolant for point evaluations.
struct ReducedModel {
  Mesh mesh;
  Eigen::MatrixXd psi;          // node_count x N
  Eigen::MatrixXd A;            // N x N, A_ik = a(psi_k, psi_i)
  Eigen::VectorXd eigenvalues;  // all R eigenvalues, descending
  double eta = 0.0;
  Eigen::MatrixXd dpsi_dx, dpsi_dy, dpsi_dxy;  // nodal FD tables
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;

  Eigen::Index size() const { return psi.cols(); }

  /// Throws std::runtime_error when A is numerically singular.
  void factorize();
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return lu.solve(b); }
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& b) const {
    return lu.transpose().solve(b);
  }
};

/// C_ij = (1/R) int c_i c_j via the mass matrix.
Eigen::MatrixXd covariance(const SparseMatrix& mass, const Eigen::MatrixXd& snapshots);

struct PodResult {
  Eigen::MatrixXd psi;          // node_count x N, unit L2 norm columns
  Eigen::VectorXd eigenvalues;  // descending, length R
  Eigen::Index N = 0;
};

/// Eigenvalues below 1e-12 * lambda_1 count as zero.
inline constexpr double kEigenCutoff = 1e-12;

/// Smallest N with sum_{k<=N} lambda_k >= eta * sum of the nonzero lambdas.
Eigen::Index select_basis_count(const Eigen::VectorXd& eigenvalues, double eta);

PodResult pod_basis(const Eigen::MatrixXd& C, const Eigen::MatrixXd& snapshots, double eta);

/// Psi_f^T K Psi_f on the free nodes.
Eigen::MatrixXd reduce_operator(const Stiffness& K, const Eigen::MatrixXd& psi);

/// Full pipeline: reduce, factorize and build derivative tables.
ReducedModel build_reduced_model(const Mesh& mesh, const Stiffness& K, PodResult pod, double eta);

/// int_box psi_k for every basis function (exact for the Q1 interpolant).
Eigen::VectorXd box_integrals(const ReducedModel& rom, const Box& box);
/// int psi_k (or its normal derivative) along an axis-aligned segment.
Eigen::VectorXd line_integrals(const ReducedModel& rom, bool vertical, double at, double a,
                               double b, bool derivative = false);
/// Q1 interpolant of the basis (or of its x / y derivative) at x.
Eigen::RowVectorXd bilinear_basis(const ReducedModel& rom, const Point& x, int dx = 0,
                                  int dy = 0);

/// b_i = sum_j beta_j int_{tower_j} psi_i.
Eigen::VectorXd reduced_rhs(const ReducedModel& rom, const SourceParams& p);

/// Hermite-interpolated basis values and derivatives at x. Throws when x is
/// outside the domain or inside an obstacle.
Eigen::RowVectorXd eval_basis(const ReducedModel& rom, const Point& x);
/// Rows: d/dx1, d/dx2.
Eigen::Matrix<double, 2, Eigen::Dynamic> eval_basis_grad(const ReducedModel& rom, const Point& x);
/// Rows: d2/dx1^2, d2/dx1dx2, d2/dx2^2.
Eigen::Matrix<double, 3, Eigen::Dynamic> eval_basis_hess(const ReducedModel& rom, const Point& x);

/// Nodal first-derivative tables: central differences, second-order one-sided
/// next to the grid edge or an inactive node.
Eigen::MatrixXd fd_derivative(const Mesh& mesh, const Eigen::MatrixXd& nodal, int axis);

void save_reduced_model(const ReducedModel& rom, const std::string& dir);
/// The mesh must match the one the model was built on.
ReducedModel load_reduced_model(const Mesh& mesh, const std::string& dir);

}  // namespace asi
