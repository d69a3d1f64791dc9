#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "asi/flowfield.hpp"
#include "asi/geometry.hpp"

namespace asi {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Galerkin Q1 advection-diffusion operator on the free (non-Dirichlet)
/// nodes, factorized once and reused for every right-hand side.
class Stiffness {
 public:
  const SparseMatrix& matrix() const { return K_; }
  /// Unknown index of each mesh node, -1 for Dirichlet or inactive nodes.
  const std::vector<long>& free_index() const { return free_index_; }
  const std::vector<std::size_t>& free_nodes() const { return free_nodes_; }
  std::size_t free_count() const { return free_nodes_.size(); }
  std::size_t node_count() const { return free_index_.size(); }

  /// Nodal load columns in, nodal solution columns out (zero on Dirichlet nodes).
  Eigen::MatrixXd solve(const Eigen::MatrixXd& nodal_loads) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& nodal_load) const;

  Eigen::VectorXd restrict_to_free(const Eigen::VectorXd& nodal) const;
  Eigen::MatrixXd restrict_to_free(const Eigen::MatrixXd& nodal) const;

  friend Stiffness assemble(const Mesh& mesh, const FlowField& flow);

 private:
  using Factorization = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
  SparseMatrix K_;
  std::vector<long> free_index_;
  std::vector<std::size_t> free_nodes_;
  std::shared_ptr<const Factorization> lu_;
};

/// K_ij = a(phi_j, phi_i) = int kappa grad phi_j . grad phi_i + phi_i u . grad phi_j
/// with 2x2 Gauss quadrature and nodal kappa/u interpolated bilinearly.
/// Throws std::runtime_error when the factorization fails.
Stiffness assemble(const Mesh& mesh, const FlowField& flow);

/// Consistent Q1 mass matrix over all nodes (active cells only).
SparseMatrix assemble_mass(const Mesh& mesh);

/// f_i = int s phi_i for a nodal (Q1-interpolated) nonnegative source.
Eigen::VectorXd load_vector(const Mesh& mesh, const Eigen::VectorXd& nodal_source);
/// f_i = intensity * int_box phi_i, integrated exactly cell by cell.
Eigen::VectorXd load_vector(const Mesh& mesh, const Box& support, double intensity);
/// f_i = int s phi_i with 2x2 Gauss quadrature per active cell. Sign is not
/// checked: manufactured-solution sources may be negative.
Eigen::VectorXd load_vector(const Mesh& mesh, const std::function<double(const Point&)>& source);

struct SnapshotSet {
  Eigen::MatrixXd fields;      // node_count x R
  std::vector<Box> supports;   // generating tower per column
  std::size_t count() const { return supports.size(); }
};

/// One unit-intensity forward solve per tile of a cover_nx x cover_ny tiling
/// of the domain bounds. Tiles that carry no load on free nodes are skipped.
SnapshotSet generate_snapshots(const Mesh& mesh, const Stiffness& K, std::size_t cover_nx,
                               std::size_t cover_ny);

/// L2 norm of a nodal field (Q1 interpolant) using the mass matrix.
double l2_norm(const SparseMatrix& mass, const Eigen::VectorXd& field);

}  // namespace asi
