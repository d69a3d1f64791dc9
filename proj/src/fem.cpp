#include "asi/fem.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "asi/interpolation.hpp"

namespace asi {

namespace {

constexpr double kGauss = 0.21132486540518711775;  // (1 - 1/sqrt(3)) / 2
constexpr std::array<double, 2> kGaussPoints{kGauss, 1.0 - kGauss};

struct Shape {
  std::array<double, 4> phi;
  std::array<double, 4> dx;
  std::array<double, 4> dy;
};

Shape shape_at(double s, double t, double hx, double hy) {
  Shape sh;
  sh.phi = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
  sh.dx = {-(1 - t) / hx, (1 - t) / hx, t / hx, -t / hx};
  sh.dy = {-(1 - s) / hy, -s / hy, s / hy, (1 - s) / hy};
  return sh;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

}  // namespace

Stiffness assemble(const Mesh& mesh, const FlowField& flow) {
  if (flow.size() != mesh.node_count() ||
      static_cast<std::size_t>(flow.velocity.rows()) != mesh.node_count()) {
    throw std::invalid_argument("flow field and mesh have different node counts");
  }
  Stiffness st;
  st.free_index_.assign(mesh.node_count(), -1);
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (mesh.free(id)) {
      st.free_index_[id] = static_cast<long>(st.free_nodes_.size());
      st.free_nodes_.push_back(id);
    }
  }
  const auto nf = static_cast<Eigen::Index>(st.free_nodes_.size());
  if (nf == 0) throw std::runtime_error("mesh has no free nodes");

  const double hx = mesh.hx(), hy = mesh.hy();
  const double wq = 0.25 * hx * hy;
  Triplets trip;
  trip.reserve(static_cast<std::size_t>(mesh.cell_count()) * 16);
  for (std::size_t cj = 0; cj + 1 < mesh.ny(); ++cj) {
    for (std::size_t ci = 0; ci + 1 < mesh.nx(); ++ci) {
      if (!mesh.cell_active(ci, cj)) continue;
      const auto nodes = mesh.cell_nodes(ci, cj);
      std::array<std::array<double, 4>, 4> ke{};
      for (double s : kGaussPoints) {
        for (double t : kGaussPoints) {
          const Shape sh = shape_at(s, t, hx, hy);
          double kappa = 0.0, ux = 0.0, uy = 0.0;
          for (std::size_t a = 0; a < 4; ++a) {
            const auto id = static_cast<Eigen::Index>(nodes[a]);
            kappa += sh.phi[a] * flow.diffusivity[id];
            ux += sh.phi[a] * flow.velocity(id, 0);
            uy += sh.phi[a] * flow.velocity(id, 1);
          }
          for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
              ke[a][b] += wq * (kappa * (sh.dx[b] * sh.dx[a] + sh.dy[b] * sh.dy[a]) +
                                sh.phi[a] * (ux * sh.dx[b] + uy * sh.dy[b]));
            }
          }
        }
      }
      for (std::size_t a = 0; a < 4; ++a) {
        const long ia = st.free_index_[nodes[a]];
        if (ia < 0) continue;
        for (std::size_t b = 0; b < 4; ++b) {
          const long ib = st.free_index_[nodes[b]];
          if (ib < 0) continue;
          trip.emplace_back(ia, ib, ke[a][b]);
        }
      }
    }
  }
  st.K_.resize(nf, nf);
  st.K_.setFromTriplets(trip.begin(), trip.end());
  st.K_.makeCompressed();

  auto lu = std::make_shared<Stiffness::Factorization>();
  lu->compute(st.K_);
  if (lu->info() != Eigen::Success) {
    throw std::runtime_error(
        "stiffness factorization failed (singular operator); consider raising the "
        "diffusivity floor: " +
        lu->lastErrorMessage());
  }
  st.lu_ = std::move(lu);
  return st;
}

Eigen::VectorXd Stiffness::restrict_to_free(const Eigen::VectorXd& nodal) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(free_nodes_.size()));
  for (std::size_t k = 0; k < free_nodes_.size(); ++k) {
    r[static_cast<Eigen::Index>(k)] = nodal[static_cast<Eigen::Index>(free_nodes_[k])];
  }
  return r;
}

Eigen::MatrixXd Stiffness::restrict_to_free(const Eigen::MatrixXd& nodal) const {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(free_nodes_.size()), nodal.cols());
  for (std::size_t k = 0; k < free_nodes_.size(); ++k) {
    r.row(static_cast<Eigen::Index>(k)) = nodal.row(static_cast<Eigen::Index>(free_nodes_[k]));
  }
  return r;
}

Eigen::MatrixXd Stiffness::solve(const Eigen::MatrixXd& nodal_loads) const {
  if (static_cast<std::size_t>(nodal_loads.rows()) != node_count()) {
    throw std::invalid_argument("load vector length does not match the mesh");
  }
  const Eigen::MatrixXd rhs = restrict_to_free(nodal_loads);
  const Eigen::MatrixXd u = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success || !u.allFinite()) {
    throw std::runtime_error("forward solve broke down");
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nodal_loads.rows(), nodal_loads.cols());
  for (std::size_t k = 0; k < free_nodes_.size(); ++k) {
    c.row(static_cast<Eigen::Index>(free_nodes_[k])) = u.row(static_cast<Eigen::Index>(k));
  }
  return c;
}

Eigen::VectorXd Stiffness::solve(const Eigen::VectorXd& nodal_load) const {
  const Eigen::MatrixXd c = solve(Eigen::MatrixXd(nodal_load));
  return c.col(0);
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  const double hx = mesh.hx(), hy = mesh.hy();
  // Exact Q1 element mass matrix on a rectangle.
  const double base = hx * hy / 36.0;
  constexpr std::array<std::array<double, 4>, 4> pattern{
      {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}}};
  Triplets trip;
  for (std::size_t cj = 0; cj + 1 < mesh.ny(); ++cj) {
    for (std::size_t ci = 0; ci + 1 < mesh.nx(); ++ci) {
      if (!mesh.cell_active(ci, cj)) continue;
      const auto nodes = mesh.cell_nodes(ci, cj);
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
          trip.emplace_back(nodes[a], nodes[b], base * pattern[a][b]);
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

Eigen::VectorXd load_vector(const Mesh& mesh, const Eigen::VectorXd& nodal_source) {
  if (static_cast<std::size_t>(nodal_source.size()) != mesh.node_count()) {
    throw std::invalid_argument("source field length does not match the mesh");
  }
  if ((nodal_source.array() < 0.0).any()) {
    throw std::invalid_argument("source must be nonnegative");
  }
  return assemble_mass(mesh) * nodal_source;
}

Eigen::VectorXd load_vector(const Mesh& mesh, const Box& support, double intensity) {
  if (!(intensity >= 0.0)) throw std::invalid_argument("source intensity must be nonnegative");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  if (intensity == 0.0) return f;
  for_each_region_cell(mesh, support, [&](const CellWeights& cw) {
    for (std::size_t a = 0; a < 4; ++a) {
      f[static_cast<Eigen::Index>(cw.nodes[a])] += intensity * cw.w[a];
    }
  });
  return f;
}

Eigen::VectorXd load_vector(const Mesh& mesh, const std::function<double(const Point&)>& source) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  const double hx = mesh.hx(), hy = mesh.hy();
  const double wq = 0.25 * hx * hy;
  const Point origin = mesh.domain().bounds.lower;
  for (std::size_t cj = 0; cj + 1 < mesh.ny(); ++cj) {
    for (std::size_t ci = 0; ci + 1 < mesh.nx(); ++ci) {
      if (!mesh.cell_active(ci, cj)) continue;
      const auto nodes = mesh.cell_nodes(ci, cj);
      for (double s : kGaussPoints) {
        for (double t : kGaussPoints) {
          const Point x = origin + Point{(static_cast<double>(ci) + s) * hx,
                                         (static_cast<double>(cj) + t) * hy};
          const double sx = source(x);
          const Shape sh = shape_at(s, t, hx, hy);
          for (std::size_t a = 0; a < 4; ++a) {
            f[static_cast<Eigen::Index>(nodes[a])] += wq * sx * sh.phi[a];
          }
        }
      }
    }
  }
  return f;
}

SnapshotSet generate_snapshots(const Mesh& mesh, const Stiffness& K, std::size_t cover_nx,
                               std::size_t cover_ny) {
  if (cover_nx < 1 || cover_ny < 1) throw std::invalid_argument("empty snapshot cover");
  const Box& b = mesh.domain().bounds;
  const double w = b.width() / static_cast<double>(cover_nx);
  const double h = b.height() / static_cast<double>(cover_ny);
  SnapshotSet set;
  std::vector<Eigen::VectorXd> loads;
  for (std::size_t j = 0; j < cover_ny; ++j) {
    for (std::size_t i = 0; i < cover_nx; ++i) {
      // Last tile snaps to the bound so the tiling covers it exactly.
      const Box tile{{b.lower.x() + static_cast<double>(i) * w, b.lower.y() + static_cast<double>(j) * h},
                     {i + 1 == cover_nx ? b.upper.x() : b.lower.x() + static_cast<double>(i + 1) * w,
                      j + 1 == cover_ny ? b.upper.y() : b.lower.y() + static_cast<double>(j + 1) * h}};
      Eigen::VectorXd f = load_vector(mesh, tile, 1.0);
      if (K.restrict_to_free(f).cwiseAbs().maxCoeff() == 0.0) continue;
      set.supports.push_back(tile);
      loads.push_back(std::move(f));
    }
  }
  if (loads.empty()) throw std::runtime_error("snapshot cover produced no loaded tiles");
  Eigen::MatrixXd F(static_cast<Eigen::Index>(mesh.node_count()),
                    static_cast<Eigen::Index>(loads.size()));
  for (std::size_t k = 0; k < loads.size(); ++k) F.col(static_cast<Eigen::Index>(k)) = loads[k];
  set.fields = K.solve(F);
  return set;
}

double l2_norm(const SparseMatrix& mass, const Eigen::VectorXd& field) {
  return std::sqrt(std::max(0.0, field.dot(mass * field)));
}

}  // namespace asi
