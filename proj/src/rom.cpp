#include "asi/rom.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "asi/interpolation.hpp"
#include "asi/io.hpp"
#include "json.hpp"

namespace asi {

Eigen::MatrixXd covariance(const SparseMatrix& mass, const Eigen::MatrixXd& snapshots) {
  if (mass.rows() != snapshots.rows()) {
    throw std::invalid_argument("snapshots and mass matrix live on different meshes");
  }
  if (snapshots.cols() < 1) throw std::invalid_argument("no snapshots");
  const Eigen::MatrixXd MS = mass * snapshots;
  Eigen::MatrixXd C = snapshots.transpose() * MS / static_cast<double>(snapshots.cols());
  return 0.5 * (C + C.transpose());
}

Eigen::Index select_basis_count(const Eigen::VectorXd& eigenvalues, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (eigenvalues.size() == 0 || !(eigenvalues[0] > 0.0)) {
    throw std::invalid_argument("all snapshots are zero");
  }
  const double cutoff = kEigenCutoff * eigenvalues[0];
  Eigen::Index rank = 0;
  double total = 0.0;
  while (rank < eigenvalues.size() && eigenvalues[rank] >= cutoff) total += eigenvalues[rank++];
  double partial = 0.0;
  for (Eigen::Index k = 0; k < rank; ++k) {
    partial += eigenvalues[k];
    if (partial >= eta * total) return k + 1;
  }
  return rank;
}

PodResult pod_basis(const Eigen::MatrixXd& C, const Eigen::MatrixXd& snapshots, double eta) {
  const Eigen::Index R = C.rows();
  if (R < 1 || C.cols() != R || snapshots.cols() != R) {
    throw std::invalid_argument("covariance and snapshot count disagree");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigensolver failed");
  PodResult out;
  out.eigenvalues = eig.eigenvalues().reverse();
  const Eigen::MatrixXd Q = eig.eigenvectors().rowwise().reverse();
  out.N = select_basis_count(out.eigenvalues, eta);
  out.psi.resize(snapshots.rows(), out.N);
  for (Eigen::Index k = 0; k < out.N; ++k) {
    Eigen::VectorXd col = snapshots * Q.col(k) / std::sqrt(static_cast<double>(R) * out.eigenvalues[k]);
    // Fix the sign so the largest-magnitude entry is positive.
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col[imax] < 0.0) col = -col;
    out.psi.col(k) = col;
  }
  return out;
}

Eigen::MatrixXd reduce_operator(const Stiffness& K, const Eigen::MatrixXd& psi) {
  if (static_cast<std::size_t>(psi.rows()) != K.node_count()) {
    throw std::invalid_argument("basis is not on the stiffness mesh");
  }
  const Eigen::MatrixXd pf = K.restrict_to_free(psi);
  const Eigen::MatrixXd Kp = K.matrix() * pf;
  return pf.transpose() * Kp;
}

void ReducedModel::factorize() {
  lu.compute(A);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    throw std::runtime_error("reduced operator is singular (rcond " + format_double(rc) +
                             "); increase eta or the basis count");
  }
}

Eigen::MatrixXd fd_derivative(const Mesh& mesh, const Eigen::MatrixXd& nodal, int axis) {
  const std::size_t nx = mesh.nx(), ny = mesh.ny();
  const double h = axis == 0 ? mesh.hx() : mesh.hy();
  const std::size_t len = axis == 0 ? nx : ny;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nodal.rows(), nodal.cols());
  auto id = [&](std::size_t i, std::size_t j, long k) -> long {
    // Node k steps along `axis` from (i, j), or -1 when off-grid / inactive.
    const long pos = static_cast<long>(axis == 0 ? i : j) + k;
    if (pos < 0 || pos >= static_cast<long>(len)) return -1;
    const std::size_t n = axis == 0 ? mesh.index(static_cast<std::size_t>(pos), j)
                                    : mesh.index(i, static_cast<std::size_t>(pos));
    return mesh.active(n) ? static_cast<long>(n) : -1;
  };
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const long c = id(i, j, 0);
      if (c < 0) continue;
      const long m1 = id(i, j, -1), p1 = id(i, j, 1);
      const long m2 = id(i, j, -2), p2 = id(i, j, 2);
      auto row = [&](long n) { return nodal.row(n); };
      if (m1 >= 0 && p1 >= 0) {
        out.row(c) = (row(p1) - row(m1)) / (2.0 * h);
      } else if (p1 >= 0 && p2 >= 0) {
        out.row(c) = (-3.0 * row(c) + 4.0 * row(p1) - row(p2)) / (2.0 * h);
      } else if (m1 >= 0 && m2 >= 0) {
        out.row(c) = (3.0 * row(c) - 4.0 * row(m1) + row(m2)) / (2.0 * h);
      } else if (p1 >= 0) {
        out.row(c) = (row(p1) - row(c)) / h;
      } else if (m1 >= 0) {
        out.row(c) = (row(c) - row(m1)) / h;
      }
    }
  }
  return out;
}

ReducedModel build_reduced_model(const Mesh& mesh, const Stiffness& K, PodResult pod, double eta) {
  ReducedModel rom;
  rom.mesh = mesh;
  rom.psi = std::move(pod.psi);
  rom.eigenvalues = std::move(pod.eigenvalues);
  rom.eta = eta;
  rom.A = reduce_operator(K, rom.psi);
  rom.factorize();
  rom.dpsi_dx = fd_derivative(mesh, rom.psi, 0);
  rom.dpsi_dy = fd_derivative(mesh, rom.psi, 1);
  rom.dpsi_dxy = fd_derivative(mesh, rom.dpsi_dx, 1);
  return rom;
}

Eigen::VectorXd box_integrals(const ReducedModel& rom, const Box& box) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rom.size());
  for_each_region_cell(rom.mesh, box, [&](const CellWeights& cw) {
    for (std::size_t a = 0; a < 4; ++a) {
      out += cw.w[a] * rom.psi.row(static_cast<Eigen::Index>(cw.nodes[a])).transpose();
    }
  });
  return out;
}

Eigen::VectorXd line_integrals(const ReducedModel& rom, bool vertical, double at, double a,
                               double b, bool derivative) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rom.size());
  for_each_line_cell(rom.mesh, vertical, at, a, b, derivative, [&](const CellWeights& cw) {
    for (std::size_t k = 0; k < 4; ++k) {
      out += cw.w[k] * rom.psi.row(static_cast<Eigen::Index>(cw.nodes[k])).transpose();
    }
  });
  return out;
}

Eigen::RowVectorXd bilinear_basis(const ReducedModel& rom, const Point& x, int dx, int dy) {
  const CellWeights cw = dx ? bilinear_dx_weights(rom.mesh, x)
                         : dy ? bilinear_dy_weights(rom.mesh, x)
                              : bilinear_weights(rom.mesh, x);
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(rom.size());
  for (std::size_t a = 0; a < 4; ++a) out += cw.w[a] * rom.psi.row(static_cast<Eigen::Index>(cw.nodes[a]));
  return out;
}

Eigen::VectorXd reduced_rhs(const ReducedModel& rom, const SourceParams& p) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rom.size());
  for (const Tower& t : p.towers) {
    if (t.beta != 0.0) b += t.beta * box_integrals(rom, t.support());
  }
  return b;
}

namespace {

// Cubic Hermite shape functions on [0, 1] and their derivatives:
// index 0/1 = value basis at s=0/1, 2/3 = slope basis at s=0/1.
std::array<double, 4> hermite(double s, int order) {
  switch (order) {
    case 0:
      return {2 * s * s * s - 3 * s * s + 1, -2 * s * s * s + 3 * s * s, s * s * s - 2 * s * s + s,
              s * s * s - s * s};
    case 1:
      return {6 * s * s - 6 * s, -6 * s * s + 6 * s, 3 * s * s - 4 * s + 1, 3 * s * s - 2 * s};
    default:
      return {12 * s - 6, -12 * s + 6, 6 * s - 4, 6 * s - 2};
  }
}

Eigen::RowVectorXd hermite_eval(const ReducedModel& rom, const Point& x, int ox, int oy) {
  const Mesh& mesh = rom.mesh;
  if (!mesh.domain().contains(x)) {
    throw std::invalid_argument("evaluation point outside the domain or inside an obstacle");
  }
  const double hx = mesh.hx(), hy = mesh.hy();
  const std::size_t ci = mesh.cell_column(x.x()), cj = mesh.cell_row(x.y());
  const Point& lo = mesh.domain().bounds.lower;
  const double s = (x.x() - lo.x()) / hx - static_cast<double>(ci);
  const double t = (x.y() - lo.y()) / hy - static_cast<double>(cj);
  const auto hs = hermite(s, ox), ht = hermite(t, oy);
  const double sx = std::pow(hx, -ox), sy = std::pow(hy, -oy);
  const auto nodes = mesh.cell_nodes(ci, cj);
  constexpr std::array<std::array<int, 2>, 4> corner{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(rom.size());
  for (std::size_t c = 0; c < 4; ++c) {
    const auto a = static_cast<std::size_t>(corner[c][0]), b = static_cast<std::size_t>(corner[c][1]);
    const auto n = static_cast<Eigen::Index>(nodes[c]);
    const double wv = hs[a] * ht[b];
    const double wx = hx * hs[2 + a] * ht[b];
    const double wy = hy * hs[a] * ht[2 + b];
    const double wxy = hx * hy * hs[2 + a] * ht[2 + b];
    out += sx * sy *
           (wv * rom.psi.row(n) + wx * rom.dpsi_dx.row(n) + wy * rom.dpsi_dy.row(n) +
            wxy * rom.dpsi_dxy.row(n));
  }
  return out;
}

}  // namespace

Eigen::RowVectorXd eval_basis(const ReducedModel& rom, const Point& x) {
  return hermite_eval(rom, x, 0, 0);
}

Eigen::Matrix<double, 2, Eigen::Dynamic> eval_basis_grad(const ReducedModel& rom, const Point& x) {
  Eigen::Matrix<double, 2, Eigen::Dynamic> g(2, rom.size());
  g.row(0) = hermite_eval(rom, x, 1, 0);
  g.row(1) = hermite_eval(rom, x, 0, 1);
  return g;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> eval_basis_hess(const ReducedModel& rom, const Point& x) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> h(3, rom.size());
  h.row(0) = hermite_eval(rom, x, 2, 0);
  h.row(1) = hermite_eval(rom, x, 1, 1);
  h.row(2) = hermite_eval(rom, x, 0, 2);
  return h;
}

void save_reduced_model(const ReducedModel& rom, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir + "/psi.csv", rom.psi);
  write_matrix_csv(dir + "/A.csv", rom.A);
  write_matrix_csv(dir + "/eigenvalues.csv", rom.eigenvalues);
  nlohmann::ordered_json meta;
  meta["nx"] = rom.mesh.nx();
  meta["ny"] = rom.mesh.ny();
  meta["N"] = rom.size();
  meta["R"] = rom.eigenvalues.size();
  meta["eta"] = rom.eta;
  write_text(dir + "/meta.json", meta.dump(2) + "\n");
}

ReducedModel load_reduced_model(const Mesh& mesh, const std::string& dir) {
  const auto meta = nlohmann::json::parse(read_text(dir + "/meta.json"));
  if (meta.at("nx").get<std::size_t>() != mesh.nx() || meta.at("ny").get<std::size_t>() != mesh.ny()) {
    throw std::invalid_argument("stored reduced model was built on a different mesh");
  }
  ReducedModel rom;
  rom.mesh = mesh;
  rom.psi = read_matrix_csv(dir + "/psi.csv");
  rom.A = read_matrix_csv(dir + "/A.csv");
  rom.eigenvalues = read_matrix_csv(dir + "/eigenvalues.csv").col(0);
  rom.eta = meta.at("eta").get<double>();
  if (static_cast<std::size_t>(rom.psi.rows()) != mesh.node_count() || rom.A.rows() != rom.psi.cols()) {
    throw std::runtime_error("stored reduced model has inconsistent sizes");
  }
  rom.factorize();
  rom.dpsi_dx = fd_derivative(mesh, rom.psi, 0);
  rom.dpsi_dy = fd_derivative(mesh, rom.psi, 1);
  rom.dpsi_dxy = fd_derivative(mesh, rom.dpsi_dx, 1);
  return rom;
}

}  // namespace asi
