#include <filesystem>
#include <random>

#include <Eigen/Eigenvalues>

#include "asi/fem.hpp"
#include "asi/rom.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace asi;

namespace {

struct Fixture {
  Mesh mesh;
  FlowField flow;
  Stiffness K;
  SparseMatrix mass;
  SnapshotSet snaps;
  Eigen::MatrixXd C;
  PodResult pod;
  ReducedModel rom;
};

// Small advection-diffusion problem with one obstacle, Pe = 2.5.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    Domain d;
    d.obstacles = {{{0.6, 0.2}, {0.8, 0.4}}};
    x.mesh = build_mesh(d, 21, 21);
    AnalyticFlowParams p;
    p.velocity = {1.0, 0.0};
    p.kappa = 0.4;
    x.flow = analytic_flow(x.mesh, p);
    x.K = assemble(x.mesh, x.flow);
    x.mass = assemble_mass(x.mesh);
    x.snaps = generate_snapshots(x.mesh, x.K, 6, 6);
    x.C = covariance(x.mass, x.snaps.fields);
    x.pod = pod_basis(x.C, x.snaps.fields, 0.97);
    x.rom = build_reduced_model(x.mesh, x.K, x.pod, 0.97);
    return x;
  }();
  return f;
}

// Reduced model around a synthetic nodal basis, for the evaluation tests.
ReducedModel synthetic(const Mesh& m, const Eigen::MatrixXd& psi) {
  ReducedModel r;
  r.mesh = m;
  r.psi = psi;
  r.dpsi_dx = fd_derivative(m, psi, 0);
  r.dpsi_dy = fd_derivative(m, psi, 1);
  r.dpsi_dxy = fd_derivative(m, r.dpsi_dx, 1);
  return r;
}

Eigen::VectorXd nodal(const Mesh& m, const std::function<double(const Point&)>& f) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m.node_count()));
  for (std::size_t id = 0; id < m.node_count(); ++id) v[static_cast<Eigen::Index>(id)] = f(m.node(id));
  return v;
}

}  // namespace

TEST_SUITE("rom") {

TEST_CASE("covariance of a single constant snapshot is the area") {
  const Mesh m = build_mesh(Domain{}, 9, 9);
  const Eigen::MatrixXd s = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(m.node_count()), 1);
  const Eigen::MatrixXd C = covariance(assemble_mass(m), s);
  REQUIRE(C.rows() == 1);
  CHECK(C(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("orthogonal snapshots give a diagonal covariance") {
  const Mesh m = build_mesh(Domain{}, 11, 11);
  Eigen::MatrixXd s(static_cast<Eigen::Index>(m.node_count()), 2);
  s.col(0) = nodal(m, [](const Point&) { return 1.0; });
  s.col(1) = nodal(m, [](const Point& x) { return x.x() - 0.5; });
  const Eigen::MatrixXd C = covariance(assemble_mass(m), s);
  CHECK(std::abs(C(0, 1)) < 1e-15);
  CHECK(C(0, 1) == C(1, 0));
}

TEST_CASE("covariance matches the quadrature oracle on random snapshots") {
  Domain d;
  d.obstacles = {{{0.3, 0.3}, {0.5, 0.6}}};
  const Mesh m = build_mesh(d, 15, 13);
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd s(static_cast<Eigen::Index>(m.node_count()), 5);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(g);
  const Eigen::MatrixXd C = covariance(assemble_mass(m), s);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double ref = oracle::integrate_product(m, s.col(i), s.col(j)) / 5.0;
      CHECK(C(i, j) == doctest::Approx(ref).epsilon(1e-12));
    }
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C).eigenvalues().minCoeff() >= -1e-14);
}

TEST_CASE("covariance rejects a mesh mismatch") {
  const Mesh m = build_mesh(Domain{}, 5, 5);
  CHECK_THROWS_AS(covariance(assemble_mass(m), Eigen::MatrixXd::Ones(24, 1)), std::invalid_argument);
}

TEST_CASE("two identical snapshots give one basis function for any eta") {
  const Mesh m = build_mesh(Domain{}, 9, 9);
  const SparseMatrix M = assemble_mass(m);
  Eigen::MatrixXd s(static_cast<Eigen::Index>(m.node_count()), 2);
  s.col(0) = nodal(m, [](const Point& x) { return x.x() * (1 - x.x()) * x.y(); });
  s.col(1) = s.col(0);
  for (double eta : {0.1, 0.97, 1.0}) {
    const PodResult r = pod_basis(covariance(M, s), s, eta);
    CHECK(r.N == 1);
    CHECK(r.eigenvalues[1] < kEigenCutoff * r.eigenvalues[0]);
  }
}

TEST_CASE("eta = 1 keeps the numerical rank") {
  const Mesh m = build_mesh(Domain{}, 13, 13);
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(m.node_count());
  Eigen::MatrixXd base(n, 3), mix(3, 7);
  for (Eigen::Index i = 0; i < base.size(); ++i) base.data()[i] = u(g);
  for (Eigen::Index i = 0; i < mix.size(); ++i) mix.data()[i] = u(g);
  const Eigen::MatrixXd s = base * mix;
  CHECK(pod_basis(covariance(assemble_mass(m), s), s, 1.0).N == 3);
}

TEST_CASE("zero snapshots and bad eta are rejected") {
  const Mesh m = build_mesh(Domain{}, 5, 5);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(25, 3);
  const Eigen::MatrixXd C = covariance(assemble_mass(m), z);
  CHECK_THROWS_AS(pod_basis(C, z, 0.9), std::invalid_argument);
  const Eigen::VectorXd lam = Eigen::Vector3d(3, 2, 1);
  CHECK_THROWS_AS(select_basis_count(lam, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(select_basis_count(lam, 1.5), std::invalid_argument);
  CHECK(select_basis_count(lam, 0.5) == 1);
  CHECK(select_basis_count(lam, 0.51) == 2);
  CHECK(select_basis_count(lam, 1.0) == 3);
}

TEST_CASE("eigenvalues are sorted and N is the smallest count meeting eta") {
  const Fixture& f = fixture();
  const Eigen::VectorXd& lam = f.pod.eigenvalues;
  for (Eigen::Index i = 1; i < lam.size(); ++i) CHECK(lam[i] <= lam[i - 1]);
  CHECK(lam[lam.size() - 1] >= -1e-10 * lam[0]);
  double total = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam[i] >= kEigenCutoff * lam[0]) total += lam[i];
  const double upto_n = lam.head(f.pod.N).sum();
  CHECK(upto_n >= 0.97 * total);
  if (f.pod.N >= 2) CHECK(upto_n - lam[f.pod.N - 1] < 0.97 * total);
}

TEST_CASE("basis functions are L2-orthonormal") {
  const Fixture& f = fixture();
  const Eigen::MatrixXd G = f.rom.psi.transpose() * (f.mass * f.rom.psi);
  CHECK((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("mean projection error of the snapshots is the discarded energy") {
  const Fixture& f = fixture();
  const Eigen::MatrixXd& S = f.snaps.fields;
  const Eigen::MatrixXd& P = f.rom.psi;
  const Eigen::MatrixXd E = S - P * (P.transpose() * (f.mass * S));
  const double mean_sq = (E.transpose() * (f.mass * E)).trace() / static_cast<double>(S.cols());
  const Eigen::VectorXd& lam = f.pod.eigenvalues;
  const double tail = lam.tail(lam.size() - f.pod.N).sum();
  CHECK(mean_sq == doctest::Approx(tail).epsilon(1e-6).scale(1e-14 * lam.sum()));
  CHECK(mean_sq <= (1.0 - 0.97) * lam.sum() * (1 + 1e-9));
}

TEST_CASE("reduced operator equals the bilinear form of the basis") {
  const Fixture& f = fixture();
  const Eigen::MatrixXd& A = f.rom.A;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      const double ref =
          oracle::bilinear_form(f.mesh, f.flow.diffusivity, f.flow.velocity, f.rom.psi.col(k), f.rom.psi.col(i));
      CHECK(A(i, k) == doctest::Approx(ref).epsilon(1e-10).scale(1e-10 * A.norm()));
    }
}

TEST_CASE("a single hat function reduces to the matching stiffness diagonal") {
  const Fixture& f = fixture();
  const std::size_t node = f.mesh.index(7, 12);
  REQUIRE(f.mesh.free(node));
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(f.mesh.node_count()), 1);
  psi(static_cast<Eigen::Index>(node), 0) = 1.0;
  const Eigen::MatrixXd A = reduce_operator(f.K, psi);
  const auto a = f.K.free_index()[node];
  CHECK(A(0, 0) == doctest::Approx(f.K.matrix().coeff(a, a)).epsilon(1e-15));
}

TEST_CASE("pure diffusion gives a symmetric reduced operator") {
  const Fixture& f = fixture();
  FlowField still = f.flow;
  still.velocity.setZero();
  const Eigen::MatrixXd A = reduce_operator(assemble(f.mesh, still), f.rom.psi);
  CHECK((A - A.transpose()).norm() <= 1e-12 * A.norm());
}

TEST_CASE("reduced right-hand side: zero intensity, linearity, tower integrals") {
  const Fixture& f = fixture();
  SourceParams p;
  p.towers = {{0.0, {0.1, 0.2}, {0.3, 0.45}}};
  p.bounds = {f.mesh.domain().bounds};
  CHECK(reduced_rhs(f.rom, p).isZero());
  CHECK(f.rom.solve(reduced_rhs(f.rom, p)).isZero());
  p.towers[0].beta = 1.5;
  const Eigen::VectorXd b1 = reduced_rhs(f.rom, p);
  p.towers[0].beta = 3.0;
  CHECK((reduced_rhs(f.rom, p) - 2.0 * b1).norm() <= 1e-14 * b1.norm());

  // Midpoint oracle of beta * int_tower psi_k from the Q1 interpolant.
  const int sub = 300;
  const double h = 1.0 / sub;
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(b1.size());
  for (int j = 0; j < sub; ++j)
    for (int i = 0; i < sub; ++i) {
      const Point x{(i + 0.5) * h, (j + 0.5) * h};
      if (!p.towers[0].support().contains(x)) continue;
      for (Eigen::Index k = 0; k < ref.size(); ++k)
        ref[k] += 1.5 * oracle::interpolate(f.mesh, f.rom.psi.col(k), x) * h * h;
    }
  CHECK((b1 - ref).cwiseAbs().maxCoeff() < 1e-4 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("basis evaluation at a node returns the nodal value") {
  const Fixture& f = fixture();
  for (std::size_t id : {f.mesh.index(3, 4), f.mesh.index(10, 10), f.mesh.index(20, 7)}) {
    const Eigen::RowVectorXd v = eval_basis(f.rom, f.mesh.node(id));
    for (Eigen::Index k = 0; k < v.size(); ++k)
      CHECK(v[k] == doctest::Approx(f.rom.psi(static_cast<Eigen::Index>(id), k)).epsilon(1e-12).scale(1e-12));
  }
}

TEST_CASE("constant basis has zero derivatives, x1^2 has curvature 2") {
  const Mesh m = build_mesh(Domain{}, 11, 11);
  Eigen::MatrixXd psi(static_cast<Eigen::Index>(m.node_count()), 2);
  psi.col(0) = nodal(m, [](const Point&) { return 3.0; });
  psi.col(1) = nodal(m, [](const Point& x) { return x.x() * x.x(); });
  const ReducedModel r = synthetic(m, psi);
  for (const Point x : {Point{0.37, 0.52}, Point{0.05, 0.91}, Point{0.99, 0.02}}) {
    CHECK(eval_basis(r, x)[0] == doctest::Approx(3.0));
    CHECK(eval_basis_grad(r, x).col(0).norm() < 1e-12);
    CHECK(eval_basis_hess(r, x).col(0).norm() < 1e-10);
    CHECK(eval_basis(r, x)[1] == doctest::Approx(x.x() * x.x()).epsilon(1e-12));
    CHECK(eval_basis_grad(r, x)(0, 1) == doctest::Approx(2 * x.x()).epsilon(1e-10));
    CHECK(eval_basis_hess(r, x)(0, 1) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(eval_basis_hess(r, x)(1, 1)) < 1e-9);
  }
}

TEST_CASE("smooth fields: second derivatives converge with h") {
  auto err = [](std::size_t n) {
    const Mesh m = build_mesh(Domain{}, n, n);
    Eigen::MatrixXd psi(static_cast<Eigen::Index>(m.node_count()), 1);
    psi.col(0) = nodal(m, [](const Point& x) { return std::sin(2 * x.x()) * std::cos(3 * x.y()); });
    const ReducedModel r = synthetic(m, psi);
    const Point x{0.413, 0.577};
    const double exact = -6.0 * std::cos(2 * x.x()) * std::sin(3 * x.y());
    return std::abs(eval_basis_hess(r, x)(1, 0) - exact);
  };
  CHECK(err(41) < 0.5 * err(21));
}

TEST_CASE("basis evaluation is continuous across cell edges") {
  const Fixture& f = fixture();
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double delta = 1e-13;
  for (int trial = 0; trial < 20; ++trial) {
    const double edge = 0.05 * static_cast<double>(1 + trial % 19);
    const Point across{edge, u(g)};
    if (!f.mesh.domain().contains(across - Point{2 * delta, 0}) ||
        !f.mesh.domain().contains(across + Point{2 * delta, 0}))
      continue;
    const Eigen::RowVectorXd a = eval_basis(f.rom, across - Point{delta, 0});
    const Eigen::RowVectorXd b = eval_basis(f.rom, across + Point{delta, 0});
    const double slope = eval_basis_grad(f.rom, across).cwiseAbs().maxCoeff();
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12 + 4 * delta * slope);
  }
}

TEST_CASE("evaluation outside the domain or inside an obstacle throws") {
  const Fixture& f = fixture();
  CHECK_THROWS_AS(eval_basis(f.rom, Point{1.2, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(eval_basis(f.rom, Point{0.7, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(eval_basis_grad(f.rom, Point{-0.1, 0.5}), std::invalid_argument);
}

TEST_CASE("saved reduced model loads back unchanged") {
  const Fixture& f = fixture();
  const auto dir = std::filesystem::temp_directory_path() / "asi_rom_roundtrip";
  save_reduced_model(f.rom, dir.string());
  const ReducedModel r = load_reduced_model(f.mesh, dir.string());
  CHECK(r.psi == f.rom.psi);
  CHECK(r.A == f.rom.A);
  CHECK(r.eigenvalues == f.rom.eigenvalues);
  CHECK(r.eta == f.rom.eta);
  const Point x{0.31, 0.64};
  CHECK(eval_basis(r, x) == eval_basis(f.rom, x));
  CHECK_THROWS(load_reduced_model(build_mesh(Domain{}, 11, 11), dir.string()));
  std::filesystem::remove_all(dir);
}

}
