#include <string>
#include <vector>

#include "asi/flowfield.hpp"
#include "doctest.h"

using namespace asi;

TEST_SUITE("flowfield") {

TEST_CASE("total diffusivity: molecular value, floor and turbulent sum") {
  const std::vector<double> zero{0.0};
  CHECK(total_diffusivity(1.1e-5, zero, 1.2, 0.7, 0.0)[0] == doctest::Approx(1.1e-5));

  // mu / (rho Sc) = 2e-4 with rho = 1, Sc = 1.
  const std::vector<double> mu{2e-4};
  CHECK(total_diffusivity(1.1e-5, mu, 1.0, 1.0, 1e-3)[0] == doctest::Approx(1e-3));

  const std::vector<double> mu2{8.4e-4};
  CHECK(total_diffusivity(1e-3, mu2, 1.2, 0.7, 0.0)[0] == doctest::Approx(2e-3).epsilon(1e-12));
}

TEST_CASE("total diffusivity rejects bad inputs") {
  const std::vector<double> mu{1e-4};
  CHECK_THROWS_AS(total_diffusivity(1e-3, mu, 0.0, 0.7, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(total_diffusivity(1e-3, mu, 1.2, -1.0, 0.0), std::invalid_argument);
  const std::vector<double> neg{-1e-4};
  CHECK_THROWS_AS(total_diffusivity(1e-3, neg, 1.2, 0.7, 0.0), std::invalid_argument);
}

TEST_CASE("total diffusivity is monotone and never below the floor") {
  const std::vector<double> mus{0.0, 1e-5, 1e-4, 1e-3, 1e-2};
  const Eigen::VectorXd k = total_diffusivity(1e-4, mus, 1.2, 0.7, 5e-4);
  for (Eigen::Index i = 0; i < k.size(); ++i) CHECK(k[i] >= 5e-4);
  for (Eigen::Index i = 1; i < k.size(); ++i) CHECK(k[i] >= k[i - 1]);
  const Eigen::VectorXd k2 = total_diffusivity(2e-4, mus, 1.2, 0.7, 5e-4);
  for (Eigen::Index i = 0; i < k.size(); ++i) CHECK(k2[i] >= k[i]);
}

TEST_CASE("Peclet number") {
  CHECK(peclet(1.0, 1.0, 0.4) == doctest::Approx(2.5));
  CHECK(peclet(1.0, 1.0, 0.04) == doctest::Approx(25.0));
  CHECK(peclet(0.0, 1.0, 0.4) == 0.0);
  CHECK(peclet(2.0, 1.0, 0.4) == doctest::Approx(2.0 * peclet(1.0, 1.0, 0.4)));
  CHECK_THROWS_AS(peclet(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("uniform flow sets every node") {
  const Mesh m = build_mesh(Domain{}, 9, 7);
  AnalyticFlowParams p;
  p.velocity = {1.0, 0.0};
  p.kappa = 0.4;
  const FlowField f = analytic_flow(m, p);
  REQUIRE(f.size() == m.node_count());
  for (Eigen::Index i = 0; i < f.velocity.rows(); ++i) {
    CHECK(f.velocity(i, 0) == 1.0);
    CHECK(f.velocity(i, 1) == 0.0);
    CHECK(f.diffusivity[i] == 0.4);
  }
  CHECK(f.mean_diffusivity(m) == doctest::Approx(0.4));
  CHECK(f.max_speed(m) == doctest::Approx(1.0));
}

TEST_CASE("channel flow has no slip at the walls") {
  const Mesh m = build_mesh(Domain{}, 9, 9);
  AnalyticFlowParams p;
  p.kind = FlowKind::Channel;
  p.max_speed = 2.0;
  p.kappa = 0.1;
  const FlowField f = analytic_flow(m, p);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(f.velocity.row(static_cast<Eigen::Index>(m.index(i, 0))).norm() == 0.0);
    CHECK(f.velocity.row(static_cast<Eigen::Index>(m.index(i, 8))).norm() == 0.0);
  }
  CHECK(f.velocity(static_cast<Eigen::Index>(m.index(4, 4)), 0) == doctest::Approx(2.0));
}

TEST_CASE("corner vortex has no normal velocity on the outer walls") {
  const Mesh m = build_mesh(Domain{}, 11, 11);
  AnalyticFlowParams p;
  p.kind = FlowKind::CornerVortex;
  p.kappa = 0.1;
  const FlowField f = analytic_flow(m, p);
  for (std::size_t k = 0; k < 11; ++k) {
    CHECK(f.velocity(static_cast<Eigen::Index>(m.index(0, k)), 0) == doctest::Approx(0.0));
    CHECK(f.velocity(static_cast<Eigen::Index>(m.index(10, k)), 0) == doctest::Approx(0.0));
    CHECK(f.velocity(static_cast<Eigen::Index>(m.index(k, 0)), 1) == doctest::Approx(0.0));
    CHECK(f.velocity(static_cast<Eigen::Index>(m.index(k, 10)), 1) == doctest::Approx(0.0));
  }
}

TEST_CASE("flow CSV round trip and floor") {
  const Mesh m = build_mesh(Domain{}, 5, 4);
  AnalyticFlowParams p;
  p.kind = FlowKind::Channel;
  p.kappa = 2e-3;
  const FlowField f = analytic_flow(m, p);
  const FlowField g = parse_flow_csv(flow_to_csv(f), m, 0.0);
  CHECK(g.velocity == f.velocity);
  CHECK(g.diffusivity == f.diffusivity);
  const FlowField h = parse_flow_csv(flow_to_csv(f), m, 1e-2);
  for (Eigen::Index i = 0; i < h.diffusivity.size(); ++i) CHECK(h.diffusivity[i] == 1e-2);
}

TEST_CASE("flow CSV with the wrong row count or NaN is rejected") {
  const Mesh m = build_mesh(Domain{}, 3, 3);
  std::string rows = "node_id,u1,u2,kappa\n";
  for (int i = 0; i < 8; ++i) rows += std::to_string(i) + ",1,0,0.1\n";
  CHECK_THROWS(parse_flow_csv(rows, m, 0.0));
  std::string bad = rows + "8,nan,0,0.1\n";
  CHECK_THROWS(parse_flow_csv(bad, m, 0.0));
  CHECK_NOTHROW(parse_flow_csv(rows + "8,1,0,0.1\n", m, 0.0));
}

TEST_CASE("discrete divergence of the uniform and channel flows vanishes") {
  const Mesh m = build_mesh(Domain{}, 21, 21);
  AnalyticFlowParams p;
  p.kappa = 0.1;
  CHECK(max_divergence(m, analytic_flow(m, p)) == doctest::Approx(0.0));
  p.kind = FlowKind::Channel;
  CHECK(max_divergence(m, analytic_flow(m, p)) == doctest::Approx(0.0));
}

}
