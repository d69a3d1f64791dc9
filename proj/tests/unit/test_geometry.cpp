#include <random>
#include <vector>

#include "asi/geometry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace asi;

TEST_SUITE("geometry") {

TEST_CASE("3x3 unit square has 8 boundary nodes and 1 interior") {
  const Mesh m = build_mesh(Domain{}, 3, 3);
  CHECK(m.node_count() == 9);
  int boundary = 0, interior = 0;
  for (std::size_t id = 0; id < m.node_count(); ++id) {
    boundary += m.boundary(id) ? 1 : 0;
    interior += m.free(id) ? 1 : 0;
  }
  CHECK(boundary == 8);
  CHECK(interior == 1);
  CHECK(m.free(m.index(1, 1)));
}

TEST_CASE("node inside an obstacle is inactive") {
  Domain d;
  d.obstacles = {{{0.4, 0.4}, {0.6, 0.6}}};
  const Mesh m = build_mesh(d, 11, 11);
  CHECK_FALSE(m.active(m.index(5, 5)));
  // Nodes on the obstacle edge stay active and carry the wall condition.
  CHECK(m.active(m.index(4, 5)));
  CHECK(m.boundary(m.index(4, 5)));
}

TEST_CASE("meshes need three nodes per axis and a non-degenerate domain") {
  CHECK_THROWS_AS(build_mesh(Domain{}, 2, 5), std::invalid_argument);
  Domain flat;
  flat.bounds = {{0, 0}, {1, 0}};
  CHECK_THROWS_AS(build_mesh(flat, 5, 5), std::invalid_argument);
}

TEST_CASE("every boundary node is active and the node grid is row-major") {
  Domain d;
  d.obstacles = {{{0.2, 0.3}, {0.45, 0.7}}};
  const Mesh m = build_mesh(d, 17, 13);
  for (std::size_t id = 0; id < m.node_count(); ++id) {
    if (m.boundary(id)) CHECK(m.active(id));
    const Point x = m.node(id);
    CHECK(x.x() == doctest::Approx(static_cast<double>(id % 17) / 16.0));
    CHECK(x.y() == doctest::Approx(static_cast<double>(id / 17) / 12.0));
  }
}

TEST_CASE("build_mesh is deterministic") {
  Domain d;
  d.obstacles = {{{0.13, 0.3}, {0.41, 0.77}}};
  const Mesh a = build_mesh(d, 23, 19), b = build_mesh(d, 23, 19);
  REQUIRE(a.node_count() == b.node_count());
  for (std::size_t id = 0; id < a.node_count(); ++id) {
    CHECK(a.nodes()[id] == b.nodes()[id]);
    CHECK(a.active(id) == b.active(id));
    CHECK(a.boundary(id) == b.boundary(id));
  }
}

TEST_CASE("indicator flags nodes within the radius") {
  const Mesh m = build_mesh(Domain{}, 11, 11);
  const std::vector<Point> one{{0.3, 0.6}};
  const Eigen::VectorXd chi = indicator(m, one, 0.04);
  CHECK(chi.sum() == 1.0);
  CHECK(chi[static_cast<Eigen::Index>(m.index(3, 6))] == 1.0);

  CHECK(indicator(m, std::vector<Point>{}, 0.3).isZero());

  const std::vector<Point> twice{{0.3, 0.6}, {0.3, 0.6}};
  CHECK(indicator(m, twice, 0.04) == chi);

  const std::vector<Point> outside{{1.2, 0.5}};
  CHECK_THROWS_AS(indicator(m, outside, 0.04), std::invalid_argument);
}

TEST_CASE("indicator is {0,1}-valued and permutation invariant") {
  const Mesh m = build_mesh(Domain{}, 21, 21);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts;
  for (int i = 0; i < 7; ++i) pts.push_back({u(g), u(g)});
  const Eigen::VectorXd a = indicator(m, pts, 0.11);
  std::shuffle(pts.begin(), pts.end(), g);
  const Eigen::VectorXd b = indicator(m, pts, 0.11);
  CHECK(a == b);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK((a[i] == 0.0 || a[i] == 1.0));
}

TEST_CASE("convex domain decomposes into itself") {
  const ConvexCover c = decompose_convex(Domain{});
  REQUIRE(c.subdomains.size() == 1);
  CHECK(c.subdomains[0] == Domain{}.bounds);
}

TEST_CASE("centred obstacle gives the four slabs of the brute-force oracle") {
  Domain d;
  d.obstacles = {{{0.4, 0.4}, {0.6, 0.6}}};
  const ConvexCover c = decompose_convex(d);
  CHECK(c.subdomains.size() == 4);
  CHECK(oracle::same_box_set(c.subdomains, oracle::maximal_empty_rectangles(d, 10)));
}

TEST_CASE("L-shaped domain gives two maximal rectangles") {
  Domain d;
  d.obstacles = {{{0.5, 0.5}, {1.0, 1.0}}};
  const ConvexCover c = decompose_convex(d);
  CHECK(c.subdomains.size() == 2);
  CHECK(oracle::same_box_set(c.subdomains, oracle::maximal_empty_rectangles(d, 10)));
}

TEST_CASE("two obstacles match the brute-force oracle") {
  Domain d;
  d.obstacles = {{{0.2, 0.1}, {0.4, 0.5}}, {{0.6, 0.5}, {0.8, 0.9}}};
  const ConvexCover c = decompose_convex(d);
  CHECK(oracle::same_box_set(c.subdomains, oracle::maximal_empty_rectangles(d, 10)));
  for (const Box& b : c.subdomains)
    for (const Box& o : d.obstacles) CHECK_FALSE(b.overlaps_interior(o));
}

TEST_CASE("every free node lies in some cover subdomain") {
  Domain d;
  d.obstacles = {{{0.2, 0.1}, {0.4, 0.5}}, {{0.6, 0.5}, {0.8, 0.9}}, {{0.45, 0.0}, {0.55, 0.2}}};
  const Mesh m = build_mesh(d, 41, 41);
  const ConvexCover c = decompose_convex(d);
  for (std::size_t id = 0; id < m.node_count(); ++id) {
    if (!m.free(id)) continue;
    CHECK(c.largest_containing(m.node(id)) != nullptr);
  }
}

TEST_CASE("largest_containing prefers the larger slab") {
  Domain d;
  d.obstacles = {{{0.3, 0.3}, {0.4, 0.4}}};
  const ConvexCover c = decompose_convex(d);
  const Box* b = c.largest_containing({0.8, 0.8});
  REQUIRE(b != nullptr);
  CHECK(b->area() == doctest::Approx(0.6));
}

TEST_CASE("mesh CSV has one row per node plus a header") {
  const Mesh m = build_mesh(Domain{}, 4, 3);
  const std::string csv = mesh_to_csv(m);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  CHECK(csv.rfind("node_id,x1,x2,active,boundary\n", 0) == 0);
}

}
