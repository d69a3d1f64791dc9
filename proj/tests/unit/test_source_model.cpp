#include <random>

#include "asi/source_model.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace asi;

namespace {

SourceParams params(std::vector<Tower> towers) {
  SourceParams p;
  p.towers = std::move(towers);
  p.bounds.assign(p.towers.size(), Box{{0, 0}, {1, 1}});
  return p;
}

}  // namespace

TEST_SUITE("source_model") {

TEST_CASE("tower indicator is a closed box") {
  const Tower t{1.0, {0.2, 0.2}, {0.5, 0.5}};
  CHECK(tower_eval(t, {0.3, 0.3}) == 1.0);
  CHECK(tower_eval(t, {0.6, 0.3}) == 0.0);
  CHECK(tower_eval(t, {0.2, 0.2}) == 1.0);
  CHECK(tower_eval(t, {0.5, 0.5}) == 1.0);
  CHECK(tower_eval(t, {0.5, 0.50001}) == 0.0);
}

TEST_CASE("source field sums the towers") {
  CHECK(source_field(params({{2.0, {0.1, 0.1}, {0.4, 0.4}}}), {0.2, 0.3}) == 2.0);
  const SourceParams two = params({{1.0, {0.1, 0.1}, {0.5, 0.5}}, {3.0, {0.3, 0.3}, {0.7, 0.7}}});
  CHECK(source_field(two, {0.4, 0.4}) == 4.0);
  CHECK(source_field(two, {0.9, 0.1}) == 0.0);
  CHECK_THROWS_AS(source_field(params({{-1.0, {0.1, 0.1}, {0.4, 0.4}}}), {0.2, 0.2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(source_field(params({{1.0, {0.5, 0.1}, {0.4, 0.4}}}), {0.2, 0.2}),
                  std::invalid_argument);
}

TEST_CASE("flatten and with are inverse") {
  const SourceParams p = params({{1.5, {0.1, 0.2}, {0.3, 0.4}}, {0.5, {0.6, 0.6}, {0.9, 0.8}}});
  const Eigen::VectorXd v = p.flatten();
  CHECK(v.size() == 10);
  CHECK(v[0] == 1.5);
  CHECK(v[9] == 0.8);
  CHECK(p.with(v).flatten() == v);
  CHECK_THROWS_AS(p.with(Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("projection: feasible unchanged, negative intensity clamped, inverted corners collapse") {
  const SourceParams ok = params({{1.0, {0.1, 0.2}, {0.3, 0.4}}});
  CHECK(project_feasible(ok).flatten() == ok.flatten());

  const SourceParams neg = params({{-1.0, {0.1, 0.2}, {0.3, 0.4}}});
  CHECK(project_feasible(neg).towers[0].beta == 0.0);

  SourceParams inv = params({{1.0, {0.7, 0.2}, {0.3, 0.4}}});
  const Tower t = project_feasible(inv).towers[0];
  CHECK(t.lower.x() == doctest::Approx(0.5));
  CHECK(t.upper.x() == doctest::Approx(0.5));
  CHECK(t.area() == 0.0);

  SourceParams out = params({{1.0, {-0.5, 0.2}, {1.5, 0.4}}});
  out.bounds[0] = {{0.1, 0.0}, {0.8, 1.0}};
  const Tower c = project_feasible(out).towers[0];
  CHECK(c.lower.x() == 0.1);
  CHECK(c.upper.x() == 0.8);
}

TEST_CASE("projection is idempotent and always feasible") {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    SourceParams p = params({{u(g), {u(g), u(g)}, {u(g), u(g)}}, {u(g), {u(g), u(g)}, {u(g), u(g)}}});
    p.bounds[1] = {{0.2, 0.3}, {0.6, 0.9}};
    const SourceParams q = project_feasible(p);
    CHECK(is_feasible(q));
    CHECK(project_feasible(q).flatten() == q.flatten());
  }
}

TEST_CASE("integral of the source equals the sum of intensity times area") {
  // Corners on a 1/200 grid, so the midpoint sum is exact.
  const SourceParams p = params({{2.5, {0.1, 0.15}, {0.35, 0.4}}, {0.7, {0.55, 0.6}, {0.9, 0.95}}});
  const int n = 200;
  const double h = 1.0 / n;
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) sum += source_field(p, {(i + 0.5) * h, (j + 0.5) * h}) * h * h;
  const double expected = 2.5 * p.towers[0].area() + 0.7 * p.towers[1].area();
  CHECK(sum == doctest::Approx(expected).epsilon(1e-12));
}

}
