#include "asi/source_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace asi {

Eigen::VectorXd SourceParams::flatten() const {
  Eigen::VectorXd p(kTowerParams * static_cast<Eigen::Index>(towers.size()));
  for (std::size_t j = 0; j < towers.size(); ++j) {
    const Tower& t = towers[j];
    p.segment<kTowerParams>(kTowerParams * static_cast<Eigen::Index>(j))
        << t.beta, t.lower.x(), t.lower.y(), t.upper.x(), t.upper.y();
  }
  return p;
}

SourceParams SourceParams::with(const Eigen::VectorXd& p) const {
  if (p.size() != kTowerParams * static_cast<Eigen::Index>(towers.size())) {
    throw std::invalid_argument("parameter vector length does not match tower count");
  }
  SourceParams out = *this;
  for (std::size_t j = 0; j < towers.size(); ++j) {
    const auto o = kTowerParams * static_cast<Eigen::Index>(j);
    out.towers[j] = Tower{p[o], {p[o + 1], p[o + 2]}, {p[o + 3], p[o + 4]}};
  }
  return out;
}

double tower_eval(const Tower& t, const Point& x) {
  return (x.x() >= t.lower.x() && x.x() <= t.upper.x() && x.y() >= t.lower.y() &&
          x.y() <= t.upper.y())
             ? 1.0
             : 0.0;
}

bool is_feasible(const SourceParams& p) {
  if (p.bounds.size() != p.towers.size()) return false;
  for (std::size_t j = 0; j < p.towers.size(); ++j) {
    const Tower& t = p.towers[j];
    const Box& b = p.bounds[j];
    if (!(t.beta >= 0.0)) return false;
    for (int d = 0; d < 2; ++d) {
      if (!(b.lower[d] <= t.lower[d] && t.lower[d] <= t.upper[d] && t.upper[d] <= b.upper[d])) {
        return false;
      }
    }
  }
  return true;
}

double source_field(const SourceParams& p, const Point& x) {
  if (!is_feasible(p)) throw std::invalid_argument("infeasible source parameters");
  double s = 0.0;
  for (const Tower& t : p.towers) s += t.beta * tower_eval(t, x);
  return s;
}

SourceParams project_feasible(const SourceParams& p) {
  if (p.bounds.size() != p.towers.size()) {
    throw std::invalid_argument("every tower needs a bounding box");
  }
  SourceParams out = p;
  for (std::size_t j = 0; j < out.towers.size(); ++j) {
    Tower& t = out.towers[j];
    const Box& b = out.bounds[j];
    t.beta = std::max(0.0, t.beta);
    for (int d = 0; d < 2; ++d) {
      t.lower[d] = std::clamp(t.lower[d], b.lower[d], b.upper[d]);
      t.upper[d] = std::clamp(t.upper[d], b.lower[d], b.upper[d]);
      if (t.lower[d] > t.upper[d]) {
        const double mid = 0.5 * (t.lower[d] + t.upper[d]);
        t.lower[d] = mid;
        t.upper[d] = mid;
      }
    }
  }
  return out;
}

}  // namespace asi
