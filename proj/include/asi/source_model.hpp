#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Core>

#include "asi/geometry.hpp"

namespace asi {

/// Indicator of the closed box [lower, upper] scaled by beta.
struct Tower {
  double beta = 0.0;
  Point lower{0.0, 0.0};
  Point upper{0.0, 0.0};

  Box support() const { return {lower, upper}; }
  double area() const {
    return std::max(0.0, upper.x() - lower.x()) * std::max(0.0, upper.y() - lower.y());
  }
  Point center() const { return 0.5 * (lower + upper); }
};

inline constexpr int kTowerParams = 5;  // beta, lower1, lower2, upper1, upper2

struct SourceParams {
  std::vector<Tower> towers;
  std::vector<Box> bounds;  // one box constraint per tower

  std::size_t size() const { return towers.size(); }
  Eigen::VectorXd flatten() const;
  /// Same tower count and bounds, parameters taken from p.
  SourceParams with(const Eigen::VectorXd& p) const;
};

/// 1 iff lower <= x <= upper componentwise.
double tower_eval(const Tower& t, const Point& x);

/// Sum of beta_j times the tower indicators. Throws for infeasible p.
double source_field(const SourceParams& p, const Point& x);

bool is_feasible(const SourceParams& p);

/// Clamp beta to >= 0 and corners into the bounds; a corner pair that ends up
/// inverted collapses to its midpoint.
SourceParams project_feasible(const SourceParams& p);

}  // namespace asi
