#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace asi {

using Point = Eigen::Vector2d;

/// Closed axis-aligned rectangle [lower, upper].
struct Box {
  Point lower{0.0, 0.0};
  Point upper{0.0, 0.0};

  double width() const { return upper.x() - lower.x(); }
  double height() const { return upper.y() - lower.y(); }
  double area() const { return width() * height(); }
  Point center() const { return 0.5 * (lower + upper); }

  bool contains(const Point& x) const {
    return x.x() >= lower.x() && x.x() <= upper.x() && x.y() >= lower.y() &&
           x.y() <= upper.y();
  }
  bool contains_strictly(const Point& x) const {
    return x.x() > lower.x() && x.x() < upper.x() && x.y() > lower.y() &&
           x.y() < upper.y();
  }
  bool contains(const Box& other) const {
    return other.lower.x() >= lower.x() && other.upper.x() <= upper.x() &&
           other.lower.y() >= lower.y() && other.upper.y() <= upper.y();
  }
  /// True when the interiors intersect (touching edges do not count).
  bool overlaps_interior(const Box& other) const {
    return other.lower.x() < upper.x() && other.upper.x() > lower.x() &&
           other.lower.y() < upper.y() && other.upper.y() > lower.y();
  }
  friend bool operator==(const Box& a, const Box& b) {
    return a.lower == b.lower && a.upper == b.upper;
  }
};

/// Rectangular domain with rectangular holes.
struct Domain {
  Box bounds{{0.0, 0.0}, {1.0, 1.0}};
  std::vector<Box> obstacles;
  double characteristic_length = 1.0;

  /// Throws std::invalid_argument on degenerate bounds or malformed obstacles.
  void validate() const;

  /// Inside the closed bounds and outside every obstacle interior.
  bool contains(const Point& x) const;
};

/// Tensor-product node grid over a Domain, row-major (x fastest).
class Mesh {
 public:
  Mesh() = default;

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t node_count() const { return nx_ * ny_; }
  std::size_t cell_count() const { return (nx_ - 1) * (ny_ - 1); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  const Domain& domain() const { return domain_; }

  std::size_t index(std::size_t i, std::size_t j) const { return j * nx_ + i; }
  Point node(std::size_t id) const {
    return {domain_.bounds.lower.x() + static_cast<double>(id % nx_) * hx_,
            domain_.bounds.lower.y() + static_cast<double>(id / nx_) * hy_};
  }
  const std::vector<Point>& nodes() const { return nodes_; }

  bool active(std::size_t id) const { return active_[id] != 0; }
  bool boundary(std::size_t id) const { return boundary_[id] != 0; }
  /// Active and not Dirichlet: carries an unknown in the FE system.
  bool free(std::size_t id) const { return active(id) && !boundary(id); }
  std::size_t active_count() const { return active_count_; }

  /// A cell takes part in assembly only when all four corners are active.
  bool cell_active(std::size_t ci, std::size_t cj) const;
  /// Corner node ids of cell (ci, cj), counter-clockwise from lower-left.
  std::array<std::size_t, 4> cell_nodes(std::size_t ci, std::size_t cj) const {
    const auto n0 = index(ci, cj);
    return {n0, n0 + 1, n0 + 1 + nx_, n0 + nx_};
  }

  /// Cell column/row holding coordinate x (clamped to the grid; points on an
  /// interior grid line belong to the cell on their upper side).
  std::size_t cell_column(double x) const;
  std::size_t cell_row(double y) const;

  friend Mesh build_mesh(const Domain& domain, std::size_t nx, std::size_t ny);

 private:
  Domain domain_;
  std::size_t nx_ = 0, ny_ = 0;
  double hx_ = 0.0, hy_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<std::uint8_t> active_;
  std::vector<std::uint8_t> boundary_;
  std::size_t active_count_ = 0;
};

Mesh build_mesh(const Domain& domain, std::size_t nx, std::size_t ny);

/// Per-node {0,1} field flagging active nodes within `radius` of any point.
Eigen::VectorXd indicator(const Mesh& mesh, std::span<const Point> points, double radius);

struct ConvexCover {
  std::vector<Box> subdomains;

  /// Largest-area subdomain containing x, or nullptr.
  const Box* largest_containing(const Point& x) const;
};

/// Maximal obstacle-free rectangles whose edges lie on domain or obstacle edges.
ConvexCover decompose_convex(const Domain& domain);

/// CSV rows: node_id,x1,x2,active,boundary.
std::string mesh_to_csv(const Mesh& mesh);

}  // namespace asi
