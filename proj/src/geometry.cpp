#include "asi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace asi {

void Domain::validate() const {
  if (!(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw std::invalid_argument("domain bounds have zero area");
  }
  if (!(characteristic_length > 0.0)) {
    throw std::invalid_argument("characteristic length must be positive");
  }
  for (const auto& ob : obstacles) {
    if (!(ob.width() > 0.0) || !(ob.height() > 0.0)) {
      throw std::invalid_argument("obstacle with non-positive area");
    }
    if (!bounds.contains(ob)) {
      throw std::invalid_argument("obstacle extends outside the domain bounds");
    }
  }
}

bool Domain::contains(const Point& x) const {
  if (!bounds.contains(x)) return false;
  return std::none_of(obstacles.begin(), obstacles.end(),
                      [&](const Box& ob) { return ob.contains_strictly(x); });
}

bool Mesh::cell_active(std::size_t ci, std::size_t cj) const {
  const auto c = cell_nodes(ci, cj);
  return std::all_of(c.begin(), c.end(), [&](std::size_t n) { return active_[n] != 0; });
}

std::size_t Mesh::cell_column(double x) const {
  const double s = std::floor((x - domain_.bounds.lower.x()) / hx_);
  if (s <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(s), nx_ - 2);
}

std::size_t Mesh::cell_row(double y) const {
  const double s = std::floor((y - domain_.bounds.lower.y()) / hy_);
  if (s <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(s), ny_ - 2);
}

Mesh build_mesh(const Domain& domain, std::size_t nx, std::size_t ny) {
  domain.validate();
  if (nx < 3 || ny < 3) {
    throw std::invalid_argument("mesh needs at least 3 nodes per axis");
  }
  Mesh m;
  m.domain_ = domain;
  m.nx_ = nx;
  m.ny_ = ny;
  m.hx_ = domain.bounds.width() / static_cast<double>(nx - 1);
  m.hy_ = domain.bounds.height() / static_cast<double>(ny - 1);
  const std::size_t n = nx * ny;
  m.nodes_.resize(n);
  m.active_.assign(n, 1);
  m.boundary_.assign(n, 0);

  for (std::size_t id = 0; id < n; ++id) {
    const Point x = m.node(id);
    m.nodes_[id] = x;
    const std::size_t i = id % nx, j = id / nx;
    if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) m.boundary_[id] = 1;
    for (const auto& ob : domain.obstacles) {
      if (ob.contains_strictly(x)) {
        m.active_[id] = 0;
      } else if (ob.contains(x)) {
        m.boundary_[id] = 1;
      }
    }
  }
  // Corners of a dropped cell lose their element support; pin them.
  for (std::size_t cj = 0; cj + 1 < ny; ++cj) {
    for (std::size_t ci = 0; ci + 1 < nx; ++ci) {
      if (m.cell_active(ci, cj)) continue;
      for (auto id : m.cell_nodes(ci, cj)) {
        if (m.active_[id]) m.boundary_[id] = 1;
      }
    }
  }
  for (std::size_t id = 0; id < n; ++id) {
    if (!m.active_[id]) m.boundary_[id] = 0;
    m.active_count_ += m.active_[id];
  }
  return m;
}

Eigen::VectorXd indicator(const Mesh& mesh, std::span<const Point> points, double radius) {
  if (radius < 0.0) throw std::invalid_argument("negative indicator radius");
  for (const auto& p : points) {
    if (!mesh.domain().contains(p)) {
      throw std::invalid_argument("measurement point outside the domain");
    }
  }
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.node_count()));
  const double r2 = radius * radius;
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (!mesh.active(id)) continue;
    const Point x = mesh.node(id);
    for (const auto& p : points) {
      if ((x - p).squaredNorm() <= r2) {
        chi[static_cast<Eigen::Index>(id)] = 1.0;
        break;
      }
    }
  }
  return chi;
}

const Box* ConvexCover::largest_containing(const Point& x) const {
  const Box* best = nullptr;
  for (const auto& b : subdomains) {
    if (b.contains(x) && (best == nullptr || b.area() > best->area())) best = &b;
  }
  return best;
}

namespace {

std::vector<double> cut_lines(double lo, double hi, const std::vector<Box>& obstacles,
                              bool along_x) {
  std::vector<double> v{lo, hi};
  for (const auto& ob : obstacles) {
    v.push_back(along_x ? ob.lower.x() : ob.lower.y());
    v.push_back(along_x ? ob.upper.x() : ob.upper.y());
  }
  for (auto& c : v) c = std::clamp(c, lo, hi);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

ConvexCover decompose_convex(const Domain& domain) {
  domain.validate();
  const auto xs = cut_lines(domain.bounds.lower.x(), domain.bounds.upper.x(),
                            domain.obstacles, true);
  const auto ys = cut_lines(domain.bounds.lower.y(), domain.bounds.upper.y(),
                            domain.obstacles, false);
  const auto nxs = static_cast<long>(xs.size());
  const auto nys = static_cast<long>(ys.size());

  auto free_rect = [&](long a, long b, long c, long d) {
    if (a < 0 || c < 0 || b >= nxs || d >= nys) return false;
    const Box r{{xs[a], ys[c]}, {xs[b], ys[d]}};
    return std::none_of(domain.obstacles.begin(), domain.obstacles.end(),
                        [&](const Box& ob) { return ob.overlaps_interior(r); });
  };

  // Obstacle edges are all cut lines, so a free rectangle is maximal exactly
  // when no side can be pushed out by one cut.
  ConvexCover cover;
  for (long a = 0; a < nxs; ++a) {
    for (long b = a + 1; b < nxs; ++b) {
      for (long c = 0; c < nys; ++c) {
        for (long d = c + 1; d < nys; ++d) {
          if (!free_rect(a, b, c, d)) continue;
          if (free_rect(a - 1, b, c, d) || free_rect(a, b + 1, c, d) ||
              free_rect(a, b, c - 1, d) || free_rect(a, b, c, d + 1)) {
            continue;
          }
          cover.subdomains.push_back(Box{{xs[a], ys[c]}, {xs[b], ys[d]}});
        }
      }
    }
  }
  std::stable_sort(cover.subdomains.begin(), cover.subdomains.end(),
                   [](const Box& l, const Box& r) { return l.area() > r.area(); });
  return cover;
}

std::string mesh_to_csv(const Mesh& mesh) {
  std::ostringstream os;
  os.precision(17);
  os << "node_id,x1,x2,active,boundary\n";
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    const Point x = mesh.node(id);
    os << id << ',' << x.x() << ',' << x.y() << ',' << (mesh.active(id) ? 1 : 0) << ','
       << (mesh.boundary(id) ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace asi
