#pragma once

#include <array>
#include <algorithm>
#include <cstddef>

#include "asi/geometry.hpp"

namespace asi {

/// Bilinear (Q1) shape-function weights on one mesh cell. Corner order
/// follows Mesh::cell_nodes.
struct CellWeights {
  std::array<std::size_t, 4> nodes{};
  std::array<double, 4> w{};
};

/// Q1 interpolation weights at x (x is clamped to the mesh bounds).
CellWeights bilinear_weights(const Mesh& mesh, const Point& x);

/// Weights of d/dx1 and d/dx2 of the Q1 interpolant, taken on the cell that
/// Mesh::cell_column / cell_row assign to x.
CellWeights bilinear_dx_weights(const Mesh& mesh, const Point& x);
CellWeights bilinear_dy_weights(const Mesh& mesh, const Point& x);

/// Integral of each Q1 shape function of cell (ci, cj) over the part of the
/// cell inside `region`. Exact: the integrand is bilinear.
std::array<double, 4> cell_region_integrals(const Mesh& mesh, std::size_t ci, std::size_t cj,
                                            const Box& region);

/// Calls visit(weights) for every active cell overlapping `region`, with the
/// exact integrals of that cell's shape functions over the overlap.
template <class Visit>
void for_each_region_cell(const Mesh& mesh, const Box& region, Visit&& visit);

/// Line integrals of the shape functions along x1 = const, x2 in [a, b]
/// (vertical) or x2 = const, x1 in [a, b] (horizontal); `derivative` selects
/// the normal derivative d/dx1 (vertical) or d/dx2 (horizontal) instead of
/// the value. Visits every crossed cell.
template <class Visit>
void for_each_line_cell(const Mesh& mesh, bool vertical, double at, double a, double b,
                        bool derivative, Visit&& visit);

// ---------------------------------------------------------------------------

namespace detail {
/// Integrals over [sa, sb] (local coordinate) of (1 - s) and s.
inline std::array<double, 2> hat_integrals(double sa, double sb) {
  const double lin = 0.5 * (sb * sb - sa * sa);
  return {(sb - sa) - lin, lin};
}
}  // namespace detail

template <class Visit>
void for_each_region_cell(const Mesh& mesh, const Box& region, Visit&& visit) {
  const Box& b = mesh.domain().bounds;
  const double x0 = std::max(region.lower.x(), b.lower.x());
  const double x1 = std::min(region.upper.x(), b.upper.x());
  const double y0 = std::max(region.lower.y(), b.lower.y());
  const double y1 = std::min(region.upper.y(), b.upper.y());
  if (!(x1 > x0) || !(y1 > y0)) return;
  const std::size_t ci0 = mesh.cell_column(x0), ci1 = mesh.cell_column(x1);
  const std::size_t cj0 = mesh.cell_row(y0), cj1 = mesh.cell_row(y1);
  for (std::size_t cj = cj0; cj <= cj1; ++cj) {
    for (std::size_t ci = ci0; ci <= ci1; ++ci) {
      if (!mesh.cell_active(ci, cj)) continue;
      CellWeights cw;
      cw.nodes = mesh.cell_nodes(ci, cj);
      cw.w = cell_region_integrals(mesh, ci, cj, Box{{x0, y0}, {x1, y1}});
      if (cw.w[0] == 0.0 && cw.w[1] == 0.0 && cw.w[2] == 0.0 && cw.w[3] == 0.0) continue;
      visit(cw);
    }
  }
}

template <class Visit>
void for_each_line_cell(const Mesh& mesh, bool vertical, double at, double a, double b,
                        bool derivative, Visit&& visit) {
  if (!(b > a)) return;
  const Box& bounds = mesh.domain().bounds;
  const double lo = vertical ? bounds.lower.y() : bounds.lower.x();
  const double hi = vertical ? bounds.upper.y() : bounds.upper.x();
  a = std::max(a, lo);
  b = std::min(b, hi);
  if (!(b > a)) return;
  const double h_along = vertical ? mesh.hy() : mesh.hx();
  const double h_across = vertical ? mesh.hx() : mesh.hy();
  const double origin_across = vertical ? bounds.lower.x() : bounds.lower.y();
  const std::size_t c_across = vertical ? mesh.cell_column(at) : mesh.cell_row(at);
  const double s = (at - origin_across) / h_across - static_cast<double>(c_across);
  // Across-line factor for the "low" and "high" corners of the cell.
  const std::array<double, 2> across =
      derivative ? std::array<double, 2>{-1.0 / h_across, 1.0 / h_across}
                 : std::array<double, 2>{1.0 - s, s};
  const std::size_t k0 = vertical ? mesh.cell_row(a) : mesh.cell_column(a);
  const std::size_t k1 = vertical ? mesh.cell_row(b) : mesh.cell_column(b);
  for (std::size_t k = k0; k <= k1; ++k) {
    const double cell_lo = lo + static_cast<double>(k) * h_along;
    const double ta = std::clamp((a - cell_lo) / h_along, 0.0, 1.0);
    const double tb = std::clamp((b - cell_lo) / h_along, 0.0, 1.0);
    if (!(tb > ta)) continue;
    const std::size_t ci = vertical ? c_across : k;
    const std::size_t cj = vertical ? k : c_across;
    if (!mesh.cell_active(ci, cj)) continue;
    const auto along = detail::hat_integrals(ta, tb);
    CellWeights cw;
    cw.nodes = mesh.cell_nodes(ci, cj);
    // Corner (p, q) in local (x, y) index; cell_nodes order: (0,0),(1,0),(1,1),(0,1).
    constexpr std::array<std::array<int, 2>, 4> corner{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
    for (std::size_t c = 0; c < 4; ++c) {
      const int ix = corner[c][0], iy = corner[c][1];
      const int i_across = vertical ? ix : iy;
      const int i_along = vertical ? iy : ix;
      cw.w[c] = across[static_cast<std::size_t>(i_across)] *
                along[static_cast<std::size_t>(i_along)] * h_along;
    }
    visit(cw);
  }
}

}  // namespace asi
