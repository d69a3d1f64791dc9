#include "asi/interpolation.hpp"

#include <algorithm>

namespace asi {

namespace {

struct LocalCoords {
  std::size_t ci, cj;
  double s, t;
};

LocalCoords locate(const Mesh& mesh, const Point& x) {
  const Box& b = mesh.domain().bounds;
  const double px = std::clamp(x.x(), b.lower.x(), b.upper.x());
  const double py = std::clamp(x.y(), b.lower.y(), b.upper.y());
  LocalCoords lc{mesh.cell_column(px), mesh.cell_row(py), 0.0, 0.0};
  lc.s = (px - b.lower.x()) / mesh.hx() - static_cast<double>(lc.ci);
  lc.t = (py - b.lower.y()) / mesh.hy() - static_cast<double>(lc.cj);
  lc.s = std::clamp(lc.s, 0.0, 1.0);
  lc.t = std::clamp(lc.t, 0.0, 1.0);
  return lc;
}

}  // namespace

CellWeights bilinear_weights(const Mesh& mesh, const Point& x) {
  const auto lc = locate(mesh, x);
  CellWeights cw;
  cw.nodes = mesh.cell_nodes(lc.ci, lc.cj);
  cw.w = {(1 - lc.s) * (1 - lc.t), lc.s * (1 - lc.t), lc.s * lc.t, (1 - lc.s) * lc.t};
  return cw;
}

CellWeights bilinear_dx_weights(const Mesh& mesh, const Point& x) {
  const auto lc = locate(mesh, x);
  const double ih = 1.0 / mesh.hx();
  CellWeights cw;
  cw.nodes = mesh.cell_nodes(lc.ci, lc.cj);
  cw.w = {-(1 - lc.t) * ih, (1 - lc.t) * ih, lc.t * ih, -lc.t * ih};
  return cw;
}

CellWeights bilinear_dy_weights(const Mesh& mesh, const Point& x) {
  const auto lc = locate(mesh, x);
  const double ih = 1.0 / mesh.hy();
  CellWeights cw;
  cw.nodes = mesh.cell_nodes(lc.ci, lc.cj);
  cw.w = {-(1 - lc.s) * ih, -lc.s * ih, lc.s * ih, (1 - lc.s) * ih};
  return cw;
}

std::array<double, 4> cell_region_integrals(const Mesh& mesh, std::size_t ci, std::size_t cj,
                                            const Box& region) {
  const Box& b = mesh.domain().bounds;
  const double cx = b.lower.x() + static_cast<double>(ci) * mesh.hx();
  const double cy = b.lower.y() + static_cast<double>(cj) * mesh.hy();
  const double sa = std::clamp((region.lower.x() - cx) / mesh.hx(), 0.0, 1.0);
  const double sb = std::clamp((region.upper.x() - cx) / mesh.hx(), 0.0, 1.0);
  const double ta = std::clamp((region.lower.y() - cy) / mesh.hy(), 0.0, 1.0);
  const double tb = std::clamp((region.upper.y() - cy) / mesh.hy(), 0.0, 1.0);
  if (!(sb > sa) || !(tb > ta)) return {0.0, 0.0, 0.0, 0.0};
  const auto ix = detail::hat_integrals(sa, sb);
  const auto iy = detail::hat_integrals(ta, tb);
  const double jac = mesh.hx() * mesh.hy();
  return {ix[0] * iy[0] * jac, ix[1] * iy[0] * jac, ix[1] * iy[1] * jac, ix[0] * iy[1] * jac};
}

}  // namespace asi
