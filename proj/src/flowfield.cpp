#include "asi/flowfield.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace asi {

double FlowField::mean_diffusivity(const Mesh& mesh) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (!mesh.active(id)) continue;
    sum += diffusivity[static_cast<Eigen::Index>(id)];
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

double FlowField::max_speed(const Mesh& mesh) const {
  double best = 0.0;
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (mesh.active(id)) best = std::max(best, velocity.row(static_cast<Eigen::Index>(id)).norm());
  }
  return best;
}

Eigen::VectorXd total_diffusivity(double kappa0, std::span<const double> turbulent_viscosity,
                                  double density, double schmidt, double floor) {
  if (!(density > 0.0) || !(schmidt > 0.0)) {
    throw std::invalid_argument("density and Schmidt number must be positive");
  }
  Eigen::VectorXd kappa(static_cast<Eigen::Index>(turbulent_viscosity.size()));
  for (std::size_t i = 0; i < turbulent_viscosity.size(); ++i) {
    const double mu = turbulent_viscosity[i];
    if (!(mu >= 0.0)) throw std::invalid_argument("turbulent viscosity must be nonnegative");
    kappa[static_cast<Eigen::Index>(i)] = std::max(floor, kappa0 + mu / (density * schmidt));
  }
  return kappa;
}

double peclet(double speed, double characteristic_length, double mean_diffusivity) {
  if (!(mean_diffusivity > 0.0)) throw std::invalid_argument("mean diffusivity must be positive");
  if (speed < 0.0 || characteristic_length < 0.0) {
    throw std::invalid_argument("speed and length must be nonnegative");
  }
  return speed * characteristic_length / mean_diffusivity;
}

FlowField analytic_flow(const Mesh& mesh, const AnalyticFlowParams& params) {
  if (!(params.kappa > 0.0) && !(params.floor > 0.0)) {
    throw std::invalid_argument("diffusivity must be positive");
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  FlowField f;
  f.floor = params.floor;
  f.velocity.resize(n, 2);
  f.diffusivity = Eigen::VectorXd::Constant(n, std::max(params.kappa, params.floor));
  const Box& b = mesh.domain().bounds;
  for (Eigen::Index id = 0; id < n; ++id) {
    const Point x = mesh.node(static_cast<std::size_t>(id));
    const double xi = (x.x() - b.lower.x()) / b.width();
    const double eta = (x.y() - b.lower.y()) / b.height();
    switch (params.kind) {
      case FlowKind::Uniform:
        f.velocity.row(id) = params.velocity.transpose();
        break;
      case FlowKind::Channel:
        f.velocity(id, 0) = 4.0 * params.max_speed * eta * (1.0 - eta);
        f.velocity(id, 1) = 0.0;
        break;
      case FlowKind::CornerVortex: {
        using std::numbers::pi;
        f.velocity(id, 0) = params.max_speed * std::sin(pi * xi) * std::cos(pi * eta);
        f.velocity(id, 1) = -params.max_speed * std::cos(pi * xi) * std::sin(pi * eta);
        break;
      }
    }
  }
  return f;
}

FlowField parse_flow_csv(const std::string& text, const Mesh& mesh, double floor) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::array<double, 4>> rows;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (first_line) {
      first_line = false;
      const auto comma = line.find(',');
      try {
        (void)std::stod(line.substr(0, comma));
      } catch (const std::exception&) {
        continue;  // header
      }
    }
    std::array<double, 4> r{};
    std::istringstream ls(line);
    std::string cell;
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ls, cell, ',')) throw std::runtime_error("flow CSV: expected 4 columns");
      try {
        r[static_cast<std::size_t>(k)] = std::stod(cell);
      } catch (const std::exception&) {
        throw std::runtime_error("flow CSV: unparseable value '" + cell + "'");
      }
      if (!std::isfinite(r[static_cast<std::size_t>(k)])) {
        throw std::runtime_error("flow CSV: non-finite entry");
      }
    }
    rows.push_back(r);
  }
  if (rows.size() != mesh.node_count()) {
    throw std::runtime_error("flow CSV: row count " + std::to_string(rows.size()) +
                             " does not match mesh node count " +
                             std::to_string(mesh.node_count()));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  FlowField f;
  f.floor = floor;
  f.velocity.resize(n, 2);
  f.diffusivity.resize(n);
  std::vector<bool> seen(rows.size(), false);
  for (const auto& r : rows) {
    const auto id = static_cast<long>(r[0]);
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)]) {
      throw std::runtime_error("flow CSV: bad or duplicate node id");
    }
    seen[static_cast<std::size_t>(id)] = true;
    f.velocity(id, 0) = r[1];
    f.velocity(id, 1) = r[2];
    f.diffusivity[id] = std::max(floor, r[3]);
  }
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    if (mesh.active(id) && !(f.diffusivity[static_cast<Eigen::Index>(id)] > 0.0)) {
      throw std::runtime_error("flow CSV: non-positive diffusivity at an active node");
    }
  }
  return f;
}

FlowField load_flow(const std::string& path, const Mesh& mesh, double floor) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open flow file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_flow_csv(ss.str(), mesh, floor);
}

std::string flow_to_csv(const FlowField& flow) {
  std::ostringstream os;
  os.precision(17);
  os << "node_id,u1,u2,kappa\n";
  for (Eigen::Index id = 0; id < flow.diffusivity.size(); ++id) {
    os << id << ',' << flow.velocity(id, 0) << ',' << flow.velocity(id, 1) << ','
       << flow.diffusivity[id] << '\n';
  }
  return os.str();
}

double max_divergence(const Mesh& mesh, const FlowField& flow) {
  double worst = 0.0;
  const std::size_t nx = mesh.nx(), ny = mesh.ny();
  for (std::size_t j = 1; j + 1 < ny; ++j) {
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      const auto id = mesh.index(i, j);
      if (!mesh.free(id)) continue;
      const auto e = static_cast<Eigen::Index>(mesh.index(i + 1, j));
      const auto w = static_cast<Eigen::Index>(mesh.index(i - 1, j));
      const auto nn = static_cast<Eigen::Index>(mesh.index(i, j + 1));
      const auto s = static_cast<Eigen::Index>(mesh.index(i, j - 1));
      const double div = (flow.velocity(e, 0) - flow.velocity(w, 0)) / (2.0 * mesh.hx()) +
                         (flow.velocity(nn, 1) - flow.velocity(s, 1)) / (2.0 * mesh.hy());
      worst = std::max(worst, std::abs(div));
    }
  }
  return worst;
}

}  // namespace asi
