#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "asi/geometry.hpp"

namespace asi {

/// Nodal velocity and diffusivity on a Mesh.
struct FlowField {
  Eigen::MatrixX2d velocity;   // one row per mesh node
  Eigen::VectorXd diffusivity; // kappa per node, already floored
  double floor = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(diffusivity.size()); }
  /// Mean diffusivity over active nodes.
  double mean_diffusivity(const Mesh& mesh) const;
  /// Largest velocity magnitude over active nodes.
  double max_speed(const Mesh& mesh) const;
};

/// kappa = max(floor, kappa0 + mu / (rho * Sc)) per node.
Eigen::VectorXd total_diffusivity(double kappa0, std::span<const double> turbulent_viscosity,
                                  double density, double schmidt, double floor);

/// Pe = u * l / kappa_mean.
double peclet(double speed, double characteristic_length, double mean_diffusivity);

enum class FlowKind { Uniform, Channel, CornerVortex };

struct AnalyticFlowParams {
  FlowKind kind = FlowKind::Uniform;
  Point velocity{1.0, 0.0};  // Uniform
  double max_speed = 1.0;    // Channel centreline speed / vortex peak speed
  double kappa = 1.0;
  double floor = 0.0;
};

/// Synthetic stand-ins for precomputed flow data. Channel flow is parabolic
/// in x2 with no-slip walls at the lower/upper bounds; CornerVortex is a
/// single recirculation cell with zero normal velocity on the outer walls.
FlowField analytic_flow(const Mesh& mesh, const AnalyticFlowParams& params);

/// Reads `node_id,u1,u2,kappa` rows (optional header line).
FlowField load_flow(const std::string& path, const Mesh& mesh, double floor);
FlowField parse_flow_csv(const std::string& text, const Mesh& mesh, double floor);
std::string flow_to_csv(const FlowField& flow);

/// Max |div u| over free nodes from central differences. Ingested CFD data is
/// not required to be solenoidal; this is reported, never enforced.
double max_divergence(const Mesh& mesh, const FlowField& flow);

}  // namespace asi
