#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "asi/fem.hpp"
#include "asi/flowfield.hpp"
#include "asi/geometry.hpp"
#include "asi/planner.hpp"
#include "asi/rom.hpp"
#include "asi/si_solver.hpp"
#include "asi/source_model.hpp"

namespace asi {

struct FlowConfig {
  std::string kind = "uniform";  // uniform | channel | vortex | file
  Point velocity{1.0, 0.0};
  double max_speed = 1.0;
  double kappa = 0.4;
  double floor = 1e-3;
  std::string file;
};

struct ScenarioConfig {
  Domain domain;
  std::size_t nx = 41, ny = 41;
  FlowConfig flow;
  std::size_t cover_nx = 20, cover_ny = 20;
  double eta = 0.97;
  std::string rom_dir;  // load a stored reduced model instead of building one
};

struct MissionConfig {
  ScenarioConfig scenario;
  std::vector<Tower> true_towers;
  double beta_max = 0.0;  // 0: use the largest true intensity
  std::size_t m_bar = 12, m_max = 30;
  double sigma = 0.1;
  double epsilon = 1e-3;
  double tau = 1e-8;
  double weight = 1.0;
  std::string truth = "fine";  // fine (2x mesh) | rom (reduced model, exact fit)
  std::vector<Point> waypoints;  // optional initial waypoints
  SaOptions sa;
  SiOptions si;
  PlannerOptions planner;
};

/// Parses the JSON mission schema; missing keys keep their defaults.
MissionConfig parse_mission_config(const std::string& json_text);
MissionConfig load_mission_config(const std::string& path);

/// Mesh, flow, factorized operator and reduced model of one configuration.
struct Scenario {
  Mesh mesh;
  FlowField flow;
  Stiffness K;
  ReducedModel rom;
  ConvexCover cover;
  std::size_t snapshot_count = 0;
};

FlowField make_flow(const Mesh& mesh, const FlowConfig& cfg);
Scenario build_scenario(const ScenarioConfig& cfg);

/// Nodal field plus the mesh it lives on.
struct TruthField {
  Mesh mesh;
  Eigen::VectorXd c;
};

/// Forward solve of the true source on a mesh refined by `refine`.
TruthField truth_field(const ScenarioConfig& cfg, const std::vector<Tower>& towers,
                       std::size_t refine = 2);

/// y = c(x) (1 + eps), eps ~ N(0, sigma^2), c interpolated bilinearly.
double measure(const Mesh& mesh, const Eigen::VectorXd& c, const Point& x, double sigma,
               std::mt19937_64& rng);
/// Generator for measurement number `index` of a run with `seed`.
std::mt19937_64 measurement_rng(std::uint64_t seed, std::uint64_t index);

/// 20 log10(||y|| / ||y - c||) over the measurements; infinite without noise.
double snr_db(const std::vector<double>& readings, const std::vector<double>& clean);

struct ErrorMetrics {
  double e_un = 0.0, e_fd = 0.0;
  std::optional<double> e_int, e_loc;  // single-source only
};

/// Exact evaluation for piecewise-constant tower sources over the domain.
ErrorMetrics error_metrics(const std::vector<Tower>& truth, const std::vector<Tower>& estimate,
                           const Domain& domain, double beta_max);

/// Equispaced cell-centred grid of about m points, obstacle nodes skipped.
std::vector<Point> initial_waypoints(const Domain& domain, std::size_t m);

struct MissionStep {
  std::size_t m = 0;
  Eigen::VectorXd p;
  double objective = 0.0;
  int si_iterations = 0;
  bool si_converged = false;
  double delta_p = 0.0;
  std::optional<PlanResult> plan;
};

struct MissionReport {
  std::string status;  // converged | budget_exhausted | no_source_detected
  std::uint64_t seed = 0;
  bool converged = false;
  std::size_t measurements = 0;
  std::size_t basis_count = 0, snapshot_count = 0;
  std::vector<Tower> truth;
  SourceParams initial;
  SourceParams p_hat;
  std::vector<MissionStep> steps;
  std::vector<Point> waypoints;
  std::vector<double> readings;
  double snr = 0.0;
  std::optional<ErrorMetrics> metrics;
  double wall_seconds = 0.0;  // not part of report.json
  Eigen::VectorXd sensitivity;
  Eigen::VectorXd estimate_field;  // Psi c on the inversion mesh
};

MissionReport run_asi(const MissionConfig& cfg, std::uint64_t seed);
/// Same loop on a scenario that is already built.
MissionReport run_asi(const MissionConfig& cfg, const Scenario& sc, std::uint64_t seed);

std::string report_json(const MissionReport& r);
std::string trace_csv(const MissionReport& r);
/// report.json, trace.csv, measurements.csv, timing.json, estimate/sensitivity
/// field dumps.
void write_report(const MissionReport& r, const Mesh& mesh, const std::string& dir);

}  // namespace asi
