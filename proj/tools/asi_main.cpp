// Command-line front end: full missions and the individual pipeline stages.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "asi/io.hpp"
#include "asi/mission.hpp"

namespace {

using namespace asi;
using ojson = nlohmann::ordered_json;

struct Measurements {
  std::vector<Point> x;
  std::vector<double> y;
};

// x1,x2,y rows; a non-numeric first line is a header.
Measurements read_measurements(const std::string& path) {
  std::istringstream in(read_text(path));
  Measurements m;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string a, b, c;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, c, ',');
    try {
      const double x1 = std::stod(a), x2 = std::stod(b), y = std::stod(c);
      m.x.push_back({x1, x2});
      m.y.push_back(y);
    } catch (const std::exception&) {
      if (!first) throw std::runtime_error("bad measurement row: " + line);
    }
    first = false;
  }
  return m;
}

ojson point_json(const Point& p) { return ojson::array({p.x(), p.y()}); }

ojson params_json(const SourceParams& p) {
  ojson a = ojson::array();
  for (std::size_t j = 0; j < p.size(); ++j) {
    ojson t;
    t["beta"] = p.towers[j].beta;
    t["lower"] = point_json(p.towers[j].lower);
    t["upper"] = point_json(p.towers[j].upper);
    t["bounds"] = {{"lower", point_json(p.bounds[j].lower)}, {"upper", point_json(p.bounds[j].upper)}};
    a.push_back(t);
  }
  return a;
}

SourceParams params_from(const nlohmann::json& a, const Domain& domain) {
  auto pt = [](const nlohmann::json& j) { return Point{j.at(0).get<double>(), j.at(1).get<double>()}; };
  SourceParams p;
  for (const auto& t : a) {
    p.towers.push_back({t.at("beta").get<double>(), pt(t.at("lower")), pt(t.at("upper"))});
    p.bounds.push_back(t.contains("bounds") ? Box{pt(t.at("bounds").at("lower")), pt(t.at("bounds").at("upper"))}
                                            : domain.bounds);
  }
  return p;
}

int cmd_run(const std::string& config, std::uint64_t seed, const std::string& out) {
  const MissionConfig cfg = load_mission_config(config);
  const Scenario sc = build_scenario(cfg.scenario);
  const MissionReport rep = run_asi(cfg, sc, seed);
  write_report(rep, sc.mesh, out);
  std::cout << "status " << rep.status << ", " << rep.measurements << " measurements";
  if (rep.metrics) {
    std::cout << ", e_un " << rep.metrics->e_un << ", e_fd " << rep.metrics->e_fd;
    if (rep.metrics->e_loc) std::cout << ", e_loc " << *rep.metrics->e_loc;
  }
  std::cout << "\n";
  return 0;
}

int cmd_snapshots(const std::string& config, const std::string& out) {
  const MissionConfig cfg = load_mission_config(config);
  const ScenarioConfig& s = cfg.scenario;
  const Mesh mesh = build_mesh(s.domain, s.nx, s.ny);
  const Stiffness K = assemble(mesh, make_flow(mesh, s.flow));
  const SnapshotSet set = generate_snapshots(mesh, K, s.cover_nx, s.cover_ny);
  std::filesystem::create_directories(out);
  write_matrix_csv(out + "/snapshots.csv", set.fields.transpose());
  ojson meta;
  meta["R"] = set.count();
  meta["nodes"] = mesh.node_count();
  ojson sup = ojson::array();
  for (const Box& b : set.supports) sup.push_back({{"lower", point_json(b.lower)}, {"upper", point_json(b.upper)}});
  meta["supports"] = sup;
  write_text(out + "/snapshots.json", meta.dump(2) + "\n");
  write_text(out + "/mesh.csv", mesh_to_csv(mesh));
  std::cout << set.count() << " snapshots\n";
  return 0;
}

int cmd_pod(const std::string& config, const std::string& out) {
  const MissionConfig cfg = load_mission_config(config);
  ScenarioConfig s = cfg.scenario;
  s.rom_dir.clear();
  const Scenario sc = build_scenario(s);
  save_reduced_model(sc.rom, out);
  std::cout << "N = " << sc.rom.size() << " of R = " << sc.snapshot_count << "\n";
  return 0;
}

int cmd_solve_si(const std::string& config, const std::string& meas, const std::string& init,
                 const std::string& out) {
  const MissionConfig cfg = load_mission_config(config);
  const Scenario sc = build_scenario(cfg.scenario);
  const Measurements m = read_measurements(meas);
  SourceParams p0;
  if (init.empty()) {
    const SiProblem sa = make_si_problem(sc.rom, m.x, m.y, cfg.tau, {}, cfg.weight);
    p0 = sa_initialize(sa, sc.cover, cfg.sa).init;
  } else {
    p0 = params_from(nlohmann::json::parse(read_text(init)), cfg.scenario.domain);
  }
  const SiProblem prob = make_si_problem(sc.rom, m.x, m.y, cfg.tau, p0.bounds, cfg.weight);
  const SiSolution sol = solve_si(prob, project_feasible(p0), cfg.si);
  std::filesystem::create_directories(out);
  write_text(out + "/estimate.json", params_json(sol.p_hat).dump(2) + "\n");
  std::string trace = "iteration,objective,pg_norm";
  for (Eigen::Index k = 0; k < sol.p_hat.flatten().size(); ++k) trace += ",p" + std::to_string(k);
  trace += '\n';
  for (const SiIterate& it : sol.trace) {
    trace += std::to_string(it.iteration) + ',' + format_double(it.objective) + ',' + format_double(it.pg_norm);
    for (Eigen::Index k = 0; k < it.p.size(); ++k) trace += ',' + format_double(it.p[k]);
    trace += '\n';
  }
  write_text(out + "/si_trace.csv", trace);
  std::cout << "objective " << sol.objective_value << " after " << sol.iterations << " iterations"
            << (sol.converged ? "" : " (not converged)") << "\n";
  return 0;
}

int cmd_plan_step(const std::string& config, const std::string& meas, const std::string& estimate,
                  const std::string& out) {
  const MissionConfig cfg = load_mission_config(config);
  const Scenario sc = build_scenario(cfg.scenario);
  const Measurements m = read_measurements(meas);
  const SourceParams p = params_from(nlohmann::json::parse(read_text(estimate)), cfg.scenario.domain);
  const PlannerState st = make_planner_state(sc.rom, p, m.x, cfg.planner);
  const PlanResult res = plan_next(st, sc.cover);
  ojson o;
  o["x"] = point_json(res.x);
  o["lambda_min"] = res.lambda_min;
  o["x0"] = point_json(res.x0);
  o["g0"] = res.g0;
  o["iterations"] = res.iterations;
  o["converged"] = res.converged;
  o["flagged"] = res.flagged;
  o["non_improving"] = res.non_improving;
  std::string trace = "iteration,z,x1,x2,lambda_min,step,gamma\n";
  for (const SsdpIterate& it : res.trace) {
    trace += std::to_string(it.iteration) + ',' + format_double(it.z) + ',' + format_double(it.x.x()) + ',' +
             format_double(it.x.y()) + ',' + format_double(it.lambda_min) + ',' + format_double(it.step) + ',' +
             format_double(it.gamma) + '\n';
  }
  std::filesystem::create_directories(out);
  write_text(out + "/next.json", o.dump(2) + "\n");
  write_text(out + "/ssdp_trace.csv", trace);
  std::cout << "next waypoint (" << res.x.x() << ", " << res.x.y() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active source identification in steady advection-diffusion fields"};
  app.require_subcommand(1);
  std::string config, out = "report", meas, init, estimate;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "Run a full seeded mission");
  run->add_option("--config", config, "Mission JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Noise seed");
  run->add_option("--out", out, "Output directory");

  auto* snaps = app.add_subcommand("snapshots", "Generate and store POD snapshots");
  snaps->add_option("--config", config, "Mission JSON")->required()->check(CLI::ExistingFile);
  snaps->add_option("--out", out, "Output directory");

  auto* pod = app.add_subcommand("pod", "Build and store the reduced model");
  pod->add_option("--config", config, "Mission JSON")->required()->check(CLI::ExistingFile);
  pod->add_option("--out", out, "Output directory");

  auto* si = app.add_subcommand("solve-si", "Identify sources from a measurement file");
  si->add_option("--config", config, "Mission JSON")->required()->check(CLI::ExistingFile);
  si->add_option("--measurements", meas, "CSV x1,x2,y")->required()->check(CLI::ExistingFile);
  si->add_option("--init", init, "Initial estimate JSON (default: sensitivity analysis)");
  si->add_option("--out", out, "Output directory");

  auto* plan = app.add_subcommand("plan-step", "Compute the next best measurement location");
  plan->add_option("--config", config, "Mission JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--measurements", meas, "CSV x1,x2,y")->required()->check(CLI::ExistingFile);
  plan->add_option("--estimate", estimate, "Source estimate JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, seed, out);
    if (*snaps) return cmd_snapshots(config, out);
    if (*pod) return cmd_pod(config, out);
    if (*si) return cmd_solve_si(config, meas, init, out);
    if (*plan) return cmd_plan_step(config, meas, estimate, out);
  } catch (const std::exception& e) {
    std::cerr << "asi: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
