#include "asi/mission.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "asi/interpolation.hpp"
#include "asi/io.hpp"
#include "json.hpp"

namespace asi {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

Point point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a coordinate pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

Box box_from(const json& j) { return {point_from(j.at("lower")), point_from(j.at("upper"))}; }

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ojson point_json(const Point& p) { return ojson::array({p.x(), p.y()}); }

ojson tower_json(const Tower& t) {
  ojson o;
  o["beta"] = t.beta;
  o["lower"] = point_json(t.lower);
  o["upper"] = point_json(t.upper);
  return o;
}

ojson box_json(const Box& b) {
  ojson o;
  o["lower"] = point_json(b.lower);
  o["upper"] = point_json(b.upper);
  return o;
}

}  // namespace

MissionConfig parse_mission_config(const std::string& text) {
  const json j = json::parse(text);
  MissionConfig cfg;
  ScenarioConfig& sc = cfg.scenario;
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    if (d.contains("lower")) sc.domain.bounds.lower = point_from(d.at("lower"));
    if (d.contains("upper")) sc.domain.bounds.upper = point_from(d.at("upper"));
    if (d.contains("obstacles")) {
      for (const json& o : d.at("obstacles")) sc.domain.obstacles.push_back(box_from(o));
    }
    read(d, "characteristic_length", sc.domain.characteristic_length);
  }
  if (j.contains("mesh")) {
    read(j.at("mesh"), "nx", sc.nx);
    read(j.at("mesh"), "ny", sc.ny);
  }
  if (j.contains("flow")) {
    const json& f = j.at("flow");
    read(f, "kind", sc.flow.kind);
    if (f.contains("velocity")) sc.flow.velocity = point_from(f.at("velocity"));
    read(f, "max_speed", sc.flow.max_speed);
    read(f, "kappa", sc.flow.kappa);
    read(f, "floor", sc.flow.floor);
    read(f, "file", sc.flow.file);
  }
  if (j.contains("rom")) {
    const json& r = j.at("rom");
    if (r.contains("cover")) {
      sc.cover_nx = r.at("cover").at(0).get<std::size_t>();
      sc.cover_ny = r.at("cover").at(1).get<std::size_t>();
    }
    read(r, "eta", sc.eta);
    read(r, "load", sc.rom_dir);
  }
  if (j.contains("source")) {
    const json& s = j.at("source");
    for (const json& t : s.at("towers")) {
      cfg.true_towers.push_back({t.at("beta").get<double>(), point_from(t.at("lower")), point_from(t.at("upper"))});
    }
    read(s, "beta_max", cfg.beta_max);
  }
  if (j.contains("mission")) {
    const json& m = j.at("mission");
    read(m, "m_bar", cfg.m_bar);
    read(m, "m_max", cfg.m_max);
    read(m, "sigma", cfg.sigma);
    read(m, "epsilon", cfg.epsilon);
    read(m, "tau", cfg.tau);
    read(m, "weight", cfg.weight);
    read(m, "truth", cfg.truth);
    if (m.contains("waypoints")) {
      for (const json& w : m.at("waypoints")) cfg.waypoints.push_back(point_from(w));
    }
  }
  if (j.contains("sa")) {
    const json& s = j.at("sa");
    read(s, "alpha", cfg.sa.alpha);
    read(s, "link_factor", cfg.sa.link_factor);
    read(s, "half_side", cfg.sa.half_side);
    read(s, "beta_scale", cfg.sa.beta_scale);
  }
  if (j.contains("si")) {
    read(j.at("si"), "max_iterations", cfg.si.max_iterations);
    read(j.at("si"), "tolerance", cfg.si.tolerance);
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    read(p, "eps_bar", cfg.planner.eps_bar);
    read(p, "delta", cfg.planner.delta);
    read(p, "gamma_bar", cfg.planner.gamma_bar);
    read(p, "rho", cfg.planner.rho);
    read(p, "omega", cfg.planner.omega);
    read(p, "eps1", cfg.planner.eps1);
    read(p, "eps2", cfg.planner.eps2);
    read(p, "eps3", cfg.planner.eps3);
    read(p, "max_iterations", cfg.planner.max_iterations);
    read(p, "sample_stride", cfg.planner.sample_stride);
  }
  sc.domain.validate();
  if (cfg.m_bar < 1 || cfg.m_max < cfg.m_bar) throw std::invalid_argument("need 1 <= m_bar <= m_max");
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  if (cfg.truth != "fine" && cfg.truth != "rom") throw std::invalid_argument("truth must be fine or rom");
  return cfg;
}

MissionConfig load_mission_config(const std::string& path) {
  return parse_mission_config(read_text(path));
}

FlowField make_flow(const Mesh& mesh, const FlowConfig& cfg) {
  if (cfg.kind == "file") return load_flow(cfg.file, mesh, cfg.floor);
  AnalyticFlowParams p;
  if (cfg.kind == "uniform") {
    p.kind = FlowKind::Uniform;
  } else if (cfg.kind == "channel") {
    p.kind = FlowKind::Channel;
  } else if (cfg.kind == "vortex") {
    p.kind = FlowKind::CornerVortex;
  } else {
    throw std::invalid_argument("unknown flow kind '" + cfg.kind + "'");
  }
  p.velocity = cfg.velocity;
  p.max_speed = cfg.max_speed;
  p.kappa = cfg.kappa;
  p.floor = cfg.floor;
  return analytic_flow(mesh, p);
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.domain.validate();
  Scenario sc{build_mesh(cfg.domain, cfg.nx, cfg.ny), {}, {}, {}, {}, 0};
  sc.flow = make_flow(sc.mesh, cfg.flow);
  sc.K = assemble(sc.mesh, sc.flow);
  sc.cover = decompose_convex(cfg.domain);
  if (!cfg.rom_dir.empty()) {
    sc.rom = load_reduced_model(sc.mesh, cfg.rom_dir);
    sc.snapshot_count = static_cast<std::size_t>(sc.rom.eigenvalues.size());
    return sc;
  }
  const SnapshotSet snaps = generate_snapshots(sc.mesh, sc.K, cfg.cover_nx, cfg.cover_ny);
  sc.snapshot_count = snaps.count();
  const SparseMatrix M = assemble_mass(sc.mesh);
  const Eigen::MatrixXd C = covariance(M, snaps.fields);
  sc.rom = build_reduced_model(sc.mesh, sc.K, pod_basis(C, snaps.fields, cfg.eta), cfg.eta);
  return sc;
}

TruthField truth_field(const ScenarioConfig& cfg, const std::vector<Tower>& towers,
                       std::size_t refine) {
  if (refine < 1) throw std::invalid_argument("refinement factor must be positive");
  TruthField tf;
  tf.mesh = build_mesh(cfg.domain, refine * (cfg.nx - 1) + 1, refine * (cfg.ny - 1) + 1);
  FlowField flow;
  if (cfg.flow.kind == "file") {
    // Interpolate the ingested coarse field onto the fine nodes.
    const Mesh coarse = build_mesh(cfg.domain, cfg.nx, cfg.ny);
    const FlowField cf = make_flow(coarse, cfg.flow);
    const auto n = static_cast<Eigen::Index>(tf.mesh.node_count());
    flow.velocity.resize(n, 2);
    flow.diffusivity.resize(n);
    flow.floor = cf.floor;
    for (std::size_t id = 0; id < tf.mesh.node_count(); ++id) {
      const CellWeights cw = bilinear_weights(coarse, tf.mesh.node(id));
      const auto i = static_cast<Eigen::Index>(id);
      flow.velocity.row(i).setZero();
      flow.diffusivity[i] = 0.0;
      for (std::size_t a = 0; a < 4; ++a) {
        const auto k = static_cast<Eigen::Index>(cw.nodes[a]);
        flow.velocity.row(i) += cw.w[a] * cf.velocity.row(k);
        flow.diffusivity[i] += cw.w[a] * cf.diffusivity[k];
      }
      flow.diffusivity[i] = std::max(flow.diffusivity[i], cf.floor);
    }
  } else {
    flow = make_flow(tf.mesh, cfg.flow);
  }
  const Stiffness K = assemble(tf.mesh, flow);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(tf.mesh.node_count()));
  for (const Tower& t : towers) f += load_vector(tf.mesh, t.support(), t.beta);
  tf.c = K.solve(f);
  return tf;
}

std::mt19937_64 measurement_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index & 0xffffffffu), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double measure(const Mesh& mesh, const Eigen::VectorXd& c, const Point& x, double sigma,
               std::mt19937_64& rng) {
  if (!mesh.domain().contains(x)) throw std::invalid_argument("measurement point outside the domain");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  const CellWeights cw = bilinear_weights(mesh, x);
  double v = 0.0;
  for (std::size_t a = 0; a < 4; ++a) v += cw.w[a] * c[static_cast<Eigen::Index>(cw.nodes[a])];
  if (sigma == 0.0) return v;
  std::normal_distribution<double> noise(0.0, sigma);
  return v * (1.0 + noise(rng));
}

double snr_db(const std::vector<double>& readings, const std::vector<double>& clean) {
  if (readings.size() != clean.size()) throw std::invalid_argument("reading counts differ");
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < readings.size(); ++i) {
    sig += readings[i] * readings[i];
    err += (readings[i] - clean[i]) * (readings[i] - clean[i]);
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

ErrorMetrics error_metrics(const std::vector<Tower>& truth, const std::vector<Tower>& estimate,
                           const Domain& domain, double beta_max) {
  // Cut the plane along every tower and obstacle edge; both sources are
  // constant on each resulting cell.
  std::set<double> xs{domain.bounds.lower.x(), domain.bounds.upper.x()};
  std::set<double> ys{domain.bounds.lower.y(), domain.bounds.upper.y()};
  auto add = [&](const Point& lo, const Point& hi) {
    xs.insert(std::clamp(lo.x(), domain.bounds.lower.x(), domain.bounds.upper.x()));
    xs.insert(std::clamp(hi.x(), domain.bounds.lower.x(), domain.bounds.upper.x()));
    ys.insert(std::clamp(lo.y(), domain.bounds.lower.y(), domain.bounds.upper.y()));
    ys.insert(std::clamp(hi.y(), domain.bounds.lower.y(), domain.bounds.upper.y()));
  };
  for (const Tower& t : truth) add(t.lower, t.upper);
  for (const Tower& t : estimate) add(t.lower, t.upper);
  for (const Box& o : domain.obstacles) add(o.lower, o.upper);
  const std::vector<double> vx(xs.begin(), xs.end()), vy(ys.begin(), ys.end());

  auto value = [](const std::vector<Tower>& towers, const Point& x) {
    double s = 0.0;
    for (const Tower& t : towers) s += t.beta * tower_eval(t, x);
    return s;
  };
  double true_sq = 0.0, uncovered_sq = 0.0, false_sq = 0.0;
  for (std::size_t j = 0; j + 1 < vy.size(); ++j) {
    for (std::size_t i = 0; i + 1 < vx.size(); ++i) {
      const Point mid{0.5 * (vx[i] + vx[i + 1]), 0.5 * (vy[j] + vy[j + 1])};
      if (!domain.contains(mid)) continue;
      const double area = (vx[i + 1] - vx[i]) * (vy[j + 1] - vy[j]);
      const double st = value(truth, mid), se = value(estimate, mid);
      true_sq += st * st * area;
      if (st != 0.0) {
        uncovered_sq += (st - se) * (st - se) * area;
      } else {
        false_sq += se * se * area;
      }
    }
  }
  if (!(true_sq > 0.0)) throw std::invalid_argument("true source is zero");
  ErrorMetrics m;
  const double norm = std::sqrt(true_sq);
  m.e_un = std::sqrt(uncovered_sq) / norm;
  m.e_fd = std::sqrt(false_sq) / norm;
  if (truth.size() == 1 && estimate.size() == 1) {
    const double bmax = beta_max > 0.0 ? beta_max : truth.front().beta;
    m.e_int = std::abs(truth.front().beta - estimate.front().beta) / bmax;
    m.e_loc = (truth.front().center() - estimate.front().center()).norm() / domain.characteristic_length;
  }
  return m;
}

std::vector<Point> initial_waypoints(const Domain& domain, std::size_t m) {
  if (m == 0) return {};
  const Box& b = domain.bounds;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m) * b.width() / b.height())));
  const std::size_t rows = (m + cols - 1) / cols;
  std::vector<Point> pts;
  for (std::size_t r = 0; r < rows && pts.size() < m; ++r) {
    for (std::size_t c = 0; c < cols && pts.size() < m; ++c) {
      const Point x{b.lower.x() + (static_cast<double>(c) + 0.5) * b.width() / static_cast<double>(cols),
                    b.lower.y() + (static_cast<double>(r) + 0.5) * b.height() / static_cast<double>(rows)};
      if (domain.contains(x)) pts.push_back(x);
    }
  }
  return pts;
}

MissionReport run_asi(const MissionConfig& cfg, std::uint64_t seed) {
  const Scenario sc = build_scenario(cfg.scenario);
  return run_asi(cfg, sc, seed);
}

MissionReport run_asi(const MissionConfig& cfg, const Scenario& sc, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const ReducedModel& rom = sc.rom;
  const Domain& domain = cfg.scenario.domain;
  MissionReport rep;
  rep.seed = seed;
  rep.truth = cfg.true_towers;
  rep.basis_count = static_cast<std::size_t>(rom.size());
  rep.snapshot_count = sc.snapshot_count;

  // Ground truth used to synthesize readings.
  std::function<double(const Point&)> clean_value;
  TruthField fine;
  Eigen::VectorXd rom_coeffs;
  if (cfg.truth == "fine") {
    fine = truth_field(cfg.scenario, cfg.true_towers, 2);
    clean_value = [&](const Point& x) {
      const CellWeights cw = bilinear_weights(fine.mesh, x);
      double v = 0.0;
      for (std::size_t a = 0; a < 4; ++a) v += cw.w[a] * fine.c[static_cast<Eigen::Index>(cw.nodes[a])];
      return v;
    };
  } else {
    SourceParams tp;
    tp.towers = cfg.true_towers;
    rom_coeffs = rom.solve(reduced_rhs(rom, tp));
    clean_value = [&](const Point& x) { return eval_basis(rom, x).dot(rom_coeffs); };
  }
  std::vector<double> clean;
  auto take = [&](const Point& x) {
    if (!domain.contains(x)) throw std::invalid_argument("waypoint outside the domain");
    const double c = clean_value(x);
    double y = c;
    if (cfg.sigma > 0.0) {
      auto rng = measurement_rng(seed, rep.waypoints.size());
      std::normal_distribution<double> noise(0.0, cfg.sigma);
      y = c * (1.0 + noise(rng));
    }
    rep.waypoints.push_back(x);
    rep.readings.push_back(y);
    clean.push_back(c);
  };

  const std::vector<Point> start =
      cfg.waypoints.empty() ? initial_waypoints(domain, cfg.m_bar) : cfg.waypoints;
  for (const Point& x : start) take(x);

  SourceParams p_prev;
  try {
    const SiProblem sa_prob =
        make_si_problem(rom, rep.waypoints, rep.readings, cfg.tau, {}, cfg.weight);
    SaResult sa = sa_initialize(sa_prob, sc.cover, cfg.sa);
    rep.sensitivity = sa.sensitivity;
    p_prev = sa.init;
  } catch (const NoSourceDetected&) {
    rep.status = "no_source_detected";
    rep.measurements = rep.waypoints.size();
    rep.snr = snr_db(rep.readings, clean);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }
  rep.initial = p_prev;

  for (;;) {
    const SiProblem prob =
        make_si_problem(rom, rep.waypoints, rep.readings, cfg.tau, p_prev.bounds, cfg.weight);
    const SiSolution sol = solve_si(prob, p_prev, cfg.si);
    MissionStep step;
    step.m = rep.waypoints.size();
    step.p = sol.p_hat.flatten();
    step.objective = sol.objective_value;
    step.si_iterations = sol.iterations;
    step.si_converged = sol.converged;
    step.delta_p = (step.p - p_prev.flatten()).norm();
    rep.p_hat = sol.p_hat;
    if (step.delta_p <= cfg.epsilon) {
      rep.converged = true;
      rep.steps.push_back(std::move(step));
      break;
    }
    if (rep.waypoints.size() >= cfg.m_max) {
      rep.steps.push_back(std::move(step));
      break;
    }
    const PlannerState st = make_planner_state(rom, sol.p_hat, rep.waypoints, cfg.planner);
    const PlanResult plan = plan_next(st, sc.cover);
    step.plan = plan;
    rep.steps.push_back(std::move(step));
    take(plan.x);
    p_prev = sol.p_hat;
  }
  rep.status = rep.converged ? "converged" : "budget_exhausted";
  rep.measurements = rep.waypoints.size();
  rep.snr = snr_db(rep.readings, clean);
  rep.metrics = error_metrics(cfg.true_towers, rep.p_hat.towers, domain, cfg.beta_max);
  rep.estimate_field = rom.psi * rom.solve(reduced_rhs(rom, rep.p_hat));
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

namespace {

ojson number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::string report_json(const MissionReport& r) {
  ojson o;
  o["status"] = r.status;
  o["seed"] = r.seed;
  o["converged"] = r.converged;
  o["measurements"] = r.measurements;
  o["steps"] = r.steps.size();
  o["basis_count"] = r.basis_count;
  o["snapshot_count"] = r.snapshot_count;
  o["snr_db"] = number_or_null(r.snr);
  ojson truth = ojson::array();
  for (const Tower& t : r.truth) truth.push_back(tower_json(t));
  o["true_source"] = truth;
  auto towers = [](const SourceParams& p) {
    ojson a = ojson::array();
    for (std::size_t j = 0; j < p.size(); ++j) {
      ojson t = tower_json(p.towers[j]);
      t["bounds"] = box_json(p.bounds[j]);
      a.push_back(t);
    }
    return a;
  };
  o["initial_estimate"] = towers(r.initial);
  o["p_hat"] = towers(r.p_hat);
  if (r.metrics) {
    ojson m;
    m["e_un"] = r.metrics->e_un;
    m["e_fd"] = r.metrics->e_fd;
    m["e_int"] = r.metrics->e_int ? ojson(*r.metrics->e_int) : ojson(nullptr);
    m["e_loc"] = r.metrics->e_loc ? ojson(*r.metrics->e_loc) : ojson(nullptr);
    o["metrics"] = m;
  } else {
    o["metrics"] = nullptr;
  }
  ojson steps = ojson::array();
  for (const MissionStep& s : r.steps) {
    ojson j;
    j["m"] = s.m;
    j["p"] = std::vector<double>(s.p.data(), s.p.data() + s.p.size());
    j["objective"] = s.objective;
    j["si_iterations"] = s.si_iterations;
    j["si_converged"] = s.si_converged;
    j["delta_p"] = s.delta_p;
    if (s.plan) {
      ojson pl;
      pl["x"] = point_json(s.plan->x);
      pl["lambda_min"] = s.plan->lambda_min;
      pl["x0"] = point_json(s.plan->x0);
      pl["g0"] = s.plan->g0;
      pl["ssdp_iterations"] = s.plan->iterations;
      pl["converged"] = s.plan->converged;
      pl["flagged"] = s.plan->flagged;
      pl["non_improving"] = s.plan->non_improving;
      j["plan"] = pl;
    }
    steps.push_back(j);
  }
  o["trace"] = steps;
  ojson wps = ojson::array();
  for (std::size_t i = 0; i < r.waypoints.size(); ++i) {
    ojson w;
    w["x"] = point_json(r.waypoints[i]);
    w["y"] = r.readings[i];
    wps.push_back(w);
  }
  o["waypoints"] = wps;
  return o.dump(2) + "\n";
}

std::string trace_csv(const MissionReport& r) {
  std::string out = "step,m,objective,si_iterations,delta_p,next_x1,next_x2,lambda_min,flagged";
  const std::size_t q = r.steps.empty() ? 0 : static_cast<std::size_t>(r.steps.front().p.size());
  for (std::size_t k = 0; k < q; ++k) out += ",p" + std::to_string(k);
  out += '\n';
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const MissionStep& s = r.steps[i];
    out += std::to_string(i) + ',' + std::to_string(s.m) + ',' + format_double(s.objective) + ',' +
           std::to_string(s.si_iterations) + ',' + format_double(s.delta_p) + ',';
    if (s.plan) {
      out += format_double(s.plan->x.x()) + ',' + format_double(s.plan->x.y()) + ',' +
             format_double(s.plan->lambda_min) + ',' + (s.plan->flagged ? "1" : "0");
    } else {
      out += ",,,";
    }
    for (Eigen::Index k = 0; k < s.p.size(); ++k) out += ',' + format_double(s.p[k]);
    out += '\n';
  }
  return out;
}

void write_report(const MissionReport& r, const Mesh& mesh, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/report.json", report_json(r));
  write_text(dir + "/trace.csv", trace_csv(r));
  ojson timing;
  timing["wall_seconds"] = r.wall_seconds;
  write_text(dir + "/timing.json", timing.dump(2) + "\n");
  auto dump = [&](const std::string& name, const Eigen::VectorXd& field) {
    if (static_cast<std::size_t>(field.size()) != mesh.node_count()) return;
    std::string text = "node_id,x1,x2,value\n";
    for (std::size_t id = 0; id < mesh.node_count(); ++id) {
      const Point x = mesh.node(id);
      text += std::to_string(id) + ',' + format_double(x.x()) + ',' + format_double(x.y()) + ',' +
              format_double(field[static_cast<Eigen::Index>(id)]) + '\n';
    }
    write_text(dir + "/" + name, text);
  };
  std::string meas = "x1,x2,y\n";
  for (std::size_t i = 0; i < r.waypoints.size(); ++i) {
    meas += format_double(r.waypoints[i].x()) + ',' + format_double(r.waypoints[i].y()) + ',' +
            format_double(r.readings[i]) + '\n';
  }
  write_text(dir + "/measurements.csv", meas);
  dump("field_estimate.csv", r.estimate_field);
  dump("field_sensitivity.csv", r.sensitivity);
}

}  // namespace asi
