#include "jetgf/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "jetgf/action.hpp"
#include "jetgf/contact.hpp"
#include "jetgf/errors.hpp"
#include "jetgf/parallel.hpp"
#include "jetgf/rng.hpp"

namespace jetgf {
namespace runner {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void check_keys(const Json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(path + "." + it.key(), "unknown field");
  }
}

const Json& member(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec as_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<int>(i)) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<int> as_int_list(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of integers");
  std::vector<int> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[i] = as_int(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<double> as_double_list(const Json& j, const std::string& path) {
  const Vec v = as_vector(j, path);
  return std::vector<double>(v.data(), v.data() + v.size());
}

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json config_to_json(const RunConfig& cfg) {
  Json j;
  j["dim"] = cfg.dim;
  j["hamiltonian"] = cfg.hamiltonian;
  if (cfg.compact_support) {
    Json cs;
    cs["R0"] = cfg.compact_support->first;
    cs["w"] = cfg.compact_support->second;
    j["compact_support"] = cs;
  }
  j["segments"] = cfg.segments;
  {
    Json c;
    c["delta"] = cfg.cutoff.delta;
    c["eps0"] = cfg.cutoff.eps0;
    j["cutoff"] = c;
  }
  {
    Json f;
    f["steps_per_unit_time"] = cfg.flow_spec.steps_per_unit_time;
    j["flow"] = f;
  }
  j["t0"] = cfg.t0;
  j["t1"] = cfg.t1;
  if (cfg.initial_point) {
    Json p;
    p["q"] = vec_to_json(cfg.initial_point->q);
    p["p"] = vec_to_json(cfg.initial_point->p);
    p["z"] = cfg.initial_point->z;
    j["initial_point"] = p;
  }
  {
    Json g;
    g["min"] = vec_to_json(cfg.grid.min);
    g["max"] = vec_to_json(cfg.grid.max);
    g["count"] = cfg.grid.count;
    j["grid"] = g;
  }
  {
    const ToleranceSet& t = cfg.tolerances;
    Json o;
    o["generation_gap"] = t.generation_gap;
    o["gradient_rel"] = t.gradient_rel;
    o["telescoping_rel"] = t.telescoping_rel;
    o["qi_ratio"] = t.qi_ratio;
    o["max_condition"] = t.max_condition;
    o["carnot"] = t.carnot;
    o["conformal_identity"] = t.conformal_identity;
    o["gauge_rel"] = t.gauge_rel;
    o["action_vanishing"] = t.action_vanishing;
    o["first_variation"] = t.first_variation;
    o["spectrum_value"] = t.spectrum_value;
    o["spectrum_p"] = t.spectrum_p;
    j["tolerances"] = o;
  }
  {
    Json p;
    p["rays"] = cfg.probe.rays;
    p["radii"] = cfg.probe.radii;
    j["probe"] = p;
  }
  {
    const SampleCounts& s = cfg.samples;
    Json o;
    o["conformal"] = s.conformal;
    o["gauge_paths"] = s.gauge_paths;
    o["carnot_trajectories"] = s.carnot_trajectories;
    o["action_trajectories"] = s.action_trajectories;
    o["first_variation_paths"] = s.first_variation_paths;
    o["path_samples"] = s.path_samples;
    o["gradient_points"] = s.gradient_points;
    o["telescoping_evaluations"] = s.telescoping_evaluations;
    j["samples"] = o;
  }
  {
    const OutputNames& o = cfg.output;
    Json n;
    n["trajectory"] = o.trajectory;
    n["front"] = o.front;
    n["spectrum"] = o.spectrum;
    n["genfun_report"] = o.genfun_report;
    n["validate_report"] = o.validate_report;
    j["output"] = n;
  }
  return j;
}

void parse_tolerances(const Json& j, const std::string& path, ToleranceSet& t) {
  member(j, path);
  check_keys(j, path,
             {"generation_gap", "gradient_rel", "telescoping_rel", "qi_ratio", "max_condition",
              "carnot", "conformal_identity", "gauge_rel", "action_vanishing", "first_variation",
              "spectrum_value", "spectrum_p"});
  auto num = [&](const char* key, double& slot) {
    if (j.contains(key)) {
      slot = as_number(j[key], path + "." + key);
      if (!(slot > 0.0)) fail(path + "." + key, "must be positive");
    }
  };
  num("generation_gap", t.generation_gap);
  num("gradient_rel", t.gradient_rel);
  num("telescoping_rel", t.telescoping_rel);
  num("qi_ratio", t.qi_ratio);
  num("max_condition", t.max_condition);
  num("carnot", t.carnot);
  num("conformal_identity", t.conformal_identity);
  num("gauge_rel", t.gauge_rel);
  num("action_vanishing", t.action_vanishing);
  num("first_variation", t.first_variation);
  num("spectrum_value", t.spectrum_value);
  num("spectrum_p", t.spectrum_p);
}

void parse_samples(const Json& j, const std::string& path, SampleCounts& s) {
  member(j, path);
  check_keys(j, path,
             {"conformal", "gauge_paths", "carnot_trajectories", "action_trajectories",
              "first_variation_paths", "path_samples", "gradient_points",
              "telescoping_evaluations"});
  auto count = [&](const char* key, int& slot, int lo) {
    if (j.contains(key)) {
      slot = as_int(j[key], path + "." + key);
      if (slot < lo) fail(path + "." + key, "must be at least " + std::to_string(lo));
    }
  };
  count("conformal", s.conformal, 1);
  count("gauge_paths", s.gauge_paths, 1);
  count("carnot_trajectories", s.carnot_trajectories, 1);
  count("action_trajectories", s.action_trajectories, 1);
  count("first_variation_paths", s.first_variation_paths, 1);
  count("path_samples", s.path_samples, 8);
  count("gradient_points", s.gradient_points, 1);
  count("telescoping_evaluations", s.telescoping_evaluations, 1);
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  member(j, "config");
  check_keys(j, "config",
             {"dim", "hamiltonian", "compact_support", "segments", "cutoff", "flow", "t0", "t1",
              "initial_point", "grid", "tolerances", "probe", "samples", "output"});

  RunConfig cfg;
  if (j.contains("dim")) {
    cfg.dim = as_int(j["dim"], "config.dim");
    if (cfg.dim < 1) fail("config.dim", "must be at least 1");
  }
  if (!j.contains("hamiltonian")) fail("config.hamiltonian", "required field missing");
  cfg.hamiltonian = as_string(j["hamiltonian"], "config.hamiltonian");

  if (j.contains("compact_support")) {
    const Json& cs = j["compact_support"];
    member(cs, "config.compact_support");
    check_keys(cs, "config.compact_support", {"R0", "w"});
    if (!cs.contains("R0") || !cs.contains("w"))
      fail("config.compact_support", "requires both R0 and w");
    const double R0 = as_number(cs["R0"], "config.compact_support.R0");
    const double w = as_number(cs["w"], "config.compact_support.w");
    if (!(R0 > 0.0)) fail("config.compact_support.R0", "must be positive");
    if (!(w > 0.0)) fail("config.compact_support.w", "must be positive");
    cfg.compact_support = {R0, w};
  }

  if (j.contains("segments")) {
    cfg.segments = as_int(j["segments"], "config.segments");
    if (cfg.segments < 2) fail("config.segments", "must be at least 2");
  }

  if (j.contains("cutoff")) {
    const Json& c = j["cutoff"];
    member(c, "config.cutoff");
    check_keys(c, "config.cutoff", {"delta", "eps0"});
    if (c.contains("delta")) cfg.cutoff.delta = as_number(c["delta"], "config.cutoff.delta");
    if (c.contains("eps0")) cfg.cutoff.eps0 = as_number(c["eps0"], "config.cutoff.eps0");
  }
  try {
    genfun::validate(cfg.cutoff);
  } catch (const ConfigError& e) {
    fail("config.cutoff", e.what());
  }

  if (j.contains("flow")) {
    const Json& f = j["flow"];
    member(f, "config.flow");
    check_keys(f, "config.flow", {"steps_per_unit_time"});
    if (f.contains("steps_per_unit_time"))
      cfg.flow_spec.steps_per_unit_time =
          as_int(f["steps_per_unit_time"], "config.flow.steps_per_unit_time");
  }
  try {
    flow::validate(cfg.flow_spec);
  } catch (const ConfigError& e) {
    fail("config.flow", e.what());
  }

  if (j.contains("t0")) cfg.t0 = as_number(j["t0"], "config.t0");
  if (j.contains("t1")) cfg.t1 = as_number(j["t1"], "config.t1");
  if (cfg.t0 == cfg.t1) fail("config.t1", "t0 and t1 must differ");

  if (j.contains("initial_point")) {
    const Json& p = j["initial_point"];
    member(p, "config.initial_point");
    check_keys(p, "config.initial_point", {"q", "p", "z"});
    if (!p.contains("q") || !p.contains("p"))
      fail("config.initial_point", "requires q and p arrays");
    const Vec q = as_vector(p["q"], "config.initial_point.q");
    const Vec pp = as_vector(p["p"], "config.initial_point.p");
    const double z = p.contains("z") ? as_number(p["z"], "config.initial_point.z") : 0.0;
    if (q.size() != cfg.dim) fail("config.initial_point.q", "dimension mismatch");
    if (pp.size() != cfg.dim) fail("config.initial_point.p", "dimension mismatch");
    cfg.initial_point = ContactPoint(q, pp, z);
  }

  cfg.grid.min = Vec::Constant(cfg.dim, -3.0);
  cfg.grid.max = Vec::Constant(cfg.dim, 3.0);
  cfg.grid.count.assign(cfg.dim, 101);
  if (j.contains("grid")) {
    const Json& g = j["grid"];
    member(g, "config.grid");
    check_keys(g, "config.grid", {"min", "max", "count"});
    if (!g.contains("min") || !g.contains("max") || !g.contains("count"))
      fail("config.grid", "requires min, max and count");
    cfg.grid.min = as_vector(g["min"], "config.grid.min");
    cfg.grid.max = as_vector(g["max"], "config.grid.max");
    cfg.grid.count = as_int_list(g["count"], "config.grid.count");
  }
  if (cfg.grid.min.size() != cfg.dim) fail("config.grid.min", "dimension mismatch");
  try {
    legendrian::validate(cfg.grid);
  } catch (const ConfigError& e) {
    fail("config.grid", e.what());
  }

  if (j.contains("tolerances")) parse_tolerances(j["tolerances"], "config.tolerances", cfg.tolerances);

  if (j.contains("probe")) {
    const Json& p = j["probe"];
    member(p, "config.probe");
    check_keys(p, "config.probe", {"rays", "radii"});
    if (p.contains("rays")) {
      cfg.probe.rays = as_int(p["rays"], "config.probe.rays");
      if (cfg.probe.rays < 1) fail("config.probe.rays", "must be at least 1");
    }
    if (p.contains("radii")) {
      cfg.probe.radii = as_double_list(p["radii"], "config.probe.radii");
      if (cfg.probe.radii.size() < 2) fail("config.probe.radii", "need at least two radii");
      for (double r : cfg.probe.radii)
        if (!(r > 0.0)) fail("config.probe.radii", "radii must be positive");
    }
  }

  if (j.contains("samples")) parse_samples(j["samples"], "config.samples", cfg.samples);

  if (j.contains("output")) {
    const Json& o = j["output"];
    member(o, "config.output");
    check_keys(o, "config.output",
               {"trajectory", "front", "spectrum", "genfun_report", "validate_report"});
    auto name = [&](const char* key, std::string& slot) {
      if (o.contains(key)) {
        slot = as_string(o[key], std::string("config.output.") + key);
        if (slot.empty()) fail(std::string("config.output.") + key, "must not be empty");
      }
    };
    name("trajectory", cfg.output.trajectory);
    name("front", cfg.output.front);
    name("spectrum", cfg.output.spectrum);
    name("genfun_report", cfg.output.genfun_report);
    name("validate_report", cfg.output.validate_report);
  }

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

HamiltonianExpr config_hamiltonian(const RunConfig& cfg) {
  HamiltonianExpr h = parse_hamiltonian(cfg.hamiltonian, cfg.dim);
  if (cfg.compact_support)
    h = compactify(h, cfg.compact_support->first, cfg.compact_support->second);
  return h;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::string& out_dir, const std::string& name) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path file = std::filesystem::path(out_dir) / name;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write output file: " + file.string());
  return out;
}

void write_json(const std::string& out_dir, const std::string& name, const Json& j) {
  std::ofstream out = open_output(out_dir, name);
  out << j.dump(2) << "\n";
}

// Random sampled path with coordinates drawn from a small trigonometric
// family; index identifies the path, lanes cover coordinate x basis function.
action::Path random_fourier_path(const CounterRng& rng, std::uint64_t index, int n, int m) {
  const int coords = 2 * n + 1;
  std::vector<ContactPoint> samples;
  samples.reserve(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = static_cast<double>(i) / m;
    const double basis[5] = {1.0, t, std::sin(std::numbers::pi * t),
                             std::cos(std::numbers::pi * t),
                             std::sin(2.0 * std::numbers::pi * t)};
    Vec vals(coords);
    for (int cidx = 0; cidx < coords; ++cidx) {
      double acc = 0.0;
      for (int b = 0; b < 5; ++b)
        acc += rng.uniform_in(index, static_cast<std::uint64_t>(cidx) * 5 + b, -0.3, 0.3) *
               basis[b];
      vals(cidx) = acc;
    }
    samples.emplace_back(vals.head(n), vals.segment(n, n), vals(2 * n));
  }
  return action::make_uniform_path(std::move(samples));
}

ContactPoint random_point(const CounterRng& rng, std::uint64_t index, int n, double box,
                          double zbox) {
  Vec q(n), p(n);
  for (int i = 0; i < n; ++i) {
    q(i) = rng.uniform_in(index, i, -box, box);
    p(i) = rng.uniform_in(index, n + i, -box, box);
  }
  return ContactPoint(q, p, rng.uniform_in(index, 2 * n, -zbox, zbox));
}

struct CheckCollector {
  Json checks = Json::object();
  std::vector<std::string> failed;

  void add(const std::string& name, Json body, bool pass) {
    body["pass"] = pass;
    checks[name] = std::move(body);
    if (!pass) failed.push_back(name);
  }
};

int finish_report(const RunConfig& cfg, const std::string& out_dir, const std::string& file,
                  std::uint64_t seed, CheckCollector& col) {
  Json report;
  report["config"] = config_to_json(cfg);
  report["seed"] = seed;
  report["checks"] = col.checks;
  report["pass"] = col.failed.empty();
  write_json(out_dir, file, report);
  if (!col.failed.empty()) {
    for (const std::string& name : col.failed) std::cerr << "check failed: " << name << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int cmd_flow(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed, int jobs) {
  (void)seed;
  (void)jobs;
  const HamiltonianExpr h = config_hamiltonian(cfg);
  const ContactPoint y0 = cfg.initial_point ? *cfg.initial_point : ContactPoint::zero(cfg.dim);
  const flow::Trajectory traj = flow::integrate(h, y0, cfg.t0, cfg.t1, cfg.flow_spec);

  std::ofstream out = open_output(out_dir, cfg.output.trajectory);
  out << "t";
  for (int i = 1; i <= cfg.dim; ++i) out << ",q" << i;
  for (int i = 1; i <= cfg.dim; ++i) out << ",p" << i;
  out << ",z,g\r\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    out << format_double(traj.t[k]);
    for (int i = 0; i < cfg.dim; ++i) out << "," << format_double(traj.y[k].q(i));
    for (int i = 0; i < cfg.dim; ++i) out << "," << format_double(traj.y[k].p(i));
    out << "," << format_double(traj.y[k].z) << "," << format_double(traj.g[k]) << "\r\n";
  }
  return 0;
}

int cmd_front(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed, int jobs) {
  const HamiltonianExpr h = config_hamiltonian(cfg);
  const auto samples = legendrian::sample_legendrian(h, cfg.grid, cfg.flow_spec, jobs);
  const auto front = legendrian::wave_front(samples);
  const auto spec_rep =
      legendrian::spectrum(h, cfg.grid, cfg.flow_spec, cfg.tolerances.spectrum_p);

  {
    std::ofstream out = open_output(out_dir, cfg.output.front);
    for (int i = 1; i <= cfg.dim; ++i) out << (i == 1 ? "" : ",") << "q" << i;
    out << ",z\r\n";
    for (const auto& fp : front) {
      for (int i = 0; i < cfg.dim; ++i) out << (i == 0 ? "" : ",") << format_double(fp.q(i));
      out << "," << format_double(fp.z) << "\r\n";
    }
  }

  Json sj;
  sj["config"] = config_to_json(cfg);
  sj["seed"] = seed;
  Json roots = Json::array();
  for (const auto& r : spec_rep.roots) {
    Json jr;
    jr["q0"] = vec_to_json(r.q0);
    jr["value"] = r.value;
    jr["degenerate"] = r.degenerate;
    roots.push_back(std::move(jr));
  }
  sj["roots"] = roots;
  sj["values"] = spec_rep.values;
  write_json(out_dir, cfg.output.spectrum, sj);

  const std::size_t ok =
      static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                             [](const auto& s) { return s.ok; }));
  return ok * 100 >= samples.size() * 99 ? 0 : 3;
}

int cmd_genfun_check(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed,
                     int jobs) {
  const HamiltonianExpr h = config_hamiltonian(cfg);
  const genfun::Partition part(cfg.segments);
  const genfun::CutoffParams& c = cfg.cutoff;
  const flow::FlowSpec& spec = cfg.flow_spec;
  const ToleranceSet& tol = cfg.tolerances;
  const int n = cfg.dim;
  const int rows = part.N - 1;
  const std::vector<Vec> grid = legendrian::grid_nodes(cfg.grid);

  CheckCollector col;

  {
    const genfun::GenerationReport gen = genfun::generation_check(h, grid, part, c, spec, jobs);
    Json body;
    body["points"] = static_cast<int>(gen.points.size());
    body["failures"] = gen.failures;
    body["max_gap"] = gen.max_gap;
    col.add("generation", std::move(body),
            gen.failures == 0 && gen.max_gap <= tol.generation_gap);
  }

  auto random_fiber = [&](const CounterRng& rng, std::uint64_t index, double amp) {
    genfun::FiberPoint e;
    e.q0.resize(n);
    for (int i = 0; i < n; ++i)
      e.q0(i) = rng.uniform_in(index, i, cfg.grid.min(i), cfg.grid.max(i));
    e.X.resize(rows, n);
    e.P.resize(rows, n);
    for (int k = 0; k < rows; ++k)
      for (int i = 0; i < n; ++i) {
        e.X(k, i) = rng.uniform_in(index, n + k * n + i, -amp, amp);
        e.P(k, i) = rng.uniform_in(index, n + rows * n + k * n + i, -amp, amp);
      }
    return e;
  };

  {
    const CounterRng rng(seed, "gradient-points");
    std::vector<double> rel(cfg.samples.gradient_points, 0.0);
    parallel_for(jobs, rel.size(), [&](std::size_t i) {
      const genfun::FiberPoint e = random_fiber(rng, i, 0.5);
      const Vec fd = genfun::gradient_fd(h, e, part, c, spec);
      const genfun::BrokenTrajectory bt = genfun::build_broken_trajectory(h, e, part, c, spec);
      const genfun::VerticalGradient vg = genfun::vertical_gradient_analytic(bt);
      const genfun::CoordinateJacobianReport rep =
          genfun::coordinate_jacobian(h, e, part, c, spec);
      Vec gm((2 * part.N - 1) * n);
      for (int k = 0; k < rows; ++k) {
        gm.segment(2 * k * n, n) = vg.dS_dq_minus.row(k).transpose();
        gm.segment((2 * k + 1) * n, n) = vg.dS_dp_tilde.row(k).transpose();
      }
      gm.tail(n) = vg.dS_dq_base;
      const Vec pred = rep.J.transpose() * gm;
      rel[i] = (fd - pred).lpNorm<Eigen::Infinity>() / (1.0 + fd.lpNorm<Eigen::Infinity>());
    });
    const double worst = rel.empty() ? 0.0 : *std::max_element(rel.begin(), rel.end());
    Json body;
    body["points"] = cfg.samples.gradient_points;
    body["max_rel_error"] = worst;
    col.add("gradient", std::move(body), worst <= tol.gradient_rel);
  }

  {
    const CounterRng rng(seed, "telescoping");
    std::vector<double> rel(cfg.samples.telescoping_evaluations, 0.0);
    parallel_for(jobs, rel.size(), [&](std::size_t i) {
      const genfun::FiberPoint e = random_fiber(rng, i, 1.0);
      const genfun::SEvalDetail d = genfun::s_eval_detail(h, e, part, c, spec);
      rel[i] = std::abs(d.value - d.sum_formula) / d.scale;
    });
    const double worst = rel.empty() ? 0.0 : *std::max_element(rel.begin(), rel.end());
    Json body;
    body["evaluations"] = cfg.samples.telescoping_evaluations;
    body["max_rel_violation"] = worst;
    col.add("telescoping", std::move(body), worst <= tol.telescoping_rel);
  }

  {
    const Vec q0c = 0.5 * (cfg.grid.min + cfg.grid.max);
    const genfun::QiProbeReport probe = genfun::almost_qi_probe(
        h, q0c, part, c, spec, cfg.probe.rays, cfg.probe.radii, seed, tol.qi_ratio);
    const std::size_t mid = probe.radii.size() / 2;
    const double control_ratio =
        probe.sup_fiber_gradient_q[mid] > 0.0
            ? probe.sup_fiber_gradient_q.back() / probe.sup_fiber_gradient_q[mid]
            : 0.0;
    Json body;
    body["radii"] = probe.radii;
    body["sup_fiber_gradient"] = probe.sup_fiber_gradient;
    body["ratio_largest_to_median"] = probe.ratio_largest_to_median;
    body["control_ratio"] = control_ratio;
    col.add("quadratic_at_infinity", std::move(body),
            probe.bounded && control_ratio > tol.qi_ratio);
  }

  {
    const CounterRng rng(seed, "jacobian-point");
    genfun::FiberPoint e = random_fiber(rng, 0, 0.5);
    e.q0 = 0.5 * (cfg.grid.min + cfg.grid.max);
    const genfun::CoordinateJacobianReport rep = genfun::coordinate_jacobian(h, e, part, c, spec);
    Json body;
    body["det"] = rep.det;
    body["condition"] = rep.condition;
    body["structure_violation"] = rep.structure_violation;
    col.add("coordinate_jacobian", std::move(body),
            std::isfinite(rep.condition) && rep.det != 0.0 && rep.condition <= tol.max_condition);
  }

  return finish_report(cfg, out_dir, cfg.output.genfun_report, seed, col);
}

int cmd_validate(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed, int jobs) {
  const HamiltonianExpr h = config_hamiltonian(cfg);
  const flow::FlowSpec& spec = cfg.flow_spec;
  const ToleranceSet& tol = cfg.tolerances;
  const SampleCounts& sc = cfg.samples;
  const int n = cfg.dim;

  CheckCollector col;

  {
    const CounterRng rng(seed, "conformal");
    std::vector<double> res(sc.conformal, 0.0);
    parallel_for(jobs, res.size(), [&](std::size_t i) {
      const ContactPoint y = random_point(rng, i, n, 2.0, 1.0);
      Vec dq(n), dp(n);
      for (int k = 0; k < n; ++k) {
        dq(k) = rng.normal(i, 2 * n + 1 + k);
        dp(k) = rng.normal(i, 3 * n + 1 + k);
      }
      const TangentVector v(dq, dp, rng.normal(i, 4 * n + 1));
      const double t = rng.uniform_in(i, 8 * n + 4, 0.05, 1.0);
      res[i] = flow::conformal_identity_check(h, t, y, v, spec);
    });
    const double worst = *std::max_element(res.begin(), res.end());
    Json body;
    body["samples"] = sc.conformal;
    body["max_residual"] = worst;
    col.add("conformal_identity", std::move(body), worst <= tol.conformal_identity);
  }

  {
    const CounterRng rng(seed, "gauge");
    std::vector<double> rel(sc.gauge_paths, 0.0);
    parallel_for(jobs, rel.size(), [&](std::size_t i) {
      const action::Path gamma = random_fourier_path(rng, i, n, sc.path_samples);
      const double ah = action::action_ah(h, gamma, spec);
      const double a0 = action::action_a0(action::gauge_transform(h, gamma, spec));
      rel[i] = std::abs(ah - a0) / (1.0 + std::abs(a0));
    });
    const double worst = *std::max_element(rel.begin(), rel.end());
    Json body;
    body["paths"] = sc.gauge_paths;
    body["max_rel_error"] = worst;
    col.add("gauge_invariance", std::move(body), worst <= tol.gauge_rel);
  }

  {
    const CounterRng rng(seed, "carnot");
    std::vector<double> res(sc.carnot_trajectories, 0.0);
    parallel_for(jobs, res.size(), [&](std::size_t i) {
      const ContactPoint y0 = random_point(rng, i, n, 1.0, 1.0);
      const action::Path path = action::hamiltonian_trajectory_path(h, y0, sc.path_samples);
      res[i] = action::carnot_residual(h, path);
    });
    const double worst = *std::max_element(res.begin(), res.end());
    Json body;
    body["trajectories"] = sc.carnot_trajectories;
    body["max_residual"] = worst;
    col.add("carnot_residual", std::move(body), worst <= tol.carnot);
  }

  {
    const CounterRng rng(seed, "action");
    std::vector<double> rel(sc.action_trajectories, 0.0);
    parallel_for(jobs, rel.size(), [&](std::size_t i) {
      const ContactPoint y0 = random_point(rng, i, n, 1.0, 1.0);
      const action::Path path = action::hamiltonian_trajectory_path(h, y0, sc.path_samples);
      const double a = action::action_ah(h, path, spec);
      rel[i] = std::abs(a) / (1.0 + std::abs(path.y.back().z));
    });
    const double worst = *std::max_element(rel.begin(), rel.end());
    Json body;
    body["trajectories"] = sc.action_trajectories;
    body["max_rel_error"] = worst;
    col.add("action_vanishing", std::move(body), worst <= tol.action_vanishing);
  }

  {
    const CounterRng gamma_rng(seed, "variation-gamma");
    const CounterRng eta_rng(seed, "variation-eta");
    std::vector<double> rel(sc.first_variation_paths, 0.0);
    parallel_for(jobs, rel.size(), [&](std::size_t i) {
      const action::Path gamma = random_fourier_path(gamma_rng, i, n, sc.path_samples);
      const action::Path eta = random_fourier_path(eta_rng, i, n, sc.path_samples);
      const action::FirstVariationResult r = action::first_variation_check(h, gamma, eta, spec);
      rel[i] = std::abs(r.fd - r.formula) / (1.0 + std::abs(r.fd));
    });
    const double worst = *std::max_element(rel.begin(), rel.end());
    Json body;
    body["paths"] = sc.first_variation_paths;
    body["max_rel_error"] = worst;
    col.add("first_variation", std::move(body), worst <= tol.first_variation);
  }

  return finish_report(cfg, out_dir, cfg.output.validate_report, seed, col);
}

}  // namespace runner
}  // namespace jetgf
