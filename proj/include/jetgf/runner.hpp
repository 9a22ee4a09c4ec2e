#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jetgf/expr.hpp"
#include "jetgf/flow.hpp"
#include "jetgf/genfun.hpp"
#include "jetgf/legendrian.hpp"
#include "jetgf/types.hpp"

// Configuration loading and the CLI subcommands.  Every command takes a JSON
// config, an output directory, a seed, and a worker count, and returns the
// process exit code:
//   0  all checks passed / outputs written
//   1  a validation check failed its tolerance
//   2  unusable configuration (bad JSON, unknown field, bad expression, ...)
//   3  numerical failure (flow blow-up, Newton divergence, ...)
// Reports embed the resolved config and the seed; two runs with identical
// config and seed produce byte-identical files regardless of --jobs.

namespace jetgf {
namespace runner {

struct ToleranceSet {
  double generation_gap = 1e-6;
  double gradient_rel = 1e-3;
  double telescoping_rel = 1e-12;
  double qi_ratio = 2.0;
  double max_condition = 1e10;
  double carnot = 1e-6;
  double conformal_identity = 1e-6;
  double gauge_rel = 1e-4;
  double action_vanishing = 1e-6;
  double first_variation = 1e-3;
  double spectrum_value = 1e-6;
  double spectrum_p = 1e-10;
};

struct ProbeSettings {
  int rays = 32;
  std::vector<double> radii = {1.0, 10.0, 100.0};
};

struct SampleCounts {
  int conformal = 50;
  int gauge_paths = 10;
  int carnot_trajectories = 10;
  int action_trajectories = 10;
  int first_variation_paths = 3;
  int path_samples = 300;
  int gradient_points = 10;
  int telescoping_evaluations = 200;
};

struct OutputNames {
  std::string trajectory = "trajectory.csv";
  std::string front = "front.csv";
  std::string spectrum = "spectrum.json";
  std::string genfun_report = "genfun_report.json";
  std::string validate_report = "validate_report.json";
};

struct RunConfig {
  int dim = 1;
  std::string hamiltonian;
  std::optional<std::pair<double, double>> compact_support;  // (R0, w)
  int segments = 16;                                         // partition size N
  genfun::CutoffParams cutoff;
  flow::FlowSpec flow_spec;
  double t0 = 0.0;
  double t1 = 1.0;
  std::optional<ContactPoint> initial_point;  // defaults to the origin section point
  legendrian::GridSpec grid;                  // defaults to [-3, 3], 101 nodes per axis
  ToleranceSet tolerances;
  ProbeSettings probe;
  SampleCounts samples;
  OutputNames output;
};

// Parses and validates; throws ConfigError with a field path on any problem.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// The configured Hamiltonian, compactified when compact_support is set.
HamiltonianExpr config_hamiltonian(const RunConfig& cfg);

int cmd_flow(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed, int jobs);
int cmd_front(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed, int jobs);
int cmd_genfun_check(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed,
                     int jobs);
int cmd_validate(const RunConfig& cfg, const std::string& out_dir, std::uint64_t seed, int jobs);

// Shortest decimal rendering that round-trips to the same double; used by all
// CSV and JSON output.
std::string format_double(double x);

}  // namespace runner
}  // namespace jetgf
