#pragma once

// Run configuration for the dimer CLI: JSON document -> validated RunConfig.
// Every issue carries the dotted key path and, when known, the source line.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dimer/dimer.h"

namespace cli {

struct Issue {
  std::string path;
  int line = 0;  ///< 0 when the key is absent from the document
  std::string message;

  std::string render(const std::string& file) const;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  /// Grid points min, min + step, ... <= max, rounded to 12 decimals.
  std::vector<double> points() const;
};

struct RunConfig {
  std::string command;
  uint64_t seed = 0;
  std::string output;

  double J = 1.0;
  double gamma = 0.0;
  double h = 0.0;

  dimer_flow_kind flow = DIMER_FLOW_ANGULAR;
  dimer_bias_kind bias = DIMER_BIAS_LINEAR;
  double s = 0.0;

  dimer_field_schedule schedule{DIMER_SCHEDULE_LINEAR, -20.0, 20.0, 200.0, 4.0};
  dimer_integrator_config integrator = dimer_integrator_config_default();
  dimer_sde_config sde = dimer_sde_config_default();
  std::size_t trajectories = 1000;

  std::optional<dimer_vec3> start;
  bool radial = false;
  double t1 = 50.0;
  std::size_t points = 501;

  dimer_chart chart = DIMER_CHART_STEREOGRAPHIC;
  std::size_t resolution = 41;
  double extent = 2.0;

  Range s_grid{0.0, 2.5, 0.02};
  Range gamma_grid{0.0, 5.0, 0.1};
  dimer_free_energy_options free_energy = dimer_free_energy_options_default();

  bool noisy = false;
  double sweep_dt = 1e-3;
  std::size_t output_points = 1000;
  uint64_t trajectory_index = 0;

  std::size_t calibration_samples = 2000;
  double calibration_threshold = 1e-10;
};

extern const std::vector<std::string> kCommands;

struct ParseResult {
  RunConfig config;
  std::vector<Issue> issues;
  bool ok() const { return issues.empty(); }
};

/// Parses and validates. `command` (from the CLI) overrides a missing
/// "command" key and must agree with a present one.
ParseResult parse_config(const std::string& text, const std::optional<std::string>& command);

std::size_t edit_distance(const std::string& a, const std::string& b);
std::optional<std::string> nearest(const std::string& key, const std::vector<std::string>& candidates);

}  // namespace cli
