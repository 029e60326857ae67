#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjnav/controllers.hpp"
#include "hjnav/forecast.hpp"
#include "hjnav/missions.hpp"
#include "hjnav/simulator.hpp"

namespace hjnav {

/// Time and length defaults of a scale. "ocean" uses day-scale values;
/// "desk" divides every length and time by 24 and keeps velocities.
struct ScalePreset {
  std::string name;
  double factor = 1.0;  // lengths and times are ocean values times this
  double cadence = 86400.0;
  double horizon = 5 * 86400.0;
  double step_dt = 600.0;
  double switch_threshold = 20000.0;
  double mission_t_max = 240 * 3600.0;
  double ttr_lo = 5 * 86400.0;
  double ttr_hi = 9 * 86400.0;
  double stranding_horizon = 10 * 86400.0;
  double min_boundary_dist = 0.5 * 111320.0;
  double min_obstacle_dist = 0.025 * 111320.0;
  double max_obstacle_dist = 3.0 * 111320.0;
  double target_radius = 0.1 * 111320.0;
  double error_correlation_length = 100000.0;
  double error_temporal_correlation = 86400.0;
};

/// "ocean" or "desk"; ConfigError otherwise.
ScalePreset scale_preset(const std::string& name);

struct Scenario {
  Region region;
  SpatialGrid grid;  // planning, obstacle and heatmap lattice
  FlowSource truth = make_uniform({});
  ObstacleMask obstacles;
  DistanceMap distance;
  double t_begin = 0.0;  // truth validity window, finite
  double t_end = 0.0;
};

struct ExperimentConfig {
  nlohmann::json raw;
  ScalePreset scale;
  Scenario scenario;
  SolverConfig solver;
  SimConfig sim;
  ErrorModelConfig error;
  double cadence = 0.0;
  double horizon = 0.0;
  SamplingConstraints constraints;
  std::vector<ControllerKind> controllers;
  ControllerKind baseline = ControllerKind::MTRNoObs;
  double switch_threshold = 0.0;
  double small_disturbance = 0.05;
  int margin_cells = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::filesystem::path output = "out";
  /// Solve command: target and time window.
  std::optional<TargetSpec> target;
  double t_start = 0.0;
  double t_final = 0.0;
  std::size_t stranding_n = 100;
  double stranding_horizon = 0.0;

  ControllerInputs controller_inputs() const;
  /// Series seen by a mission: perfect forecasts when target_rmse is 0.
  SeriesFactory series_factory() const;
};

/// Builds an experiment from parsed JSON. Relative file paths resolve
/// against `base_dir`. Throws ConfigError on any invalid or missing value.
ExperimentConfig load_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace hjnav
