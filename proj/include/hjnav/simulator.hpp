#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hjnav/controllers.hpp"
#include "hjnav/forecast.hpp"
#include "hjnav/stats.hpp"

namespace hjnav {

/// Axis-aligned simulation region (m).
struct Region {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(Vec2 p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  /// Distance from p to the nearest region edge (0 outside).
  double boundary_distance(Vec2 p) const;
  static Region of(const SpatialGrid& g) { return {g.x0, g.x_max(), g.y0, g.y_max()}; }
};

struct Mission {
  Vec2 x0;
  double t0 = 0.0;
  TargetSpec target;
  double t_max = 0.0;  // s, deadline measured from t0
};

enum class Integrator { Euler, RK4 };

struct SimConfig {
  double step_dt = 600.0;
  Integrator integrator = Integrator::RK4;
  Region region;
  /// Stop at the first exit from the region (missions never re-enter).
  bool stop_on_exit = true;

  void validate() const;
};

enum class Outcome { Success, Stranded, Timeout, LeftRegion, Aborted };
std::string_view to_string(Outcome o);

struct TrajectoryPoint {
  double t = 0.0;
  Vec2 x;
  Vec2 u;
  Branch branch = Branch::Float;
  double ttr = std::numeric_limits<double>::quiet_NaN();  // D* at the state, NaN if undefined
};

struct ReplanEvent {
  double t = 0.0;             // wall-clock time of the replan
  double release_time = 0.0;  // forecast used
  double t_end = 0.0;         // end of the solve horizon
};

struct SimulationRecord {
  std::vector<TrajectoryPoint> trajectory;
  std::vector<ReplanEvent> replans;
  Outcome outcome = Outcome::Timeout;
  double outcome_time = 0.0;
  std::string diagnostic;  // set for Aborted
};

/// One step of xdot = v(x, t) + u with u held. nullopt when a stage leaves
/// the truth's extent.
std::optional<Vec2> integrate_step(Vec2 x, Vec2 u, const FlowSource& truth, double t, double dt,
                                   Integrator method = Integrator::RK4);

/// Closed-loop execution. Replans at t0 and at every later release; the
/// solve horizon is min(release + horizon, t0 + t_max). After each step:
/// obstacle -> Stranded, target -> Success, outside region -> LeftRegion,
/// deadline -> Timeout. A failing replan ends the mission as Aborted.
SimulationRecord run_mission(const Mission& m, const FlowSource& truth, Controller& ctrl,
                             const ForecastSeries& series, const ObstacleMask& obstacles,
                             const SimConfig& cfg);

/// Builds the forecast series a mission sees from its own RNG seed.
using SeriesFactory = std::function<ForecastSeries(const Mission&, std::uint64_t seed)>;

struct BatchSpec {
  ControllerKind kind = ControllerKind::MTR;
  ControllerInputs inputs;
  SeriesFactory series;
  SimConfig sim;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
};

/// Per-mission seed: splitmix64 of (master seed, index).
std::uint64_t mission_seed(std::uint64_t master, std::size_t index);

/// Independent missions, one record each, in mission order regardless of
/// worker count. Exceptions in a mission become Aborted records.
std::vector<SimulationRecord> run_batch(const std::vector<Mission>& missions,
                                        const FlowSource& truth, const ObstacleMask& obstacles,
                                        const BatchSpec& spec);

OutcomeTally tally(const std::vector<SimulationRecord>& records);

struct StrandingStudy {
  std::size_t n = 0;
  std::size_t stranded = 0;
  std::size_t left_region = 0;
  std::size_t survived = 0;
  /// Stranding end locations counted per obstacle-grid cell.
  std::vector<std::uint32_t> heatmap;
  SpatialGrid heatmap_grid;

  double stranded_rate() const { return n ? static_cast<double>(stranded) / static_cast<double>(n) : 0.0; }
  double left_rate() const { return n ? static_cast<double>(left_region) / static_cast<double>(n) : 0.0; }
};

/// n free-floating drifters from uniform obstacle-free starts in `region`
/// and uniform start times in [t_begin, t_end - horizon].
StrandingStudy stranding_study(const Region& region, const FlowSource& truth,
                               const ObstacleMask& obstacles, std::size_t n, double horizon,
                               double t_begin, double t_end, std::uint64_t seed,
                               const SimConfig& cfg);

/// Columns t_s, x_m, y_m, ux_ms, uy_ms, branch, ttr_s.
void write_trajectory_csv(const SimulationRecord& rec, const std::filesystem::path& path);

}  // namespace hjnav
