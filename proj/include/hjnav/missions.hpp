#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "hjnav/simulator.hpp"

namespace hjnav {

struct SamplingConstraints {
  double min_boundary_dist = 0.0;  // m, target center to region edge
  double min_obstacle_dist = 0.0;  // m
  double max_obstacle_dist = std::numeric_limits<double>::infinity();
  double target_radius = 1000.0;   // m
  double ttr_lo = 1.0;             // s
  double ttr_hi = 2.0;             // s
  double t_final_lo = 0.0;         // window for the target arrival time t_T (s)
  double t_final_hi = 0.0;
  double t_max = 1.0;              // mission deadline assigned to every mission (s)
  double max_rejection_rate = 0.999;

  /// ConfigError on inconsistent bounds.
  void validate() const;
  /// FNV-1a hash of the canonical field values, stable across runs.
  std::uint64_t hash() const;
};

struct SampledMission {
  Mission mission;
  double t_final = 0.0;  // arrival time the start was drawn for
  double ttr = 0.0;      // obstacle-free time-to-reach of the start
  double slack = 0.0;    // t_max - ttr
};

struct MissionSetInfo {
  std::uint64_t seed = 0;
  std::uint64_t constraint_hash = 0;
};

/// Rejection sampler: target center uniform in the region subject to the
/// boundary and obstacle-distance limits, t_T uniform in the final-time
/// window, then an obstacle-free solve back from t_T and a start drawn
/// uniformly among free nodes whose time-to-reach lies in the TTR window.
/// Throws InfeasibleError once rejections exceed the configured rate.
std::vector<SampledMission> sample_missions(const Region& region, const FlowSource& truth,
                                            const ObstacleMask& obstacles,
                                            const DistanceMap& dmap, std::size_t n,
                                            const SamplingConstraints& c,
                                            const SolverConfig& solver, std::uint64_t seed);

struct ValidationIssue {
  std::size_t index = 0;
  std::string message;
};

/// Re-checks each mission from scratch: target distance limits, obstacle-
/// free start, and the obstacle-free TTR of the start within the window
/// (with `ttr_tolerance` seconds slack). Never requires obstacle-aware
/// feasibility.
std::vector<ValidationIssue> validate_missions(const std::vector<SampledMission>& missions,
                                               const Region& region, const FlowSource& truth,
                                               const ObstacleMask& obstacles,
                                               const DistanceMap& dmap,
                                               const SamplingConstraints& c,
                                               const SolverConfig& solver,
                                               double ttr_tolerance);

/// JSON lines; every line carries the mission and its provenance.
void write_missions(const std::vector<SampledMission>& missions, const MissionSetInfo& info,
                    const std::filesystem::path& path);
/// FormatError (offset = 1-based line number) on malformed lines or
/// missing fields.
std::vector<SampledMission> read_missions(const std::filesystem::path& path);

}  // namespace hjnav
