#include "hjnav/missions.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "hjnav/error.hpp"

namespace hjnav {

void SamplingConstraints::validate() const {
  if (!(min_boundary_dist >= 0.0)) throw ConfigError("min_boundary_dist must be >= 0");
  if (!(min_obstacle_dist >= 0.0 && min_obstacle_dist < max_obstacle_dist)) {
    throw ConfigError("need 0 <= min_obstacle_dist < max_obstacle_dist");
  }
  if (!(target_radius > 0.0)) throw ConfigError("target_radius must be positive");
  if (!(ttr_lo > 0.0 && ttr_lo < ttr_hi)) throw ConfigError("need 0 < ttr_lo < ttr_hi");
  if (!(t_final_hi >= t_final_lo)) throw ConfigError("final-time window is empty");
  if (!(t_max > 0.0)) throw ConfigError("mission t_max must be positive");
  if (!(max_rejection_rate > 0.0 && max_rejection_rate < 1.0)) {
    throw ConfigError("max_rejection_rate must lie in (0, 1)");
  }
}

std::uint64_t SamplingConstraints::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : {min_boundary_dist, min_obstacle_dist, max_obstacle_dist, target_radius, ttr_lo,
                   ttr_hi, t_final_lo, t_final_hi, t_max, max_rejection_rate}) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

namespace {

bool target_ok(Vec2 center, const Region& region, const DistanceMap& dmap,
               const SamplingConstraints& c, std::string* why) {
  if (region.boundary_distance(center) < c.min_boundary_dist) {
    if (why) *why = "target too close to the region boundary";
    return false;
  }
  const double d = dmap.sample(center);
  if (d < c.min_obstacle_dist) {
    if (why) *why = "target closer to obstacles than min_obstacle_dist";
    return false;
  }
  if (d > c.max_obstacle_dist) {
    if (why) *why = "target farther from obstacles than max_obstacle_dist";
    return false;
  }
  return true;
}

ValueFunction free_solve(const FlowSource& truth, const SolverConfig& solver, Vec2 center,
                         double radius, double t_final, double ttr_hi) {
  SolverConfig cfg = solver;
  cfg.d_max = 0.0;
  return solve_mtr(truth, empty_mask(cfg.grid), TargetSpec{center, radius}, cfg,
                   t_final - ttr_hi, t_final);
}

}  // namespace

std::vector<SampledMission> sample_missions(const Region& region, const FlowSource& truth,
                                            const ObstacleMask& obstacles,
                                            const DistanceMap& dmap, std::size_t n,
                                            const SamplingConstraints& c,
                                            const SolverConfig& solver, std::uint64_t seed) {
  c.validate();
  std::vector<SampledMission> out;
  if (n == 0) return out;
  const double max_attempts = static_cast<double>(n) / (1.0 - c.max_rejection_rate);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
  std::uniform_real_distribution<double> ut(c.t_final_lo, c.t_final_hi);
  const SpatialGrid& g = solver.grid;
  double attempts = 0.0;
  while (out.size() < n) {
    if (++attempts > max_attempts) {
      throw InfeasibleError("mission sampler rejected more than " +
                            std::to_string(c.max_rejection_rate * 100.0) + "% of candidates (" +
                            std::to_string(out.size()) + " of " + std::to_string(n) +
                            " accepted)");
    }
    const Vec2 center{ux(rng), uy(rng)};
    const double t_final = ut(rng);
    if (!target_ok(center, region, dmap, c, nullptr)) continue;
    const ValueFunction J = free_solve(truth, solver, center, c.target_radius, t_final, c.ttr_hi);
    const std::vector<double> ttr = latest_departure_ttr(J);
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        const Vec2 p = g.node(i, j);
        if (std::isnan(ttr[k]) || ttr[k] < c.ttr_lo || ttr[k] > c.ttr_hi) continue;
        if (!region.contains(p) || obstacles.contains(p)) continue;
        candidates.push_back(k);
      }
    }
    if (candidates.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const std::size_t k = candidates[pick(rng)];
    SampledMission s;
    s.mission.x0 = g.node(k % g.nx, k / g.nx);
    s.mission.t0 = t_final - ttr[k];
    s.mission.target = TargetSpec{center, c.target_radius};
    s.mission.t_max = c.t_max;
    s.t_final = t_final;
    s.ttr = ttr[k];
    s.slack = c.t_max - ttr[k];
    out.push_back(s);
  }
  return out;
}

std::vector<ValidationIssue> validate_missions(const std::vector<SampledMission>& missions,
                                               const Region& region, const FlowSource& truth,
                                               const ObstacleMask& obstacles,
                                               const DistanceMap& dmap,
                                               const SamplingConstraints& c,
                                               const SolverConfig& solver,
                                               double ttr_tolerance) {
  std::vector<ValidationIssue> issues;
  for (std::size_t idx = 0; idx < missions.size(); ++idx) {
    const SampledMission& s = missions[idx];
    const Mission& m = s.mission;
    std::string why;
    if (!target_ok(m.target.center, region, dmap, c, &why)) {
      issues.push_back({idx, why});
      continue;
    }
    if (obstacles.contains(m.x0)) {
      issues.push_back({idx, "start lies on an obstacle"});
      continue;
    }
    const ValueFunction J =
        free_solve(truth, solver, m.target.center, m.target.radius, s.t_final, c.ttr_hi);
    const auto [i, j] = J.space().nearest(m.x0);
    const double ttr = latest_departure_ttr(J)[J.space().index(i, j)];
    if (std::isnan(ttr) || ttr < c.ttr_lo - ttr_tolerance || ttr > c.ttr_hi + ttr_tolerance) {
      issues.push_back({idx, "start time-to-reach outside the window"});
    } else if (std::abs(ttr - (s.t_final - m.t0)) > ttr_tolerance) {
      issues.push_back({idx, "start time inconsistent with the recomputed time-to-reach"});
    }
  }
  return issues;
}

void write_missions(const std::vector<SampledMission>& missions, const MissionSetInfo& info,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : missions) {
    nlohmann::ordered_json j;
    j["x0_m"] = s.mission.x0.x;
    j["y0_m"] = s.mission.x0.y;
    j["t0_s"] = s.mission.t0;
    j["target_x_m"] = s.mission.target.center.x;
    j["target_y_m"] = s.mission.target.center.y;
    j["target_radius_m"] = s.mission.target.radius;
    j["t_max_s"] = s.mission.t_max;
    j["t_final_s"] = s.t_final;
    if (std::isfinite(s.ttr)) j["ttr_s"] = s.ttr;
    if (std::isfinite(s.slack)) j["slack_s"] = s.slack;
    j["seed"] = info.seed;
    j["constraint_hash"] = info.constraint_hash;
    out << j.dump() << '\n';
  }
}

std::vector<SampledMission> read_missions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<SampledMission> out;
  std::string line;
  for (std::uint64_t no = 1; std::getline(in, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(no) + ": " + e.what(), no);
    }
    auto num = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_number()) {
        throw FormatError("line " + std::to_string(no) + ": missing field '" + key + "'", no);
      }
      return j[key].get<double>();
    };
    auto opt = [&](const char* key, double dflt) { return j.contains(key) ? num(key) : dflt; };
    SampledMission s;
    s.mission.x0 = {num("x0_m"), num("y0_m")};
    s.mission.t0 = num("t0_s");
    s.mission.target = TargetSpec{{num("target_x_m"), num("target_y_m")}, num("target_radius_m")};
    s.mission.t_max = num("t_max_s");
    s.t_final = opt("t_final_s", s.mission.t0 + s.mission.t_max);
    s.ttr = opt("ttr_s", std::numeric_limits<double>::quiet_NaN());
    s.slack = opt("slack_s", std::numeric_limits<double>::quiet_NaN());
    out.push_back(s);
  }
  return out;
}

}  // namespace hjnav
