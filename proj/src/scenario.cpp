#include "hjnav/scenario.hpp"

#include <cmath>
#include <fstream>

#include "hjnav/error.hpp"

namespace hjnav {

using nlohmann::json;

ScalePreset scale_preset(const std::string& name) {
  ScalePreset p;
  p.name = name;
  if (name == "ocean") return p;
  if (name != "desk") throw ConfigError("unknown scale '" + name + "' (expected ocean or desk)");
  const double f = 1.0 / 24.0;
  p.factor = f;
  for (double* v : {&p.cadence, &p.horizon, &p.step_dt, &p.switch_threshold, &p.mission_t_max,
                    &p.ttr_lo, &p.ttr_hi, &p.stranding_horizon, &p.min_boundary_dist,
                    &p.min_obstacle_dist, &p.max_obstacle_dist, &p.target_radius,
                    &p.error_correlation_length, &p.error_temporal_correlation}) {
    *v *= f;
  }
  return p;
}

namespace {

// Reads a number, falling back to `dflt` when the key is absent.
double num(const json& j, const char* key, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

double need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(where + ": missing '" + key + "'");
  }
  return num(j, key, 0.0);
}

Vec2 vec(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2 || !j[key][0].is_number() ||
      !j[key][1].is_number()) {
    throw ConfigError(where + ": '" + key + "' must be a 2-element number array");
  }
  return {j[key][0].get<double>(), j[key][1].get<double>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  return path;
}

FlowSource build_flow(const json& f, const std::filesystem::path& base) {
  if (!f.is_object() || !f.contains("kind")) throw ConfigError("flow: missing 'kind'");
  const std::string kind = f["kind"].get<std::string>();
  const std::string where = "flow '" + kind + "'";
  try {
    if (kind == "uniform") return make_uniform(vec(f, "velocity_ms", where));
    if (kind == "highway") {
      return make_highway(need(f, "y1_m", where), need(f, "y2_m", where),
                          vec(f, "velocity_ms", where));
    }
    if (kind == "double_gyre") {
      return make_double_gyre(need(f, "amplitude", where), num(f, "omega_rad_s", 0.0),
                              num(f, "epsilon", 0.0), need(f, "scale_m", where));
    }
    if (kind == "file") {
      if (!f.contains("path")) throw ConfigError(where + ": missing 'path'");
      FlowSource src = read_flow_file(resolve(base, f["path"].get<std::string>()));
      return f.value("clamp_time", false) ? src.with_clamp(true) : src;
    }
    if (kind == "sum") {
      if (!f.contains("terms") || !f["terms"].is_array() || f["terms"].empty()) {
        throw ConfigError(where + ": 'terms' must be a non-empty array");
      }
      std::vector<FlowSource> terms;
      Extent e;
      bool steady = true;
      for (const auto& t : f["terms"]) {
        terms.push_back(build_flow(t, base));
        const Extent& te = terms.back().extent();
        e.x_min = std::max(e.x_min, te.x_min);
        e.x_max = std::min(e.x_max, te.x_max);
        e.y_min = std::max(e.y_min, te.y_min);
        e.y_max = std::min(e.y_max, te.y_max);
        e.t_min = std::max(e.t_min, te.t_min);
        e.t_max = std::min(e.t_max, te.t_max);
        steady = steady && terms.back().is_steady();
      }
      auto fn = [terms](Vec2 p, double t) {
        Vec2 v;
        for (const auto& s : terms) v += s.sample(p, t);
        return v;
      };
      return FlowSource(FunctionFlow{fn, steady}, e);
    }
  } catch (const ParameterError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError("unknown flow kind '" + kind + "'");
}

ObstacleMask build_terrain(const json& t, const SpatialGrid& grid,
                           const std::filesystem::path& base) {
  const std::string kind = t.is_object() ? t.value("kind", "none") : "none";
  const double threshold = num(t, "threshold_m", -150.0);
  if (kind == "none") {
    ObstacleMask m = empty_mask(grid);
    m.threshold = threshold;
    return m;
  }
  ElevationGrid elev;
  if (kind == "file") {
    if (!t.contains("path")) throw ConfigError("terrain 'file': missing 'path'");
    elev = read_elevation_file(resolve(base, t["path"].get<std::string>()));
    const int factor = static_cast<int>(num(t, "coarsen", 1));
    try {
      if (factor != 1) elev = coarsen_max(elev, factor);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("terrain: ") + e.what());
    }
  } else if (kind == "features") {
    elev.grid = grid;
    elev.elevation.assign(grid.size(), static_cast<float>(num(t, "base_elevation_m", -4000.0)));
    for (const auto& f : t.value("features", json::array())) {
      const std::string shape = f.value("shape", "");
      const auto z = static_cast<float>(need(f, "elevation_m", "terrain feature"));
      for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
          const Vec2 p = grid.node(i, j);
          bool inside = false;
          if (shape == "rect") {
            inside = p.x >= need(f, "x_min_m", "rect") && p.x <= need(f, "x_max_m", "rect") &&
                     p.y >= need(f, "y_min_m", "rect") && p.y <= need(f, "y_max_m", "rect");
          } else if (shape == "disc") {
            inside = norm(p - Vec2{need(f, "x_m", "disc"), need(f, "y_m", "disc")}) <=
                     need(f, "radius_m", "disc");
          } else {
            throw ConfigError("terrain feature shape must be rect or disc");
          }
          float& e = elev.elevation[grid.index(i, j)];
          if (inside) e = std::max(e, z);
        }
      }
    }
  } else {
    throw ConfigError("unknown terrain kind '" + kind + "'");
  }
  return obstacle_mask(elev, threshold);
}

ControllerKind kind_of(const json& j) {
  if (!j.is_string()) throw ConfigError("controller names must be strings");
  return parse_controller_kind(j.get<std::string>());
}

}  // namespace

ControllerInputs ExperimentConfig::controller_inputs() const {
  ControllerInputs in;
  in.solver = solver;
  in.obstacles = scenario.obstacles;
  in.distance = scenario.distance;
  in.switch_threshold = switch_threshold;
  in.small_disturbance = small_disturbance;
  in.margin_cells = margin_cells;
  return in;
}

SeriesFactory ExperimentConfig::series_factory() const {
  const FlowSource truth = scenario.truth;
  const ErrorModelConfig err = error;
  const double cad = cadence, hor = horizon;
  return [truth, err, cad, hor](const Mission& m, std::uint64_t seed) {
    ErrorModelConfig e = err;
    e.seed = seed;
    return gen_forecast_series(truth, e, cad, hor, TimeSpan{m.t0, m.t0 + m.t_max});
  };
}

ExperimentConfig load_experiment(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  try {
    c.scale = scale_preset(j.value("scale", "desk"));
    const ScalePreset& s = c.scale;
    c.seed = j.value("seed", std::uint64_t{0});
    c.workers = j.value("workers", 1u);
    c.output = j.value("output", std::string("out"));

    // Region and lattice.
    const json& r = j.contains("region") ? j["region"] : json();
    Scenario& sc = c.scenario;
    sc.region = {need(r, "x_min_m", "region"), need(r, "x_max_m", "region"),
                 need(r, "y_min_m", "region"), need(r, "y_max_m", "region")};
    if (!(sc.region.width() > 0.0 && sc.region.height() > 0.0)) {
      throw ConfigError("region is empty");
    }
    const json& g = j.value("grid", json::object());
    const double dx = num(g, "dx_m", sc.region.width() / 100.0);
    const double dy = num(g, "dy_m", dx);
    if (!(dx > 0.0 && dy > 0.0)) throw ConfigError("grid spacing must be positive");
    sc.grid = SpatialGrid{sc.region.x_min, sc.region.y_min, dx, dy,
                          static_cast<std::size_t>(std::llround(sc.region.width() / dx)) + 1,
                          static_cast<std::size_t>(std::llround(sc.region.height() / dy)) + 1};

    if (!j.contains("flow")) throw ConfigError("missing 'flow'");
    sc.truth = build_flow(j["flow"], base_dir);
    sc.obstacles = build_terrain(j.value("terrain", json::object()), sc.grid, base_dir);
    sc.distance = distance_map(sc.obstacles);

    const json& tm = j.value("time", json::object());
    const Extent& e = sc.truth.extent();
    sc.t_begin = num(tm, "begin_s", std::isfinite(e.t_min) ? e.t_min : 0.0);
    sc.t_end = num(tm, "end_s", std::isfinite(e.t_max) ? e.t_max : sc.t_begin + 30 * s.cadence);
    if (!(sc.t_end > sc.t_begin)) throw ConfigError("time window is empty");

    const json& sv = j.value("solver", json::object());
    c.solver.u_max = num(sv, "u_max_ms", 0.1);
    c.solver.d_max = num(sv, "d_max_ms", 0.0);
    c.solver.cfl = num(sv, "cfl", 0.5);
    c.solver.snapshot_dt = num(sv, "snapshot_dt_s", s.cadence / 4.0);
    c.solver.order = static_cast<int>(num(sv, "order", 2));
    c.solver.min_dt = num(sv, "min_dt_s", 1e-6);
    c.solver.grid = sc.grid;
    c.solver.validate();

    const json& sim = j.value("sim", json::object());
    c.sim.step_dt = num(sim, "step_dt_s", s.step_dt);
    const std::string integ = sim.value("integrator", "rk4");
    if (integ != "rk4" && integ != "euler") throw ConfigError("integrator must be rk4 or euler");
    c.sim.integrator = integ == "rk4" ? Integrator::RK4 : Integrator::Euler;
    c.sim.region = sc.region;
    c.sim.validate();

    const json& fc = j.value("forecast", json::object());
    c.cadence = num(fc, "cadence_s", s.cadence);
    c.horizon = num(fc, "horizon_s", s.horizon);
    if (!(c.cadence > 0.0 && c.horizon >= c.cadence)) {
      throw ConfigError("forecast needs cadence > 0 and horizon >= cadence");
    }
    if (c.sim.step_dt > c.cadence) throw ConfigError("step_dt must not exceed the cadence");
    c.error.target_rmse = num(fc, "target_rmse_ms", 0.0);
    c.error.correlation_length = num(fc, "correlation_length_m", s.error_correlation_length);
    c.error.temporal_correlation = num(fc, "temporal_correlation_s", s.error_temporal_correlation);
    c.error.n_modes = static_cast<int>(num(fc, "n_modes", 32));
    c.error.seed = c.seed;
    c.error.validate();

    const json& ms = j.value("missions", json::object());
    SamplingConstraints& k = c.constraints;
    k.min_boundary_dist = num(ms, "min_boundary_dist_m", s.min_boundary_dist);
    k.min_obstacle_dist = num(ms, "min_obstacle_dist_m", s.min_obstacle_dist);
    k.max_obstacle_dist = num(ms, "max_obstacle_dist_m", s.max_obstacle_dist);
    k.target_radius = num(ms, "target_radius_m", s.target_radius);
    k.ttr_lo = num(ms, "ttr_lo_s", s.ttr_lo);
    k.ttr_hi = num(ms, "ttr_hi_s", s.ttr_hi);
    k.t_max = num(ms, "t_max_s", s.mission_t_max);
    k.t_final_lo = num(ms, "t_final_lo_s", sc.t_begin + k.ttr_hi);
    k.t_final_hi = num(ms, "t_final_hi_s", sc.t_end - k.t_max - c.horizon + k.ttr_lo);
    k.max_rejection_rate = num(ms, "max_rejection_rate", 0.999);
    k.validate();

    c.controllers.clear();
    for (const auto& name : j.value("controllers", json::array({"MTR", "MTR-no-Obs", "Floating"}))) {
      c.controllers.push_back(kind_of(name));
    }
    c.baseline = kind_of(j.value("baseline", json("MTR-no-Obs")));
    c.switch_threshold = num(j, "switch_threshold_m", s.switch_threshold);
    c.small_disturbance = num(j, "small_disturbance_ms", 0.05);
    c.margin_cells = static_cast<int>(num(j, "planning_margin_cells", 1));
    if (c.margin_cells < 0) throw ConfigError("planning_margin_cells must be >= 0");

    if (j.contains("solve")) {
      const json& sol = j["solve"];
      if (sol.contains("target")) {
        const json& t = sol["target"];
        c.target = TargetSpec{{need(t, "x_m", "solve.target"), need(t, "y_m", "solve.target")},
                              num(t, "radius_m", k.target_radius)};
        try {
          c.target->validate();
        } catch (const ParameterError& err) {
          throw ConfigError(std::string("solve.target: ") + err.what());
        }
      }
      c.t_start = num(sol, "t_start_s", sc.t_begin);
      c.t_final = num(sol, "t_final_s", c.t_start + c.horizon);
    } else {
      c.t_start = sc.t_begin;
      c.t_final = sc.t_begin + c.horizon;
    }
    const json& st = j.value("stranding", json::object());
    c.stranding_n = static_cast<std::size_t>(num(st, "n", 100));
    c.stranding_horizon = num(st, "horizon_s", s.stranding_horizon);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return load_experiment(j, path.parent_path());
}

}  // namespace hjnav
