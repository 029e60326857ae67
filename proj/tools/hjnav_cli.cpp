// hjnav command-line driver. Exit codes: 0 ok, 2 config error, 3 runtime error.
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hjnav/error.hpp"
#include "hjnav/io.hpp"
#include "hjnav/report.hpp"
#include "hjnav/scenario.hpp"

using namespace hjnav;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string scale;
};

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  std::ifstream in(g.config);
  if (!in) throw ConfigError("cannot open config " + g.config);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + g.config + ": " + e.what());
  }
  if (g.seed) j["seed"] = *g.seed;
  if (g.workers) j["workers"] = *g.workers;
  if (!g.out.empty()) j["output"] = g.out;
  if (!g.scale.empty()) j["scale"] = g.scale;
  ExperimentConfig cfg = load_experiment(j, fs::path(g.config).parent_path());
  fs::create_directories(cfg.output);
  return cfg;
}

void write_json(const ordered_json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t fnv(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

int cmd_solve(const Globals& g, std::optional<double> at) {
  const ExperimentConfig cfg = load(g);
  if (!cfg.target) throw ConfigError("solve needs solve.target in the config");
  const ValueFunction J = solve_mtr(cfg.scenario.truth, cfg.scenario.obstacles, *cfg.target,
                                    cfg.solver, cfg.t_start, cfg.t_final);
  const double t = at.value_or(cfg.t_start);
  const SafeTTRMap D = safe_ttr(J, t);
  write_value_file(J, cfg.output / "value.vfn");
  ordered_json side;
  side["format"] = "VFN1";
  side["solver"] = {{"u_max_ms", cfg.solver.u_max}, {"d_max_ms", cfg.solver.d_max},
                    {"alpha", cfg.solver.alpha},    {"cfl", cfg.solver.cfl},
                    {"sentinel", cfg.solver.sentinel}, {"order", cfg.solver.order}};
  side["target"] = {{"x_m", cfg.target->center.x}, {"y_m", cfg.target->center.y},
                    {"radius_m", cfg.target->radius}};
  side["horizon"] = {{"t_start_s", J.t_start()}, {"t_end_s", J.t_end()},
                     {"snapshots", J.grid().nt}, {"dt_snap_s", J.grid().dt_snap}};
  side["masks_digest"] = {{"obstacle_fnv1a", fnv(J.obstacle_cells())},
                          {"target_fnv1a", fnv(J.target_cells())}};
  write_json(side, cfg.output / "value.json");
  write_pgm(D.ttr, D.grid, cfg.output / "ttr.pgm");
  write_grid_csv(D.ttr, D.grid, "ttr_s", cfg.output / "ttr.csv");
  const CellSet tube = brt(J, t);
  std::vector<double> tube_d(tube.cells.begin(), tube.cells.end());
  write_pgm(tube_d, tube.grid, cfg.output / "brt.pgm");

  double lo = INFINITY, hi = -INFINITY;
  std::size_t finite = 0;
  for (std::size_t n = 0; n < D.ttr.size(); ++n) {
    if (!D.valid[n]) continue;
    ++finite;
    lo = std::min(lo, D.ttr[n]);
    hi = std::max(hi, D.ttr[n]);
  }
  std::size_t sentinel = 0;
  for (double v : J.values_at(t)) sentinel += J.is_sentinel(v) ? 1 : 0;
  ordered_json summary;
  summary["t_s"] = t;
  summary["ttr_min_s"] = finite ? ordered_json(lo) : ordered_json(nullptr);
  summary["ttr_max_s"] = finite ? ordered_json(hi) : ordered_json(nullptr);
  summary["ttr_defined_fraction"] = static_cast<double>(finite) / static_cast<double>(D.ttr.size());
  summary["sentinel_fraction"] = static_cast<double>(sentinel) / static_cast<double>(D.ttr.size());
  write_json(summary, cfg.output / "summary.json");
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_batch(const Globals& g, const std::string& missions_path,
              const std::vector<std::string>& names, bool trajectories) {
  const ExperimentConfig cfg = load(g);
  if (missions_path.empty()) throw ConfigError("batch needs --missions");
  if (!fs::exists(missions_path)) throw ConfigError("missions manifest not found: " + missions_path);
  std::vector<Mission> missions;
  for (const auto& s : read_missions(missions_path)) missions.push_back(s.mission);
  std::vector<ControllerKind> kinds = cfg.controllers;
  if (!names.empty()) {
    kinds.clear();
    for (const auto& n : names) kinds.push_back(parse_controller_kind(n));
  }
  const auto runs = run_controllers(cfg, missions, kinds, cfg.workers);
  write_json(batch_summary(runs, cfg.baseline), cfg.output / "summary.json");
  write_json(stats_report(runs, cfg.baseline), cfg.output / "stats.json");
  bool any_ok = missions.empty();
  for (const auto& r : runs) {
    const fs::path dir = cfg.output / "trajectories" / std::string(to_string(r.kind));
    if (trajectories) fs::create_directories(dir);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      if (r.records[i].outcome != Outcome::Aborted) any_ok = true;
      if (trajectories) {
        write_trajectory_csv(r.records[i], dir / ("mission_" + std::to_string(i) + ".csv"));
      }
    }
    const OutcomeTally t = tally(r.records);
    std::cout << to_string(r.kind) << ": " << t.n_stranded << "/" << t.n_total << " stranded, "
              << t.n_success << " success\n";
  }
  return any_ok ? 0 : 3;
}

int cmd_stranding(const Globals& g, std::optional<std::size_t> n, std::optional<double> horizon) {
  const ExperimentConfig cfg = load(g);
  const double h = horizon.value_or(cfg.stranding_horizon);
  const std::size_t count = n.value_or(cfg.stranding_n);
  const Scenario& sc = cfg.scenario;
  const StrandingStudy st = stranding_study(sc.region, sc.truth, sc.obstacles, count, h,
                                            sc.t_begin, sc.t_end, cfg.seed, cfg.sim);
  ordered_json j;
  j["n"] = st.n;
  j["horizon_s"] = h;
  j["stranded"] = st.stranded;
  j["left_region"] = st.left_region;
  j["survived"] = st.survived;
  j["stranded_rate"] = st.stranded_rate();
  j["left_region_rate"] = st.left_rate();
  write_json(j, cfg.output / "stranding.json");
  std::vector<double> heat(st.heatmap.begin(), st.heatmap.end());
  write_pgm(heat, st.heatmap_grid, cfg.output / "stranding_heatmap.pgm");
  write_grid_csv(heat, st.heatmap_grid, "strandings", cfg.output / "stranding_heatmap.csv");
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_sample(const Globals& g, std::optional<std::size_t> n) {
  const ExperimentConfig cfg = load(g);
  const std::size_t count = n.value_or(100);
  const Scenario& sc = cfg.scenario;
  const auto missions = sample_missions(sc.region, sc.truth, sc.obstacles, sc.distance, count,
                                        cfg.constraints, cfg.solver, cfg.seed);
  write_missions(missions, {cfg.seed, cfg.constraints.hash()}, cfg.output / "missions.jsonl");
  const auto issues = validate_missions(missions, sc.region, sc.truth, sc.obstacles, sc.distance,
                                        cfg.constraints, cfg.solver, 1e-6);
  ordered_json rep;
  rep["n"] = missions.size();
  rep["valid"] = missions.size() - issues.size();
  ordered_json list = ordered_json::array();
  for (const auto& is : issues) list.push_back({{"mission", is.index}, {"issue", is.message}});
  rep["issues"] = list;
  write_json(rep, cfg.output / "missions_validation.json");
  std::cout << "sampled " << missions.size() << " missions, " << issues.size() << " issues\n";
  return issues.empty() ? 0 : 3;
}

int cmd_gen_forecasts(const Globals& g, std::size_t releases) {
  const ExperimentConfig cfg = load(g);
  const Scenario& sc = cfg.scenario;
  const TimeSpan span{sc.t_begin, sc.t_begin + static_cast<double>(releases - 1) * cfg.cadence};
  const ForecastSeries series =
      gen_forecast_series(sc.truth, cfg.error, cfg.cadence, cfg.horizon, span);
  const auto nt = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.solver.snapshot_dt)) + 1;
  ordered_json manifest;
  manifest["horizon_s"] = cfg.horizon;
  manifest["cadence_s"] = cfg.cadence;
  ordered_json list = ordered_json::array();
  std::vector<Vec2> truth_s, fc_s;
  for (std::size_t k = 0; k < series.releases.size(); ++k) {
    const auto& r = series.releases[k];
    SpaceTimeGrid grid{sc.grid, r.time, cfg.horizon / static_cast<double>(nt - 1), nt};
    const std::string name = "forecast_" + std::to_string(k) + ".ofg";
    write_flow_file(rasterize(r.flow, grid), cfg.output / name);
    list.push_back({{"time_s", r.time}, {"path", name}});
    for (std::size_t j = 0; j < sc.grid.ny; ++j) {
      for (std::size_t i = 0; i < sc.grid.nx; ++i) {
        truth_s.push_back(sc.truth.sample(sc.grid.node(i, j), r.time));
        fc_s.push_back(r.flow.sample(sc.grid.node(i, j), r.time));
      }
    }
  }
  manifest["releases"] = list;
  write_json(manifest, cfg.output / "forecasts.json");
  ordered_json metrics;
  metrics["vector_rmse_ms"] = vector_rmse(truth_s, fc_s);
  try {
    metrics["vector_correlation"] = vector_correlation(truth_s, fc_s);
  } catch (const DegenerateError&) {
    metrics["vector_correlation"] = nullptr;
  }
  write_json(metrics, cfg.output / "forecast_metrics.json");
  std::cout << metrics.dump() << '\n';
  return 0;
}

int cmd_stats(const std::string& summary, const std::vector<std::size_t>& counts) {
  if (!counts.empty()) {
    if (counts.size() != 4) throw ConfigError("--counts takes k_base n_base k_alt n_alt");
    const TestResult r = z_prop_test(counts[0], counts[1], counts[2], counts[3]);
    std::cout << ordered_json{{"z", r.z}, {"p_one_sided", r.p}}.dump() << '\n';
    return 0;
  }
  if (summary.empty()) throw ConfigError("stats needs --summary or --counts");
  std::ifstream in(summary);
  if (!in) throw ConfigError("cannot open " + summary);
  nlohmann::json j;
  in >> j;
  const ControllerKind base = parse_controller_kind(j.at("baseline").get<std::string>());
  std::vector<ControllerRun> runs;
  for (const auto& [name, t] : j.at("controllers").items()) {
    ControllerRun r{parse_controller_kind(name), {}};
    auto add = [&](const char* key, Outcome o) {
      for (std::size_t i = 0; i < t.at(key).get<std::size_t>(); ++i) {
        r.records.push_back(SimulationRecord{{}, {}, o, 0.0, {}});
      }
    };
    add("n_success", Outcome::Success);
    add("n_stranded", Outcome::Stranded);
    add("n_timeout", Outcome::Timeout);
    add("n_left_region", Outcome::LeftRegion);
    add("n_aborted", Outcome::Aborted);
    runs.push_back(std::move(r));
  }
  std::cout << stats_report(runs, base).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability-based navigation for underactuated vessels in flows"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  app.add_option("--config,-c", g.config, "experiment JSON config");
  app.add_option("--out,-o", g.out, "output directory (overrides config)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--scale", g.scale, "scale preset: desk or ocean")
      ->check(CLI::IsMember({"desk", "ocean"}));

  std::optional<double> at;
  auto* solve = app.add_subcommand("solve", "solve the value function and write D* slices");
  solve->add_option("--at", at, "time of the D* slice (s)");

  std::string missions;
  std::vector<std::string> controllers;
  bool trajectories = false;
  auto* batch = app.add_subcommand("batch", "run controllers over a mission manifest");
  batch->add_option("--missions", missions, "mission manifest (JSON lines)");
  batch->add_option("--controllers", controllers, "controller names")->delimiter(',');
  batch->add_flag("--trajectories", trajectories, "write per-mission trajectory CSVs");

  std::optional<std::size_t> n_study;
  std::optional<double> horizon;
  auto* study = app.add_subcommand("stranding-study", "free-floating stranding rates and heatmap");
  study->add_option("--n", n_study, "number of drifters");
  study->add_option("--horizon", horizon, "drift horizon (s)");

  std::optional<std::size_t> n_missions;
  auto* sample = app.add_subcommand("sample-missions", "sample a feasible mission manifest");
  sample->add_option("--n", n_missions, "number of missions");

  std::size_t releases = 3;
  auto* gen = app.add_subcommand("gen-forecasts", "write a synthetic forecast series");
  gen->add_option("--releases", releases, "number of releases")->check(CLI::PositiveNumber);

  std::string summary;
  std::vector<std::size_t> counts;
  auto* stats = app.add_subcommand("stats", "z tests from a batch summary or raw counts");
  stats->add_option("--summary", summary, "batch summary.json");
  stats->add_option("--counts", counts, "k_base n_base k_alt n_alt")->expected(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed_opt->count()) g.seed = seed;
  if (workers_opt->count()) g.workers = workers;

  try {
    if (*solve) return cmd_solve(g, at);
    if (*batch) return cmd_batch(g, missions, controllers, trajectories);
    if (*study) return cmd_stranding(g, n_study, horizon);
    if (*sample) return cmd_sample(g, n_missions);
    if (*gen) return cmd_gen_forecasts(g, releases);
    if (*stats) return cmd_stats(summary, counts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
