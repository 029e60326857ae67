#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run hjnav(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + HJNAV_CLI + "\" " + args + " > \"" + out.string() +
                          "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::slurp(out);
  r.err = testing::slurp(err);
  return r;
}

json small_config() {
  return json::parse(R"({
    "scale": "desk",
    "seed": 3,
    "region": {"x_min_m": 0, "x_max_m": 20000, "y_min_m": 0, "y_max_m": 10000},
    "grid": {"dx_m": 500},
    "flow": {"kind": "highway", "y1_m": 4000, "y2_m": 6000, "velocity_ms": [0.5, 0.0]},
    "terrain": {"kind": "features", "features": [
      {"shape": "rect", "x_min_m": 15000, "x_max_m": 16000, "y_min_m": 3000, "y_max_m": 7000, "elevation_m": 0}
    ]},
    "time": {"begin_s": 0, "end_s": 90000},
    "forecast": {"cadence_s": 3600, "horizon_s": 18000, "target_rmse_ms": 0.05, "correlation_length_m": 4000},
    "missions": {"min_boundary_dist_m": 1000, "min_obstacle_dist_m": 500, "max_obstacle_dist_m": 20000,
                 "target_radius_m": 500, "ttr_lo_s": 3600, "ttr_hi_s": 10800, "t_max_s": 18000},
    "sim": {"step_dt_s": 300},
    "controllers": ["MTR", "MTR-no-Obs", "Floating"],
    "solve": {"target": {"x_m": 18000, "y_m": 8000}, "t_start_s": 0, "t_final_s": 36000},
    "stranding": {"n": 20, "horizon_s": 36000}
  })");
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  testing::spit(p, j.dump(2));
  return p;
}

}  // namespace

TEST_CASE("cli solve writes its artifacts") {
  testing::TempDir dir("cli_solve");
  const fs::path cfg = write_config(dir.path(), small_config());
  const Run r = hjnav("--config " + cfg.string() + " --out " + (dir / "out").string() + " solve", dir.path());
  REQUIRE(r.code == 0);
  for (const char* f : {"value.vfn", "value.json", "ttr.pgm", "ttr.csv", "brt.pgm", "summary.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
  }
  const json side = json::parse(testing::slurp(dir / "out" / "value.json"));
  CHECK(side["format"] == "VFN1");
  CHECK(side["horizon"]["t_end_s"] == 36000.0);
  const json summary = json::parse(r.out);
  CHECK(summary["ttr_defined_fraction"].get<double>() > 0.0);
  CHECK(summary["sentinel_fraction"].get<double>() > 0.0);
}

TEST_CASE("cli config errors exit with 2") {
  testing::TempDir dir("cli_err");
  json j = small_config();
  j["flow"] = {{"kind", "file"}, {"path", "no_such_flow.ofg"}};
  const fs::path cfg = write_config(dir.path(), j);
  Run r = hjnav("--config " + cfg.string() + " --out " + (dir / "out").string() + " solve", dir.path());
  CHECK(r.code == 2);
  CHECK(r.err.find("no_such_flow.ofg") != std::string::npos);

  j = small_config();
  j["missions"]["ttr_lo_s"] = 20000;
  r = hjnav("--config " + write_config(dir.path(), j).string() + " --out " + (dir / "out").string() +
                " sample-missions --n 3",
            dir.path());
  CHECK(r.code == 2);

  r = hjnav("frobnicate", dir.path());
  CHECK(r.code == 2);
  r = hjnav("solve", dir.path());
  CHECK(r.code == 2);
  r = hjnav("--config " + (dir / "absent.json").string() + " solve", dir.path());
  CHECK(r.code == 2);
}

TEST_CASE("cli sample-missions with n = 0") {
  testing::TempDir dir("cli_zero");
  const fs::path cfg = write_config(dir.path(), small_config());
  const Run r = hjnav("--config " + cfg.string() + " --out " + (dir / "out").string() + " sample-missions --n 0", dir.path());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "out" / "missions.jsonl"));
  CHECK(testing::slurp(dir / "out" / "missions.jsonl").empty());
}

TEST_CASE("cli batch output is identical across worker counts") {
  testing::TempDir dir("cli_batch");
  const fs::path cfg = write_config(dir.path(), small_config());
  Run r = hjnav("--config " + cfg.string() + " --out " + (dir / "m").string() + " sample-missions --n 6", dir.path());
  REQUIRE(r.code == 0);
  const std::string missions = (dir / "m" / "missions.jsonl").string();
  r = hjnav("--config " + cfg.string() + " --out " + (dir / "a").string() + " --workers 1 batch --missions " + missions,
            dir.path());
  REQUIRE(r.code == 0);
  r = hjnav("--config " + cfg.string() + " --out " + (dir / "b").string() +
                " --workers 3 batch --trajectories --missions " + missions,
            dir.path());
  REQUIRE(r.code == 0);
  const std::string sa = testing::slurp(dir / "a" / "summary.json");
  CHECK(!sa.empty());
  CHECK(sa == testing::slurp(dir / "b" / "summary.json"));
  CHECK(testing::slurp(dir / "a" / "stats.json") == testing::slurp(dir / "b" / "stats.json"));
  CHECK(fs::exists(dir / "b" / "trajectories" / "MTR" / "mission_0.csv"));

  const json summary = json::parse(sa);
  CHECK(summary["controllers"]["MTR"]["n_total"] == 6);

  r = hjnav("stats --summary " + (dir / "a" / "summary.json").string(), dir.path());
  CHECK(r.code == 0);
  CHECK(r.out.find("MTR") != std::string::npos);

  r = hjnav("--config " + cfg.string() + " --out " + (dir / "c").string() + " batch --missions " +
                (dir / "nothing.jsonl").string(),
            dir.path());
  CHECK(r.code == 2);
}

TEST_CASE("cli stats from counts") {
  testing::TempDir dir("cli_stats");
  const Run r = hjnav("stats --counts 54 1146 11 1146", dir.path());
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", j["p_one_sided"].get<double>());
  CHECK(std::string(buf) == "3.1e-08");
}

TEST_CASE("cli stranding-study and gen-forecasts") {
  testing::TempDir dir("cli_misc");
  const fs::path cfg = write_config(dir.path(), small_config());
  Run r = hjnav("--config " + cfg.string() + " --out " + (dir / "s").string() + " stranding-study", dir.path());
  REQUIRE(r.code == 0);
  const json st = json::parse(testing::slurp(dir / "s" / "stranding.json"));
  CHECK(st["n"] == 20);
  CHECK(st["stranded"].get<int>() + st["left_region"].get<int>() + st["survived"].get<int>() == 20);
  CHECK(fs::exists(dir / "s" / "stranding_heatmap.pgm"));

  r = hjnav("--config " + cfg.string() + " --out " + (dir / "f").string() + " gen-forecasts --releases 2", dir.path());
  REQUIRE(r.code == 0);
  const json m = json::parse(testing::slurp(dir / "f" / "forecasts.json"));
  CHECK(m["releases"].size() == 2);
  CHECK(fs::exists(dir / "f" / "forecast_1.ofg"));
  const json metrics = json::parse(testing::slurp(dir / "f" / "forecast_metrics.json"));
  CHECK(metrics["vector_rmse_ms"].get<double>() > 0.0);
}
