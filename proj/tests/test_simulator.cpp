#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hjnav/error.hpp"
#include "hjnav/simulator.hpp"
#include "support.hpp"

using namespace hjnav;

namespace {

ObstacleMask rect_mask(const SpatialGrid& g, double x0, double x1, double y0, double y1) {
  ObstacleMask m = empty_mask(g);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const Vec2 p = g.node(i, j);
      if (p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) m.cells[g.index(i, j)] = 1;
    }
  return m;
}

SimConfig sim_over(const SpatialGrid& g, double dt = 600.0) {
  SimConfig c;
  c.step_dt = dt;
  c.region = Region::of(g);
  return c;
}

ControllerInputs inputs_on(const SpatialGrid& g, double snapshot_dt, const ObstacleMask& m) {
  ControllerInputs in;
  in.solver.grid = g;
  in.solver.snapshot_dt = snapshot_dt;
  in.obstacles = m;
  in.distance = distance_map(m);
  return in;
}

}  // namespace

TEST_CASE("integrate_step") {
  const FlowSource v = make_uniform({0.1, 0.0});
  const auto a = integrate_step({0.0, 0.0}, {0.0, 0.1}, v, 0.0, 600.0);
  REQUIRE(a);
  CHECK(a->x == doctest::Approx(60.0));
  CHECK(a->y == doctest::Approx(60.0));
  const auto e = integrate_step({0.0, 0.0}, {0.0, 0.1}, v, 0.0, 600.0, Integrator::Euler);
  CHECK(e->x == doctest::Approx(60.0));

  const auto still = integrate_step({12.0, -7.0}, {0.0, 0.0}, make_uniform({0, 0}), 5.0, 600.0);
  CHECK(*still == Vec2{12.0, -7.0});

  const double period = 86400.0;
  const double w = 2 * std::numbers::pi / period;
  const FlowSource rot(FunctionFlow{[w](Vec2 p, double) { return Vec2{-w * p.y, w * p.x}; }, true}, Extent{});
  Vec2 x{1000.0, 0.0};
  for (int k = 0; k < 100; ++k) x = *integrate_step(x, {0, 0}, rot, k * period / 100, period / 100);
  CHECK(std::abs(norm(x) - 1000.0) / 1000.0 < 1e-3);
  CHECK(norm(x - Vec2{1000.0, 0.0}) < 1.0);

  const FlowSource boxed = make_uniform({1.0, 0.0}).restricted(Extent{0.0, 100.0, 0.0, 100.0});
  CHECK_FALSE(integrate_step({90.0, 50.0}, {0, 0}, boxed, 0.0, 60.0).has_value());
}

TEST_CASE("run_mission examples") {
  const SpatialGrid g{0.0, 0.0, 200.0, 200.0, 301, 51};
  const ObstacleMask none = empty_mask(g);

  SUBCASE("start inside the target") {
    Controller c = build_controller(ControllerKind::Floating, inputs_on(g, 3600.0, none), {{500.0, 500.0}, 300.0});
    const Mission m{{450.0, 520.0}, 100.0, {{500.0, 500.0}, 300.0}, 5000.0};
    const SimulationRecord r = run_mission(m, make_uniform({0, 0}), c, perfect_forecasts(make_uniform({0, 0}), 3600, 7200, {0, 5000}), none, sim_over(g));
    CHECK(r.outcome == Outcome::Success);
    CHECK(r.outcome_time == 100.0);
    CHECK(r.trajectory.size() == 1);
  }

  SUBCASE("floating down a highway into a wall") {
    const ObstacleMask wall = rect_mask(g, 43300.0, 45000.0, 0.0, 10000.0);
    const FlowSource band = make_highway(2000.0, 8000.0, {1.0, 0.0});
    Controller c = build_controller(ControllerKind::Floating, inputs_on(g, 3600.0, wall), {{55000.0, 5000.0}, 500.0});
    const Mission m{{0.0, 5000.0}, 0.0, {{55000.0, 5000.0}, 500.0}, 100000.0};
    const SimulationRecord r = run_mission(m, band, c, perfect_forecasts(band, 3600, 7200, {0, 100000}), wall, sim_over(g));
    CHECK(r.outcome == Outcome::Stranded);
    CHECK(r.outcome_time == doctest::Approx(43200.0).epsilon(600.0 / 43200.0));
    CHECK(r.replans.empty());
  }

  SUBCASE("out of range times out") {
    const SpatialGrid wide{0.0, -10000.0, 2000.0, 2000.0, 56, 11};
    const ObstacleMask free = empty_mask(wide);
    const FlowSource still = make_uniform({0, 0});
    const TargetSpec tgt{{100000.0, 0.0}, 1000.0};
    Controller c = build_controller(ControllerKind::MTR, inputs_on(wide, 21600.0, free), tgt);
    const Mission m{{0.0, 0.0}, 0.0, tgt, 86400.0};
    const SimulationRecord r = run_mission(m, still, c, perfect_forecasts(still, 86400, 86400, {0, 86400}), free, sim_over(wide));
    CHECK(r.outcome == Outcome::Timeout);
    CHECK(r.outcome_time == 86400.0);
    CHECK(r.trajectory.back().x.x == doctest::Approx(8640.0).epsilon(0.01));
  }

  SUBCASE("stranded wins over success in the same step") {
    const ObstacleMask m = rect_mask(g, 4000.0, 6000.0, 0.0, 10000.0);
    const FlowSource flow = make_uniform({1.0, 0.0});
    const TargetSpec tgt{{5000.0, 5000.0}, 1000.0};
    Controller c = build_controller(ControllerKind::Floating, inputs_on(g, 3600.0, m), tgt);
    const SimulationRecord r = run_mission({{0.0, 5000.0}, 0.0, tgt, 20000.0}, flow, c, perfect_forecasts(flow, 3600, 7200, {0, 20000}), m, sim_over(g));
    CHECK(r.outcome == Outcome::Stranded);
    CHECK(r.outcome_time == 4200.0);
  }

  SUBCASE("leaving the region") {
    const FlowSource flow = make_uniform({0.0, 1.0});
    const TargetSpec tgt{{5000.0, 5000.0}, 500.0};
    Controller c = build_controller(ControllerKind::Floating, inputs_on(g, 3600.0, none), tgt);
    const SimulationRecord r = run_mission({{1000.0, 8000.0}, 0.0, tgt, 20000.0}, flow, c, perfect_forecasts(flow, 3600, 7200, {0, 20000}), none, sim_over(g));
    CHECK(r.outcome == Outcome::LeftRegion);
    CHECK(r.outcome_time == 2400.0);
  }

  SUBCASE("failing replan aborts with a diagnostic") {
    const FlowSource narrow = make_uniform({0, 0}).restricted(Extent{0.0, 1000.0, 0.0, 1000.0});
    const TargetSpec tgt{{5000.0, 5000.0}, 500.0};
    Controller c = build_controller(ControllerKind::MTR, inputs_on(g, 3600.0, none), tgt);
    const SimulationRecord r = run_mission({{500.0, 500.0}, 0.0, tgt, 20000.0}, make_uniform({0, 0}), c,
                                           perfect_forecasts(narrow, 3600, 7200, {0, 20000}), none, sim_over(g));
    CHECK(r.outcome == Outcome::Aborted);
    CHECK(r.diagnostic.find("replan") != std::string::npos);
  }
}

TEST_CASE("closed loop invariants") {
  const SpatialGrid g{0.0, 0.0, 250.0, 250.0, 81, 41};
  const ObstacleMask wall = rect_mask(g, 8000.0, 8750.0, 2500.0, 8000.0);
  const FlowSource flow = make_highway(4000.0, 6000.0, {0.5, 0.0});
  const TargetSpec tgt{{10500.0, 8800.0}, 500.0};
  ControllerInputs in = inputs_on(g, 1800.0, wall);
  const ForecastSeries series = perfect_forecasts(flow, 3600.0, 72000.0, {0.0, 80000.0});
  const SimConfig cfg = sim_over(g, 120.0);

  for (auto kind : {ControllerKind::MTR, ControllerKind::SwitchMTR, ControllerKind::Floating}) {
    Controller c = build_controller(kind, in, tgt);
    const Mission m{{2500.0, 5500.0}, 500.0, tgt, 60000.0};
    const SimulationRecord r = run_mission(m, flow, c, series, wall, cfg);
    const double bound = (0.5 + 0.1) * cfg.step_dt * (1 + 1e-6);
    for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
      CHECK(r.trajectory[k].t > r.trajectory[k - 1].t);
      CHECK(r.trajectory[k].t - r.trajectory[k - 1].t <= cfg.step_dt + 1e-9);
      CHECK(norm(r.trajectory[k].x - r.trajectory[k - 1].x) <= bound);
    }
    CHECK(r.outcome_time <= m.t0 + m.t_max);
    for (const ReplanEvent& e : r.replans) {
      CHECK(e.release_time <= e.t);
      CHECK(e.t_end <= m.t0 + m.t_max);
      CHECK(e.t_end <= e.release_time + series.horizon);
    }
    if (kind == ControllerKind::Floating) {
      CHECK(r.outcome == Outcome::Stranded);
    } else if (kind == ControllerKind::SwitchMTR) {
      // Everything lies within the 20 km threshold: the override always wins.
      CHECK(r.outcome != Outcome::Aborted);
      CHECK(std::all_of(r.trajectory.begin(), r.trajectory.end() - 1,
                        [](const TrajectoryPoint& p) { return p.branch == Branch::Safety; }));
    } else {
      CHECK(r.outcome == Outcome::Success);
      CHECK(r.replans.size() >= 2);
      CHECK(r.replans.front().t == 500.0);
    }
  }
}

TEST_CASE("run_batch partitions, is deterministic and independent of workers") {
  const SpatialGrid g{0.0, 0.0, 250.0, 250.0, 61, 41};
  const ObstacleMask wall = rect_mask(g, 9000.0, 9750.0, 2500.0, 7500.0);
  const FlowSource flow = make_highway(4000.0, 6000.0, {0.4, 0.0});
  BatchSpec spec;
  spec.inputs = inputs_on(g, 1800.0, wall);
  spec.sim = sim_over(g, 300.0);
  spec.master_seed = 99;
  ErrorModelConfig err;
  err.target_rmse = 0.1;
  err.correlation_length = 5000.0;
  spec.series = [&](const Mission& m, std::uint64_t seed) {
    ErrorModelConfig e = err;
    e.seed = seed;
    return gen_forecast_series(flow, e, 3600.0, 3 * 3600.0, {m.t0, m.t0 + m.t_max});
  };
  std::vector<Mission> missions;
  for (int k = 0; k < 8; ++k) {
    missions.push_back({{1000.0 + 500.0 * k, 3000.0 + 400.0 * k}, 100.0 * k, {{13000.0, 8000.0 - 300.0 * k}, 600.0}, 20000.0});
  }
  for (auto kind : {ControllerKind::MTR, ControllerKind::Floating}) {
    spec.kind = kind;
    spec.workers = 1;
    const auto a = run_batch(missions, flow, wall, spec);
    const auto b = run_batch(missions, flow, wall, spec);
    spec.workers = 3;
    const auto c = run_batch(missions, flow, wall, spec);
    REQUIRE(a.size() == missions.size());
    CHECK(tally(a).consistent());
    CHECK(tally(a).n_total == missions.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].outcome == b[i].outcome);
      CHECK(a[i].outcome == c[i].outcome);
      CHECK(a[i].outcome_time == c[i].outcome_time);
      REQUIRE(a[i].trajectory.size() == c[i].trajectory.size());
      CHECK(a[i].trajectory.back().x == c[i].trajectory.back().x);
    }
  }
  CHECK(mission_seed(1, 0) != mission_seed(1, 1));
  CHECK(mission_seed(1, 5) == mission_seed(1, 5));
}

TEST_CASE("batch errors become aborted records") {
  const SpatialGrid g{0.0, 0.0, 250.0, 250.0, 21, 21};
  BatchSpec spec;
  spec.kind = ControllerKind::MTR;  // no obstacle mask: build_controller throws
  spec.inputs.solver.grid = g;
  spec.sim = sim_over(g);
  spec.series = [](const Mission&, std::uint64_t) { return perfect_forecasts(make_uniform({0, 0}), 3600, 7200, {0, 7200}); };
  const auto r = run_batch({{{100.0, 100.0}, 0.0, {{4000.0, 4000.0}, 300.0}, 7200.0}}, make_uniform({0, 0}), empty_mask(g), spec);
  REQUIRE(r.size() == 1);
  CHECK(r[0].outcome == Outcome::Aborted);
  CHECK_FALSE(r[0].diagnostic.empty());
  CHECK(tally(r).n_aborted == 1);
}

TEST_CASE("stranding study") {
  const SpatialGrid g{0.0, 0.0, 500.0, 500.0, 41, 21};
  const Region region = Region::of(g);
  SimConfig cfg = sim_over(g, 600.0);

  const StrandingStudy calm = stranding_study(region, make_uniform({0, 0}), empty_mask(g), 50, 36000.0, 0.0, 72000.0, 1, cfg);
  CHECK(calm.n == 50);
  CHECK(calm.stranded == 0);
  CHECK(calm.left_region == 0);
  CHECK(calm.survived == 50);

  const ObstacleMask east = rect_mask(g, 19500.0, 20000.0, 0.0, 10000.0);
  const StrandingStudy wall = stranding_study(region, make_uniform({1.0, 0.0}), east, 60, 25000.0, 0.0, 50000.0, 2, cfg);
  CHECK(wall.stranded == 60);
  CHECK(wall.stranded_rate() == 1.0);
  const auto hits = std::accumulate(wall.heatmap.begin(), wall.heatmap.end(), std::uint64_t{0});
  CHECK(hits == 60);
  for (std::size_t n = 0; n < wall.heatmap.size(); ++n)
    if (wall.heatmap[n]) CHECK(east.cells[n]);

  const ObstacleMask island = rect_mask(g, 8000.0, 12000.0, 3000.0, 7000.0);
  const StrandingStudy mixed = stranding_study(region, make_uniform({0.3, 0.1}), island, 80, 30000.0, 0.0, 60000.0, 3, cfg);
  CHECK(mixed.stranded + mixed.left_region + mixed.survived == mixed.n);
  CHECK(mixed.stranded_rate() + mixed.left_rate() <= 1.0);
}

TEST_CASE("trajectory CSV") {
  testing::TempDir dir("traj");
  SimulationRecord r;
  r.trajectory.push_back({0.0, {1.0, 2.0}, {0.1, 0.0}, Branch::MTR, 3600.0});
  r.trajectory.push_back({600.0, {61.0, 2.0}, {0.0, 0.0}, Branch::Float, std::numeric_limits<double>::quiet_NaN()});
  write_trajectory_csv(r, dir / "t.csv");
  const std::string s = testing::slurp(dir / "t.csv");
  CHECK(s.rfind("t_s,x_m,y_m,ux_ms,uy_ms,branch,ttr_s\n", 0) == 0);
  CHECK(s.find(",mtr,3600") != std::string::npos);
  CHECK(s.find(",float,\n") != std::string::npos);
}
