#include "hjnav/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <thread>

#include "hjnav/error.hpp"

namespace hjnav {

double Region::boundary_distance(Vec2 p) const {
  if (!contains(p)) return 0.0;
  return std::min({p.x - x_min, x_max - p.x, p.y - y_min, y_max - p.y});
}

void SimConfig::validate() const {
  if (!(step_dt > 0.0)) throw ConfigError("step_dt must be positive");
  if (!(region.x_max > region.x_min) || !(region.y_max > region.y_min)) {
    throw ConfigError("simulation region is empty");
  }
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Stranded: return "stranded";
    case Outcome::Timeout: return "timeout";
    case Outcome::LeftRegion: return "left_region";
    case Outcome::Aborted: return "aborted";
  }
  return "?";
}

std::optional<Vec2> integrate_step(Vec2 x, Vec2 u, const FlowSource& truth, double t, double dt,
                                   Integrator method) {
  const Extent& e = truth.extent();
  auto inside = [&](Vec2 p) {
    return p.x >= e.x_min && p.x <= e.x_max && p.y >= e.y_min && p.y <= e.y_max;
  };
  try {
    auto f = [&](Vec2 p, double tt) { return truth.sample(p, tt) + u; };
    Vec2 next;
    if (method == Integrator::Euler) {
      next = x + f(x, t) * dt;
    } else {
      const Vec2 k1 = f(x, t);
      const Vec2 k2 = f(x + k1 * (0.5 * dt), t + 0.5 * dt);
      const Vec2 k3 = f(x + k2 * (0.5 * dt), t + 0.5 * dt);
      const Vec2 k4 = f(x + k3 * dt, t + dt);
      next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    if (!inside(next)) return std::nullopt;
    return next;
  } catch (const ExtentError&) {
    return std::nullopt;
  } catch (const HorizonError&) {
    return std::nullopt;
  }
}

namespace {

double state_ttr(const Controller& ctrl, Vec2 x, double t) {
  const auto plan = ctrl.plan();
  if (!plan || !plan->space().contains(x) || t > plan->t_end()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double j = plan->sample(x, t);
  if (plan->is_sentinel(j) || j > 0.0) return std::numeric_limits<double>::quiet_NaN();
  return plan->t_end() + j - t;
}

}  // namespace

SimulationRecord run_mission(const Mission& m, const FlowSource& truth, Controller& ctrl,
                             const ForecastSeries& series, const ObstacleMask& obstacles,
                             const SimConfig& cfg) {
  cfg.validate();
  if (!(m.t_max > 0.0)) throw ConfigError("mission t_max must be positive");
  SimulationRecord rec;
  const double deadline = m.t0 + m.t_max;
  const double eps = 1e-9 * std::max(1.0, std::abs(deadline));
  double t = m.t0;
  Vec2 x = m.x0;

  auto check = [&]() -> std::optional<Outcome> {
    if (obstacles.contains(x)) return Outcome::Stranded;
    if (m.target.contains(x)) return Outcome::Success;
    if (!cfg.region.contains(x)) return Outcome::LeftRegion;
    if (t >= deadline - eps) return Outcome::Timeout;
    return std::nullopt;
  };
  auto finish = [&](Outcome o, std::string why = {}) {
    rec.trajectory.push_back({t, x, {}, Branch::Float, state_ttr(ctrl, x, t)});
    rec.outcome = o;
    rec.outcome_time = t;
    rec.diagnostic = std::move(why);
    return rec;
  };
  if (auto o = check()) return finish(*o);

  // Replan at t0 and at each later release before the deadline.
  std::vector<double> replan_times{m.t0};
  for (const auto& r : series.releases) {
    if (r.time > m.t0 + eps && r.time < deadline - eps) replan_times.push_back(r.time);
  }
  std::size_t next_replan = 0;

  for (std::size_t step = 0;; ++step) {
    while (next_replan < replan_times.size() && t >= replan_times[next_replan] - eps) {
      ++next_replan;
      if (!ctrl.plans()) continue;
      try {
        const ForecastRelease& rel = current_forecast(series, t);
        const double t_end = std::min(rel.time + series.horizon, deadline);
        if (!(t_end > t)) throw HorizonError("forecast horizon exhausted before the deadline");
        ctrl.replan(rel.flow, t, t_end);
        rec.replans.push_back({t, rel.time, t_end});
      } catch (const Error& e) {
        return finish(Outcome::Aborted, std::string("replan failed: ") + e.what());
      }
    }
    Decision d;
    try {
      d = ctrl.control(x, t);
    } catch (const Error& e) {
      return finish(Outcome::Aborted, std::string("control failed: ") + e.what());
    }
    const Vec2 u = d.u.vector();
    rec.trajectory.push_back({t, x, u, d.branch, state_ttr(ctrl, x, t)});
    const double t_next = std::min(m.t0 + static_cast<double>(step + 1) * cfg.step_dt, deadline);
    const auto next = integrate_step(x, u, truth, t, t_next - t, cfg.integrator);
    t = t_next;
    if (!next) return finish(Outcome::LeftRegion);
    x = *next;
    if (auto o = check()) return finish(*o);
  }
}

std::uint64_t mission_seed(std::uint64_t master, std::size_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<SimulationRecord> run_batch(const std::vector<Mission>& missions,
                                        const FlowSource& truth, const ObstacleMask& obstacles,
                                        const BatchSpec& spec) {
  std::vector<SimulationRecord> out(missions.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < missions.size(); i = next++) {
      const Mission& m = missions[i];
      try {
        Controller ctrl = build_controller(spec.kind, spec.inputs, m.target);
        const ForecastSeries series = spec.series(m, mission_seed(spec.master_seed, i));
        out[i] = run_mission(m, truth, ctrl, series, obstacles, spec.sim);
      } catch (const std::exception& e) {
        SimulationRecord r;
        r.outcome = Outcome::Aborted;
        r.outcome_time = m.t0;
        r.diagnostic = e.what();
        out[i] = std::move(r);
      }
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(spec.workers,
                                                             static_cast<unsigned>(missions.size())));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

OutcomeTally tally(const std::vector<SimulationRecord>& records) {
  OutcomeTally t;
  t.n_total = records.size();
  for (const auto& r : records) {
    switch (r.outcome) {
      case Outcome::Success: ++t.n_success; break;
      case Outcome::Stranded: ++t.n_stranded; break;
      case Outcome::Timeout: ++t.n_timeout; break;
      case Outcome::LeftRegion: ++t.n_left_region; break;
      case Outcome::Aborted: ++t.n_aborted; break;
    }
  }
  return t;
}

StrandingStudy stranding_study(const Region& region, const FlowSource& truth,
                               const ObstacleMask& obstacles, std::size_t n, double horizon,
                               double t_begin, double t_end, std::uint64_t seed,
                               const SimConfig& cfg) {
  if (n == 0) throw ConfigError("stranding study needs n >= 1");
  if (!(horizon > 0.0)) throw ConfigError("stranding horizon must be positive");
  if (!(t_end - horizon >= t_begin)) throw ConfigError("time window shorter than the horizon");
  cfg.validate();
  StrandingStudy out;
  out.n = n;
  out.heatmap_grid = obstacles.grid;
  out.heatmap.assign(obstacles.grid.size(), 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
  std::uniform_real_distribution<double> ut(t_begin, t_end - horizon);
  for (std::size_t k = 0; k < n; ++k) {
    Vec2 x;
    std::size_t tries = 0;
    do {
      if (++tries > 100000) throw InfeasibleError("region has no obstacle-free start");
      x = {ux(rng), uy(rng)};
    } while (obstacles.contains(x));
    const double t0 = ut(rng);
    bool done = false;
    for (std::size_t s = 1; !done; ++s) {
      const double t = t0 + static_cast<double>(s - 1) * cfg.step_dt;
      const double t_next = std::min(t0 + static_cast<double>(s) * cfg.step_dt, t0 + horizon);
      const auto next = integrate_step(x, {}, truth, t, t_next - t, cfg.integrator);
      if (!next || !region.contains(*next)) {
        ++out.left_region;
        done = true;
      } else if (x = *next; obstacles.contains(x)) {
        ++out.stranded;
        const auto [i, j] = obstacles.grid.nearest(x);
        ++out.heatmap[obstacles.grid.index(i, j)];
        done = true;
      } else if (t_next >= t0 + horizon) {
        ++out.survived;
        done = true;
      }
    }
  }
  return out;
}

void write_trajectory_csv(const SimulationRecord& rec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "t_s,x_m,y_m,ux_ms,uy_ms,branch,ttr_s\n" << std::setprecision(12);
  for (const auto& p : rec.trajectory) {
    out << p.t << ',' << p.x.x << ',' << p.x.y << ',' << p.u.x << ',' << p.u.y << ','
        << to_string(p.branch) << ',';
    if (!std::isnan(p.ttr)) out << p.ttr;
    out << '\n';
  }
}

}  // namespace hjnav
