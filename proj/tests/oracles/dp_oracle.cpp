#include "dp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {

using hjnav::SpatialGrid;
using hjnav::Vec2;

namespace {

std::vector<Vec2> heading_set(int n) {
  std::vector<Vec2> out;
  for (int h = 0; h < n; ++h) {
    const double th = 2.0 * std::numbers::pi * h / n;
    out.push_back({std::cos(th), std::sin(th)});
  }
  return out;
}

// Nearest node as integer offsets of a metric displacement.
std::pair<long, long> round_cells(const SpatialGrid& g, Vec2 d) {
  return {std::lround(d.x / g.dx), std::lround(d.y / g.dy)};
}

}  // namespace

DpResult dp_solve(const hjnav::FlowSource& flow, const hjnav::ObstacleMask& obstacles,
                  const hjnav::TargetSpec& target, const DpConfig& cfg) {
  const SpatialGrid& g = cfg.grid;
  const std::size_t n = g.size();
  const double dt = (cfg.T - cfg.t0) / cfg.steps;
  std::vector<std::uint8_t> obst(n, 0), tgt(n, 0);
  bool any_target = false;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      obst[k] = obstacles.contains(g.node(i, j));
      tgt[k] = !obst[k] && target.contains(g.node(i, j));
      any_target = any_target || tgt[k];
    }
  }
  if (!any_target) {
    const auto [i, j] = g.nearest(target.center);
    if (!obst[g.index(i, j)]) tgt[g.index(i, j)] = 1;
  }

  std::vector<double> V(n), next(n);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      V[k] = obst[k] ? cfg.sentinel : (tgt[k] ? 0.0 : target.distance(g.node(i, j)));
    }
  }
  const auto dirs = heading_set(cfg.headings);
  for (int step = cfg.steps - 1; step >= 0; --step) {
    const double t = cfg.t0 + step * dt;
    for (std::size_t j = 0; j < g.ny; ++j) {
      for (std::size_t i = 0; i < g.nx; ++i) {
        const std::size_t k = g.index(i, j);
        if (obst[k]) {
          next[k] = cfg.sentinel;
          continue;
        }
        if (tgt[k]) {
          next[k] = V[k] - cfg.alpha * dt;
          continue;
        }
        const Vec2 v = flow.sample(g.node(i, j), t);
        double best = std::numeric_limits<double>::infinity();
        for (const Vec2& d : dirs) {
          const auto [di, dj] = round_cells(g, (v + d * cfg.u_max) * dt);
          const long ii = std::clamp<long>(static_cast<long>(i) + di, 0, static_cast<long>(g.nx) - 1);
          const long jj = std::clamp<long>(static_cast<long>(j) + dj, 0, static_cast<long>(g.ny) - 1);
          best = std::min(best, V[g.index(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj))]);
        }
        next[k] = best;
      }
    }
    V.swap(next);
  }
  DpResult out;
  out.dt = dt;
  out.value = V;
  out.doomed.resize(n);
  out.ttr.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < n; ++k) {
    out.doomed[k] = V[k] >= 0.5 * cfg.sentinel;
    if (V[k] <= 0.0) out.ttr[k] = cfg.T + V[k] - cfg.t0;
  }
  return out;
}

double lattice_speed_error(const SpatialGrid& g, Vec2 v, double u_max, double dt, int headings,
                           double direction, double half_width) {
  // Rounded displacements in metres, then their convex hull (monotone chain).
  std::vector<Vec2> pts;
  for (const Vec2& d : heading_set(headings)) {
    const auto [di, dj] = round_cells(g, (v + d * u_max) * dt);
    pts.push_back({static_cast<double>(di) * g.dx, static_cast<double>(dj) * g.dy});
  }
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto cross = [](Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); };
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 1 ? k - 1 : k);

  // Farthest intersection of the ray t*d with the hull boundary.
  auto hull_reach = [&](Vec2 d) {
    double best = -1.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Vec2 a = hull[i], b = hull[(i + 1) % hull.size()];
      const Vec2 e = b - a;
      const double den = d.x * e.y - d.y * e.x;
      if (std::abs(den) < 1e-12) continue;
      const double t = (a.x * e.y - a.y * e.x) / den;
      const double s = (a.x * d.y - a.y * d.x) / den;
      if (t > 0.0 && s >= -1e-12 && s <= 1.0 + 1e-12) best = std::max(best, t);
    }
    return best;
  };
  double worst = 0.0;
  for (int a = 0; a < 720; ++a) {
    const double th = std::numbers::pi * a / 360.0;
    if (std::abs(std::remainder(th - direction, 2.0 * std::numbers::pi)) > half_width) continue;
    const Vec2 d{std::cos(th), std::sin(th)};
    // Largest t with |t d - dt v| = dt u_max.
    const double b = dot(d, v) * dt;
    const double disc = b * b - (dot(v, v) - u_max * u_max) * dt * dt;
    if (disc < 0.0) continue;
    const double true_reach = b + std::sqrt(disc);
    if (true_reach <= 0.0) continue;
    const double q = hull_reach(d);
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::max(true_reach / q, q / true_reach) - 1.0);
  }
  return worst;
}

Comparison compare(const hjnav::ValueFunction& J, const DpResult& dp,
                   const hjnav::ObstacleMask& obstacles, const hjnav::TargetSpec& target,
                   const hjnav::FlowSource& flow, const DpConfig& cfg) {
  const SpatialGrid& g = cfg.grid;
  const hjnav::SafeTTRMap D = hjnav::safe_ttr(J, cfg.t0);
  const std::vector<double> vals = J.values_at(cfg.t0);
  const double horizon = cfg.T - cfg.t0;
  const double b_pde = std::max(g.dx, g.dy) / cfg.u_max;
  Comparison c;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const Vec2 p = g.node(i, j);
      if (!obstacles.contains(p)) {
        ++c.free_nodes;
        if (J.is_sentinel(vals[k]) == static_cast<bool>(dp.doomed[k])) ++c.doomed_agree;
      }
      if (std::isnan(dp.ttr[k]) || !D.valid[k]) continue;
      const Vec2 to = target.center - p;
      const double dist = hjnav::norm(to);
      double eps = 0.0;
      if (dist > target.radius) {
        const double dir = std::atan2(to.y, to.x);
        const double half = std::asin(std::min(1.0, (target.radius + std::max(g.dx, g.dy)) / dist)) + 0.1;
        for (Vec2 v : {flow.sample(p, cfg.t0), flow.sample(target.center, cfg.t0)}) {
          eps = std::max(eps, lattice_speed_error(g, v, cfg.u_max, dp.dt, cfg.headings, dir, half));
        }
      }
      const double tol = 2.0 * (dp.dt + eps * dp.ttr[k] + b_pde);
      if (!std::isfinite(tol) || dp.ttr[k] > horizon - tol || D.ttr[k] > horizon - tol) continue;
      ++c.compared;
      const double err = std::abs(dp.ttr[k] - D.ttr[k]);
      c.worst_ratio = std::max(c.worst_ratio, err / tol);
      if (err <= tol) ++c.within;
    }
  }
  return c;
}

}  // namespace oracle
