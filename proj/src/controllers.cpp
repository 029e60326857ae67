#include "hjnav/controllers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>

#include "hjnav/error.hpp"

namespace hjnav {

namespace {

ControlInput toward(Vec2 direction, double u_max) {
  return {std::atan2(direction.y, direction.x), u_max};
}

Vec2 node_gradient(const ValueFunction& J, std::size_t k, std::size_t i, std::size_t j) {
  const SpatialGrid& g = J.space();
  const double c = J.at(k, i, j);
  auto axis = [&](bool has_lo, double lo, bool has_hi, double hi, double h) {
    has_lo = has_lo && !J.is_sentinel(lo);
    has_hi = has_hi && !J.is_sentinel(hi);
    if (has_lo && has_hi) return (hi - lo) / (2.0 * h);
    if (has_hi) return (hi - c) / h;
    if (has_lo) return (c - lo) / h;
    return 0.0;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool l = i > 0, r = i + 1 < g.nx, d = j > 0, u = j + 1 < g.ny;
  return {axis(l, l ? J.at(k, i - 1, j) : nan, r, r ? J.at(k, i + 1, j) : nan, g.dx),
          axis(d, d ? J.at(k, i, j - 1) : nan, u, u ? J.at(k, i, j + 1) : nan, g.dy)};
}

Vec2 slice_gradient(const ValueFunction& J, std::size_t k, const Bilinear& b) {
  const SpatialGrid& g = J.space();
  const std::size_t i1 = std::min(b.i + 1, g.nx - 1);
  const std::size_t j1 = std::min(b.j + 1, g.ny - 1);
  const std::array<std::size_t, 4> is{b.i, i1, b.i, i1};
  const std::array<std::size_t, 4> js{b.j, b.j, j1, j1};
  const std::array<double, 4> ws{(1 - b.fx) * (1 - b.fy), b.fx * (1 - b.fy), (1 - b.fx) * b.fy,
                                 b.fx * b.fy};
  Vec2 sum;
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (ws[c] == 0.0 || J.is_sentinel(J.at(k, is[c], js[c]))) continue;
    sum += node_gradient(J, k, is[c], js[c]) * ws[c];
    total += ws[c];
  }
  return total > 0.0 ? sum * (1.0 / total) : Vec2{};
}

void check_on_grid(const SpatialGrid& g, Vec2 x) {
  if (x.x < g.x0 || x.x > g.x_max()) throw ExtentError("x", x.x, g.x0, g.x_max());
  if (x.y < g.y0 || x.y > g.y_max()) throw ExtentError("y", x.y, g.y0, g.y_max());
}

}  // namespace

Vec2 value_gradient(const ValueFunction& J, Vec2 x, double t) {
  const SpatialGrid& g = J.space();
  check_on_grid(g, x);
  const auto [k, w] = J.time_weight(t);
  const auto [ni, nj] = g.nearest(x);
  if (J.is_sentinel(J.at(k, ni, nj)) || (w > 0.0 && J.is_sentinel(J.at(k + 1, ni, nj)))) {
    throw StrandedError("state lies on an unreachable (sentinel) cell");
  }
  const Bilinear b = locate(g, x);
  const Vec2 g0 = slice_gradient(J, k, b);
  if (w == 0.0) return g0;
  return g0 * (1.0 - w) + slice_gradient(J, k + 1, b) * w;
}

ControlInput mtr_policy(const ValueFunction& J, Vec2 x, double t, double u_max) {
  const Vec2 grad = value_gradient(J, x, t);
  if (norm(grad) < kGradEps) return {0.0, 0.0};
  return toward(grad * -1.0, u_max);
}

ControlInput floating_policy() { return {0.0, 0.0}; }

std::optional<ControlInput> safety_override(const DistanceMap& dmap, double threshold, Vec2 x,
                                            double u_max) {
  if (!(dmap.sample(x) < threshold)) return std::nullopt;
  const Vec2 grad = dmap.gradient(x);
  if (norm(grad) < kGradEps) return std::nullopt;
  return toward(grad, u_max);
}

ControlInput switching_policy(const std::function<ControlInput(Vec2, double)>& inner,
                              const DistanceMap& dmap, double threshold, Vec2 x, double t,
                              double u_max) {
  if (auto safe = safety_override(dmap, threshold, x, u_max)) return *safe;
  return inner(x, t);
}

std::string_view to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Floating: return "Floating";
    case ControllerKind::MTR: return "MTR";
    case ControllerKind::MTRNoObs: return "MTR-no-Obs";
    case ControllerKind::SwitchMTR: return "Switch-MTR";
    case ControllerKind::SwitchMTRNoObs: return "Switch-MTR-no-Obs";
    case ControllerKind::SmallDistMTR: return "SmallDist-MTR";
  }
  return "?";
}

ControllerKind parse_controller_kind(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c != '-' && c != '_') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  };
  const std::string key = lower(name);
  for (auto k : {ControllerKind::Floating, ControllerKind::MTR, ControllerKind::MTRNoObs,
                 ControllerKind::SwitchMTR, ControllerKind::SwitchMTRNoObs,
                 ControllerKind::SmallDistMTR}) {
    if (lower(to_string(k)) == key) return k;
  }
  throw ConfigError("unknown controller '" + std::string(name) + "'");
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Float: return "float";
    case Branch::MTR: return "mtr";
    case Branch::Safety: return "safety";
    case Branch::Escape: return "escape";
  }
  return "?";
}

Controller::Controller(ControllerKind kind, SolverConfig cfg, ObstacleMask mask,
                       std::optional<DistanceMap> dmap, double threshold, TargetSpec target)
    : kind_(kind),
      cfg_(std::move(cfg)),
      mask_(std::move(mask)),
      dmap_(std::move(dmap)),
      threshold_(threshold),
      target_(target) {}

void Controller::replan(const FlowSource& forecast, double t, double t_end) {
  if (!plans()) return;
  plan_ = std::make_shared<const ValueFunction>(solve_mtr(forecast, mask_, target_, cfg_, t, t_end));
}

Decision Controller::control(Vec2 x, double t) const {
  if (!plans()) return {floating_policy(), Branch::Float};
  if (dmap_) {
    if (auto safe = safety_override(*dmap_, threshold_, x, cfg_.u_max)) {
      return {*safe, Branch::Safety};
    }
  }
  if (!plan_) throw ConfigError("controller queried before its first replan");
  try {
    return {mtr_policy(*plan_, x, t, cfg_.u_max), Branch::MTR};
  } catch (const StrandedError&) {
    return escape(x, t);
  }
}

Decision Controller::escape(Vec2 x, double t) const {
  const std::vector<double> vals = plan_->values_at(t);
  const SpatialGrid& g = plan_->space();
  double best = std::numeric_limits<double>::infinity();
  Vec2 goal;
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (plan_->is_sentinel(vals[g.index(i, j)])) continue;
      const double d = norm(g.node(i, j) - x);
      if (d < best) {
        best = d;
        goal = g.node(i, j);
      }
    }
  }
  if (!std::isfinite(best) || best == 0.0) return {{0.0, 0.0}, Branch::Escape};
  return {toward(goal - x, cfg_.u_max), Branch::Escape};
}

Controller build_controller(ControllerKind kind, const ControllerInputs& in,
                            const TargetSpec& target) {
  const bool needs_mask = kind == ControllerKind::MTR || kind == ControllerKind::SwitchMTR ||
                          kind == ControllerKind::SmallDistMTR;
  const bool needs_dmap = kind == ControllerKind::SwitchMTR || kind == ControllerKind::SwitchMTRNoObs;
  const std::string name(to_string(kind));
  if (needs_mask && !in.obstacles) throw ConfigError(name + " needs an obstacle mask");
  if (needs_dmap && !in.distance) throw ConfigError(name + " needs a distance map");
  if (kind != ControllerKind::Floating) {
    in.solver.validate();
    target.validate();
  }
  SolverConfig cfg = in.solver;
  if (kind == ControllerKind::SmallDistMTR) cfg.d_max = in.small_disturbance;
  ObstacleMask mask = needs_mask ? dilate(*in.obstacles, in.margin_cells) : empty_mask(in.solver.grid);
  return Controller(kind, cfg, std::move(mask), needs_dmap ? in.distance : std::nullopt,
                    in.switch_threshold, target);
}

}  // namespace hjnav
