#include "hjnav/hjsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "binary_io.hpp"
#include "hjnav/error.hpp"

namespace hjnav {

void SolverConfig::validate() const {
  if (!(u_max >= 0.0)) throw ParameterError("u_max must be >= 0");
  if (!(d_max >= 0.0)) throw ParameterError("d_max must be >= 0");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ParameterError("cfl must lie in (0, 1]");
  if (!(sentinel > 0.0) || !std::isfinite(sentinel)) {
    throw ParameterError("sentinel must be a large finite positive value");
  }
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  if (!(snapshot_dt > 0.0)) throw ParameterError("snapshot_dt must be positive");
  if (!(min_dt >= 0.0)) throw ParameterError("min_dt must be >= 0");
  if (order != 1 && order != 2) throw ParameterError("order must be 1 or 2");
  if (capture_headings < 4) throw ParameterError("capture_headings must be >= 4");
  grid.validate();
  if (grid.nx < 2 || grid.ny < 2) throw ParameterError("solver grid needs nx, ny >= 2");
}

void TargetSpec::validate() const {
  if (!(radius > 0.0)) throw ParameterError("target radius must be positive");
}

double TargetSpec::distance(Vec2 p) const { return std::max(0.0, norm(p - center) - radius); }

ValueFunction::ValueFunction(SpaceTimeGrid grid, std::vector<double> values,
                             std::vector<std::uint8_t> obstacle, std::vector<std::uint8_t> target,
                             double sentinel)
    : grid_(grid),
      values_(std::move(values)),
      obstacle_(std::move(obstacle)),
      target_(std::move(target)),
      sentinel_(sentinel) {
  grid_.validate();
  if (values_.size() != grid_.size() || obstacle_.size() != grid_.space.size() ||
      target_.size() != grid_.space.size()) {
    throw ParameterError("value function arrays do not match grid");
  }
}

std::pair<std::size_t, double> ValueFunction::time_weight(double t) const {
  const double span = t_end() - t_start();
  const double slack = 1e-9 * std::max(1.0, span);
  if (!(t >= t_start() - slack && t <= t_end() + slack)) {
    throw HorizonError("time " + std::to_string(t) + " outside value function horizon [" +
                       std::to_string(t_start()) + ", " + std::to_string(t_end()) + "]");
  }
  if (grid_.nt < 2) return {0, 0.0};
  const double s =
      std::clamp((t - grid_.t0) / grid_.dt_snap, 0.0, static_cast<double>(grid_.nt - 1));
  const auto k = std::min(static_cast<std::size_t>(s), grid_.nt - 2);
  return {k, s - static_cast<double>(k)};
}

std::vector<double> ValueFunction::values_at(double t) const {
  const auto [k, w] = time_weight(t);
  const std::size_t n = grid_.space.size();
  if (w == 0.0) return {slice(k), slice(k) + n};
  if (w == 1.0) return {slice(k + 1), slice(k + 1) + n};
  std::vector<double> out(n);
  const double* a = slice(k);
  const double* b = slice(k + 1);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (is_sentinel(a[i]) || is_sentinel(b[i])) ? sentinel_ : (1.0 - w) * a[i] + w * b[i];
  }
  return out;
}

double ValueFunction::sample(Vec2 p, double t) const {
  const auto [k, w] = time_weight(t);
  const auto& g = grid_.space;
  const Bilinear b = locate(g, p);
  const std::size_t i1 = std::min(b.i + 1, g.nx - 1);
  const std::size_t j1 = std::min(b.j + 1, g.ny - 1);
  auto at_slice = [&](std::size_t kk, double& out) {
    const double v00 = at(kk, b.i, b.j), v10 = at(kk, i1, b.j);
    const double v01 = at(kk, b.i, j1), v11 = at(kk, i1, j1);
    if (is_sentinel(v00) || is_sentinel(v10) || is_sentinel(v01) || is_sentinel(v11)) {
      return false;
    }
    out = (1 - b.fx) * (1 - b.fy) * v00 + b.fx * (1 - b.fy) * v10 + (1 - b.fx) * b.fy * v01 +
          b.fx * b.fy * v11;
    return true;
  };
  double lo = 0.0, hi = 0.0;
  if (!at_slice(k, lo)) return sentinel_;
  if (w == 0.0 || grid_.nt < 2) return lo;
  if (!at_slice(k + 1, hi)) return sentinel_;
  return (1.0 - w) * lo + w * hi;
}

namespace {

struct Neighbours {
  std::size_t left, right, down, up;  // equal to the node itself at domain edges
};

Neighbours neighbours(const SpatialGrid& g, std::size_t n) {
  const std::size_t i = n % g.nx;
  const std::size_t j = n / g.nx;
  return {i > 0 ? n - 1 : n, i + 1 < g.nx ? n + 1 : n, j > 0 ? n - g.nx : n,
          j + 1 < g.ny ? n + g.nx : n};
}

// Range of p_a / |p| over the box spanned by the one-sided differences.
// |dH/dp_a| = |-v_a + ce * p_a / |p||, so its maximum over the box follows.
struct DirectionRange {
  double lo, hi;
};

DirectionRange direction_range(double a1, double a2, double b1, double b2) {
  const double a_lo = std::min(a1, a2), a_hi = std::max(a1, a2);
  const double b_lo = std::min(b1, b2), b_hi = std::max(b1, b2);
  if (a_lo <= 0.0 && a_hi >= 0.0 && b_lo <= 0.0 && b_hi >= 0.0) return {-1.0, 1.0};
  double lo = 1.0, hi = -1.0;
  auto take = [&](double a, double b) {
    const double r2 = a * a + b * b;
    const double q = r2 > 0.0 ? a / std::sqrt(r2) : 0.0;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  };
  take(a_lo, b_lo);
  take(a_lo, b_hi);
  take(a_hi, b_lo);
  take(a_hi, b_hi);
  if (b_lo <= 0.0 && b_hi >= 0.0) {
    take(a_lo, 0.0);
    take(a_hi, 0.0);
  }
  return {lo, hi};
}

class MtrSolver {
 public:
  MtrSolver(const FlowSource& flow, const ObstacleMask& obstacles, const TargetSpec& target,
            const SolverConfig& cfg)
      : flow_(flow), cfg_(cfg), g_(cfg.grid), n_(g_.size()) {
    obstacle_.assign(n_, 0);
    target_.assign(n_, 0);
    std::size_t n_target = 0;
    bool any_obstacle = false;
    for (std::size_t j = 0; j < g_.ny; ++j) {
      for (std::size_t i = 0; i < g_.nx; ++i) {
        const std::size_t n = g_.index(i, j);
        const Vec2 p = g_.node(i, j);
        obstacle_[n] = obstacles.contains(p) ? 1 : 0;
        any_obstacle = any_obstacle || obstacle_[n];
        if (!obstacle_[n] && target.contains(p)) {
          target_[n] = 1;
          ++n_target;
        }
      }
    }
    // A target smaller than a cell still occupies its nearest node.
    forced_target_ = std::numeric_limits<std::size_t>::max();
    if (n_target == 0 && g_.contains(target.center)) {
      const auto [i, j] = g_.nearest(target.center);
      const std::size_t n = g_.index(i, j);
      if (!obstacle_[n]) {
        target_[n] = 1;
        forced_target_ = n;
      }
    }
    track_capture_ = any_obstacle;

    // Positive values are solved in time units (distance / (u - d)) so J has
    // no slope jump across its zero level set; save() converts back.
    const double ce = cfg_.u_max - cfg_.d_max;
    scale_ = ce > 0.0 ? cfg_.alpha / ce : 1.0;
    const double s = cfg_.sentinel;
    J_.resize(n_);
    terminal_.reserve(n_);
    dead_.assign(n_, 0);
    for (std::size_t j = 0; j < g_.ny; ++j) {
      for (std::size_t i = 0; i < g_.nx; ++i) {
        const std::size_t n = g_.index(i, j);
        if (obstacle_[n]) {
          J_[n] = s;
          dead_[n] = 1;
        } else {
          J_[n] = n == forced_target_ ? 0.0 : target.distance(g_.node(i, j));
        }
        terminal_.push_back(J_[n]);
        J_[n] *= J_[n] < s ? scale_ : 1.0;
      }
    }
    if (track_capture_) {
      capture_.resize(n_);
      for (std::size_t n = 0; n < n_; ++n) capture_[n] = obstacle_[n] ? 1.0 : 0.0;
      const int k = cfg_.capture_headings;
      for (int h = 0; h < k; ++h) {
        const double th = 2.0 * std::numbers::pi * h / k;
        headings_.push_back({std::cos(th), std::sin(th)});
      }
    }
  }

  ValueFunction run(double t_start, double t_end) {
    const double span = t_end - t_start;
    const auto nt = static_cast<std::size_t>(std::ceil(span / cfg_.snapshot_dt - 1e-9)) + 1;
    SpaceTimeGrid grid{g_, t_start, span / static_cast<double>(std::max<std::size_t>(nt - 1, 1)),
                       std::max<std::size_t>(nt, 2)};
    std::vector<double> store(grid.size());
    auto save = [&](std::size_t k) {
      double* out = store.data() + k * n_;
      for (std::size_t n = 0; n < n_; ++n) {
        const double v = J_[n];
        out[n] = v > 0.0 && !dead_[n] ? v / scale_ : v;
      }
    };
    std::copy(terminal_.begin(), terminal_.end(), store.begin() + (grid.nt - 1) * n_);

    const bool steady = flow_.is_steady();
    if (steady) flow_.sample_nodes(g_, t_end, vel_);
    double t = t_end;
    for (std::size_t k = grid.nt - 1; k-- > 0;) {
      const double t_next = k == 0 ? t_start : grid.t_at(k);
      while (t > t_next) {
        if (!steady) flow_.sample_nodes(g_, t, vel_);
        const double rate = cfl_rate();
        const double remaining = t - t_next;
        double dt = remaining;
        if (rate > 0.0) {
          const double dt_cfl = cfg_.cfl / rate;
          if (dt_cfl < cfg_.min_dt) {
            throw ResolutionError("CFL step " + std::to_string(dt_cfl) + " s below floor " +
                                  std::to_string(cfg_.min_dt) + " s");
          }
          if (dt_cfl < remaining) dt = dt_cfl;
        }
        step(dt);
        t = dt == remaining ? t_next : t - dt;
        // Nothing can earn more than the in-target reward; ENO2 can
        // undershoot it beside small targets in fast currents.
        const double floor = -cfg_.alpha * (t_end - t);
        for (std::size_t n = 0; n < n_; ++n) {
          if (target_[n]) J_[n] = floor;
          else if (!dead_[n] && J_[n] < floor) J_[n] = floor;
        }
      }
      save(k);
    }
    return ValueFunction(grid, std::move(store), obstacle_, target_, cfg_.sentinel);
  }

 private:
  double cfl_rate() const {
    const double a = cfg_.u_max + cfg_.d_max;
    double worst = 0.0;
    for (const Vec2& v : vel_) {
      worst = std::max(worst, (std::abs(v.x) + a) / g_.dx + (std::abs(v.y) + a) / g_.dy);
    }
    return worst;
  }

  // dJ/dtau for every node of `J` (tau = T - t runs backward).
  void rates(const std::vector<double>& J, std::vector<double>& out) const {
    const double ce = cfg_.u_max - cfg_.d_max;
    const bool eno = cfg_.order == 2;
    out.assign(n_, 0.0);
    for (std::size_t n = 0; n < n_; ++n) {
      if (obstacle_[n] || dead_[n]) continue;
      if (target_[n]) {
        out[n] = -cfg_.alpha;
        continue;
      }
      const std::size_t i = n % g_.nx;
      const std::size_t j = n / g_.nx;
      const auto [pxm, pxp] = one_sided(J, n, i, g_.nx, 1, g_.dx, eno);
      const auto [pym, pyp] = one_sided(J, n, j, g_.ny, g_.nx, g_.dy, eno);
      const double px = 0.5 * (pxm + pxp);
      const double py = 0.5 * (pym + pyp);
      const Vec2 v = vel_[n];
      const double h = -(px * v.x + py * v.y) + ce * std::sqrt(px * px + py * py);
      const DirectionRange rx = direction_range(pxm, pxp, pym, pyp);
      const DirectionRange ry = direction_range(pym, pyp, pxm, pxp);
      const double ax = std::max(std::abs(-v.x + ce * rx.lo), std::abs(-v.x + ce * rx.hi));
      const double ay = std::max(std::abs(-v.y + ce * ry.lo), std::abs(-v.y + ce * ry.hi));
      const double diss = 0.5 * ax * (pxp - pxm) + 0.5 * ay * (pyp - pym);
      out[n] = diss - h;
    }
  }

  // Backward and forward differences along one axis. Dead neighbours and
  // the domain edge act as ghosts equal to the centre value. With `eno`,
  // the second-order ENO correction is added where the wider stencil is live.
  std::pair<double, double> one_sided(const std::vector<double>& J, std::size_t n, std::size_t i,
                                      std::size_t len, std::size_t stride, double h,
                                      bool eno) const {
    const double c = J[n];
    auto live = [&](std::ptrdiff_t off) {
      const auto k = static_cast<std::ptrdiff_t>(i) + off;
      if (k < 0 || k >= static_cast<std::ptrdiff_t>(len)) return false;
      return !dead_[n + static_cast<std::size_t>(off * static_cast<std::ptrdiff_t>(stride))];
    };
    auto val = [&](std::ptrdiff_t off) {
      return J[n + static_cast<std::size_t>(off * static_cast<std::ptrdiff_t>(stride))];
    };
    const bool l1 = live(-1), r1 = live(1);
    const double jl = l1 ? val(-1) : c;
    const double jr = r1 ? val(1) : c;
    double m = (c - jl) / h;
    double p = (jr - c) / h;
    if (!eno || !l1 || !r1) return {m, p};
    const double d_mid = jr - 2.0 * c + jl;
    auto smaller = [](double a, double b) { return std::abs(a) <= std::abs(b) ? a : b; };
    const double d_left = live(-2) ? c - 2.0 * jl + val(-2) : d_mid;
    const double d_right = live(2) ? val(2) - 2.0 * jr + c : d_mid;
    m += smaller(d_left, d_mid) / (2.0 * h);
    p -= smaller(d_mid, d_right) / (2.0 * h);
    return {m, p};
  }

  // Heun (TVD RK2) step in tau.
  void step(double dt) {
    rates(J_, rate1_);
    stage_ = J_;
    for (std::size_t n = 0; n < n_; ++n) stage_[n] += dt * rate1_[n];
    rates(stage_, rate2_);
    for (std::size_t n = 0; n < n_; ++n) {
      if (obstacle_[n] || dead_[n]) continue;
      J_[n] = 0.5 * (J_[n] + stage_[n] + dt * rate2_[n]);
    }
    if (track_capture_) transport_capture(dt, cfg_.u_max - cfg_.d_max);
  }

  // Obstacle indicator evolves under dc/dtau = min_w w . grad c with
  // w = v + ce * heading, upwinded per heading.
  void transport_capture(double dt, double ce) {
    next_c_ = capture_;
    const double radius = std::abs(ce);
    const bool minimize = ce >= 0.0;
    for (std::size_t n = 0; n < n_; ++n) {
      if (obstacle_[n] || target_[n]) continue;
      const Neighbours nb = neighbours(g_, n);
      const double c = capture_[n];
      const double cl = capture_[nb.left], cr = capture_[nb.right];
      const double cd = capture_[nb.down], cu = capture_[nb.up];
      if (c == 0.0 && cl == 0.0 && cr == 0.0 && cd == 0.0 && cu == 0.0) continue;
      const double pxm = (c - cl) / g_.dx, pxp = (cr - c) / g_.dx;
      const double pym = (c - cd) / g_.dy, pyp = (cu - c) / g_.dy;
      const Vec2 v = vel_[n];
      double best = minimize ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
      for (const Vec2& hd : headings_) {
        const double wx = v.x + radius * hd.x;
        const double wy = v.y + radius * hd.y;
        const double r = (wx > 0 ? wx * pxp : wx * pxm) + (wy > 0 ? wy * pyp : wy * pym);
        best = minimize ? std::min(best, r) : std::max(best, r);
      }
      next_c_[n] = std::clamp(c + dt * best, 0.0, 1.0);
    }
    capture_.swap(next_c_);

    const double s = cfg_.sentinel;
    for (std::size_t n = 0; n < n_; ++n) {
      if (obstacle_[n] || target_[n]) continue;
      const bool doomed = capture_[n] >= 0.5;
      if (doomed && !dead_[n]) {
        dead_[n] = 1;
        J_[n] = s;
      } else if (!doomed && dead_[n]) {
        // Leaving the capture set (time-varying flow): reseed from the
        // largest live neighbour, which over-approximates the cost.
        const Neighbours nb = neighbours(g_, n);
        double seed = -std::numeric_limits<double>::infinity();
        for (std::size_t m : {nb.left, nb.right, nb.down, nb.up}) {
          if (m != n && !dead_[m]) seed = std::max(seed, J_[m]);
        }
        if (std::isfinite(seed)) {
          dead_[n] = 0;
          J_[n] = seed;
        }
      }
    }
  }

  const FlowSource& flow_;
  const SolverConfig& cfg_;
  const SpatialGrid& g_;
  std::size_t n_;
  std::size_t forced_target_;
  double scale_ = 1.0;
  bool track_capture_ = false;
  std::vector<std::uint8_t> obstacle_, target_, dead_;
  std::vector<double> terminal_, J_, stage_, rate1_, rate2_, capture_, next_c_;
  std::vector<Vec2> vel_, headings_;
};

}  // namespace

ValueFunction solve_mtr(const FlowSource& flow, const ObstacleMask& obstacles,
                        const TargetSpec& target, const SolverConfig& config, double t_start,
                        double t_end) {
  config.validate();
  target.validate();
  if (!(t_start < t_end)) throw ParameterError("solve requires t_start < T");
  const Extent& e = flow.extent();
  if (!flow.clamp_time() && !e.covers_time(t_start, t_end)) {
    throw HorizonError("flow covers [" + std::to_string(e.t_min) + ", " + std::to_string(e.t_max) +
                       "] s but the solve needs [" + std::to_string(t_start) + ", " +
                       std::to_string(t_end) + "] s");
  }
  const SpatialGrid& g = config.grid;
  if (g.x0 < e.x_min) throw ExtentError("x", g.x0, e.x_min, e.x_max);
  if (g.x_max() > e.x_max) throw ExtentError("x", g.x_max(), e.x_min, e.x_max);
  if (g.y0 < e.y_min) throw ExtentError("y", g.y0, e.y_min, e.y_max);
  if (g.y_max() > e.y_max) throw ExtentError("y", g.y_max(), e.y_min, e.y_max);
  MtrSolver solver(flow, obstacles, target, config);
  return solver.run(t_start, t_end);
}

SafeTTRMap safe_ttr(const ValueFunction& J, double t) {
  const std::vector<double> vals = J.values_at(t);
  SafeTTRMap out{J.space(), t, std::vector<double>(vals.size(), std::numeric_limits<double>::quiet_NaN()),
                 std::vector<std::uint8_t>(vals.size(), 0)};
  const double T = J.t_end();
  for (std::size_t n = 0; n < vals.size(); ++n) {
    if (vals[n] <= 0.0 && !J.is_sentinel(vals[n])) {
      out.ttr[n] = std::max(0.0, T + vals[n] - t);
      out.valid[n] = 1;
    }
  }
  return out;
}

CellSet brt(const ValueFunction& J, double t) {
  const std::vector<double> vals = J.values_at(t);
  CellSet out{J.space(), std::vector<std::uint8_t>(vals.size(), 0)};
  for (std::size_t n = 0; n < vals.size(); ++n) out.cells[n] = vals[n] <= 0.0 ? 1 : 0;
  return out;
}

std::vector<double> latest_departure_ttr(const ValueFunction& J) {
  const auto& grid = J.grid();
  const std::size_t n_nodes = grid.space.size();
  std::vector<double> out(n_nodes, std::numeric_limits<double>::quiet_NaN());
  const double T = J.t_end();
  for (std::size_t n = 0; n < n_nodes; ++n) {
    for (std::size_t k = grid.nt; k-- > 0;) {
      const double v = J.slice(k)[n];
      if (v > 0.0) continue;
      if (k + 1 == grid.nt) {
        out[n] = 0.0;
        break;
      }
      const double later = J.slice(k + 1)[n];
      double t_cross = grid.t_at(k);
      if (!J.is_sentinel(later)) t_cross += grid.dt_snap * (-v) / (later - v);
      out[n] = T - t_cross;
      break;
    }
  }
  return out;
}

std::size_t monotonicity_violations(const ValueFunction& J, double tol) {
  const auto& grid = J.grid();
  const std::size_t n_nodes = grid.space.size();
  std::size_t count = 0;
  for (std::size_t n = 0; n < n_nodes; ++n) {
    if (J.obstacle_cells()[n]) continue;
    for (std::size_t k = 0; k + 1 < grid.nt; ++k) {
      const double early = J.slice(k)[n];
      const double late = J.slice(k + 1)[n];
      if (J.is_sentinel(early) || J.is_sentinel(late)) continue;
      if (early > late + tol * (1.0 + std::abs(late))) ++count;
    }
  }
  return count;
}

void write_value_file(const ValueFunction& J, const std::filesystem::path& path) {
  const auto& g = J.grid();
  detail::ByteWriter out;
  out.magic("VFN1");
  out.u32(static_cast<std::uint32_t>(g.space.nx));
  out.u32(static_cast<std::uint32_t>(g.space.ny));
  out.u32(static_cast<std::uint32_t>(g.nt));
  out.f64(g.space.x0);
  out.f64(g.space.dx);
  out.f64(g.space.y0);
  out.f64(g.space.dy);
  out.f64(g.t0);
  out.f64(g.dt_snap);
  for (double v : J.values()) out.f32(static_cast<float>(v));
  out.save(path);
}

ValueFunction read_value_file(const std::filesystem::path& path, double sentinel) {
  detail::ByteReader in(path);
  in.expect_magic("VFN1");
  SpaceTimeGrid g;
  g.space.nx = in.u32("nx");
  g.space.ny = in.u32("ny");
  g.nt = in.u32("nt");
  g.space.x0 = in.f64("x0");
  g.space.dx = in.f64("dx");
  g.space.y0 = in.f64("y0");
  g.space.dy = in.f64("dy");
  g.t0 = in.f64("t0");
  g.dt_snap = in.f64("dt_snap");
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), 4);
  }
  in.need(static_cast<std::uint64_t>(g.size()) * sizeof(float), "payload");
  std::vector<double> values(g.size());
  for (auto& v : values) v = in.f32("value");
  if (in.remaining() != 0) throw FormatError("trailing bytes after payload", in.offset());
  const std::size_t n = g.space.size();
  std::vector<std::uint8_t> obstacle(n, 1), target(n, 0);
  for (std::size_t k = 0; k < g.nt; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (values[k * n + i] < 0.5 * sentinel) obstacle[i] = 0;
    }
  }
  const std::size_t last = (g.nt - 1) * n;
  for (std::size_t i = 0; i < n; ++i) target[i] = values[last + i] == 0.0 ? 1 : 0;
  return ValueFunction(g, std::move(values), std::move(obstacle), std::move(target), sentinel);
}

}  // namespace hjnav
