#include "hjnav/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "binary_io.hpp"
#include "hjnav/error.hpp"

namespace hjnav {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec2 sample_gridded(const GriddedFlow& f, Vec2 p, double t) {
  const auto& g = f.grid;
  const Bilinear b = locate(g.space, p);
  std::size_t k = 0;
  double ft = 0.0;
  if (g.nt >= 2) {
    const double s = std::clamp((t - g.t0) / g.dt_snap, 0.0, static_cast<double>(g.nt - 1));
    k = std::min(static_cast<std::size_t>(s), g.nt - 2);
    ft = s - static_cast<double>(k);
  }
  const std::size_t nx = g.space.nx;
  const std::size_t i1 = std::min(b.i + 1, nx - 1);
  const std::size_t j1 = std::min(b.j + 1, g.space.ny - 1);
  auto slice = [&](std::size_t kk, const std::vector<float>& a) {
    const std::size_t base = kk * g.space.size();
    const double v00 = a[base + b.j * nx + b.i];
    const double v10 = a[base + b.j * nx + i1];
    const double v01 = a[base + j1 * nx + b.i];
    const double v11 = a[base + j1 * nx + i1];
    return (1.0 - b.fx) * (1.0 - b.fy) * v00 + b.fx * (1.0 - b.fy) * v10 +
           (1.0 - b.fx) * b.fy * v01 + b.fx * b.fy * v11;
  };
  auto component = [&](const std::vector<float>& a) {
    const double lo = slice(k, a);
    if (ft == 0.0) return lo;
    const double hi = slice(k + 1, a);
    if (ft == 1.0) return hi;
    return (1.0 - ft) * lo + ft * hi;
  };
  return {component(f.u), component(f.v)};
}

Vec2 sample_analytical(const AnalyticalFlow& a, Vec2 p, double t) {
  return std::visit(
      Overloaded{
          [](const UniformFlow& f) { return f.velocity; },
          [&](const HighwayFlow& f) {
            return (p.y >= f.y1 && p.y <= f.y2) ? f.velocity : Vec2{};
          },
          [&](const DoubleGyreFlow& f) {
            const double xs = p.x / f.scale;
            const double ys = p.y / f.scale;
            const double s = f.epsilon * std::sin(f.omega * t);
            const double a2 = s;
            const double b1 = 1.0 - 2.0 * s;
            const double fx = a2 * xs * xs + b1 * xs;
            const double dfx = 2.0 * a2 * xs + b1;
            const double amp = kPi * f.amplitude;
            return Vec2{-amp * std::sin(kPi * fx) * std::cos(kPi * ys),
                        amp * std::cos(kPi * fx) * std::sin(kPi * ys) * dfx};
          },
      },
      a);
}

Extent extent_of(const SpaceTimeGrid& g) {
  return {g.space.x0, g.space.x_max(), g.space.y0, g.space.y_max(), g.t0, g.t_max()};
}

}  // namespace

void SpaceTimeGrid::validate() const {
  space.validate();
  if (space.nx < 2 || space.ny < 2) throw ParameterError("space-time grid needs nx, ny >= 2");
  if (nt < 1) throw ParameterError("space-time grid needs nt >= 1");
  if (!(dt_snap > 0.0)) throw ParameterError("snapshot spacing must be positive");
  if (!std::isfinite(t0)) throw ParameterError("grid start time not finite");
}

void GriddedFlow::validate() const {
  grid.validate();
  if (u.size() != grid.size() || v.size() != grid.size()) {
    throw ParameterError("velocity arrays must hold nt*ny*nx values");
  }
  auto finite = [](float x) { return std::isfinite(x); };
  if (!std::all_of(u.begin(), u.end(), finite) || !std::all_of(v.begin(), v.end(), finite)) {
    throw ParameterError("velocity arrays contain non-finite values");
  }
}

Vec2 FourierField::eval(Vec2 p) const {
  Vec2 out;
  for (const auto& m : modes) {
    const double arg = m.kx * p.x + m.ky * p.y;
    out.x += std::cos(arg + m.phase_u);
    out.y += std::cos(arg + m.phase_v);
  }
  return out * amplitude;
}

void FourierField::add_on_nodes(const SpatialGrid& grid, std::vector<Vec2>& out) const {
  // cos(kx x + ky y + phase) = Re(e^{i phase} e^{i ky y} e^{i kx x}).
  std::vector<double> cx(grid.nx), sx(grid.nx);
  for (const auto& m : modes) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      cx[i] = std::cos(m.kx * grid.x_at(i));
      sx[i] = std::sin(m.kx * grid.x_at(i));
    }
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double ay = m.ky * grid.y_at(j);
      const double ur = amplitude * std::cos(ay + m.phase_u), ui = amplitude * std::sin(ay + m.phase_u);
      const double vr = amplitude * std::cos(ay + m.phase_v), vi = amplitude * std::sin(ay + m.phase_v);
      Vec2* row = out.data() + grid.index(0, j);
      for (std::size_t i = 0; i < grid.nx; ++i) {
        row[i].x += ur * cx[i] - ui * sx[i];
        row[i].y += vr * cx[i] - vi * sx[i];
      }
    }
  }
}

FlowSource::FlowSource(Model model, Extent extent, bool clamp_time)
    : model_(std::make_shared<const Model>(std::move(model))),
      extent_(extent),
      clamp_time_(clamp_time) {
  if (extent_.x_min > extent_.x_max || extent_.y_min > extent_.y_max ||
      extent_.t_min > extent_.t_max) {
    throw ParameterError("flow extent is empty");
  }
  if (const auto* p = std::get_if<PerturbedFlow>(model_.get()); p && !p->base) {
    throw ParameterError("perturbed flow without base field");
  }
  if (const auto* f = std::get_if<FunctionFlow>(model_.get()); f && !f->fn) {
    throw ParameterError("function flow without callable");
  }
}

FlowSource FlowSource::gridded(GriddedFlow flow, bool clamp_time) {
  flow.validate();
  const Extent e = extent_of(flow.grid);
  return FlowSource(std::move(flow), e, clamp_time);
}

FlowSource FlowSource::analytical(AnalyticalFlow flow, Extent extent) {
  return FlowSource(std::move(flow), extent, false);
}

void FlowSource::check(Vec2 p, double& t) const {
  if (!(p.x >= extent_.x_min && p.x <= extent_.x_max)) {
    throw ExtentError("x", p.x, extent_.x_min, extent_.x_max);
  }
  if (!(p.y >= extent_.y_min && p.y <= extent_.y_max)) {
    throw ExtentError("y", p.y, extent_.y_min, extent_.y_max);
  }
  if (!(t >= extent_.t_min && t <= extent_.t_max)) {
    if (clamp_time_ && !std::isnan(t)) {
      t = std::clamp(t, extent_.t_min, extent_.t_max);
    } else {
      throw ExtentError("t", t, extent_.t_min, extent_.t_max);
    }
  }
}

Vec2 FlowSource::sample_unchecked(Vec2 p, double t) const {
  return std::visit(Overloaded{
                        [&](const GriddedFlow& f) { return sample_gridded(f, p, t); },
                        [&](const AnalyticalFlow& f) { return sample_analytical(f, p, t); },
                        [&](const PerturbedFlow& f) { return f.base->sample(p, t) + f.error.eval(p); },
                        [&](const FunctionFlow& f) { return f.fn(p, t); },
                    },
                    *model_);
}

Vec2 FlowSource::sample(Vec2 p, double t) const {
  check(p, t);
  return sample_unchecked(p, t);
}

void FlowSource::sample_nodes(const SpatialGrid& grid, double t, std::vector<Vec2>& out) const {
  if (const auto* f = std::get_if<PerturbedFlow>(model_.get())) {
    check({grid.x0, grid.y0}, t);
    check({grid.x_max(), grid.y_max()}, t);
    f->base->sample_nodes(grid, t, out);
    std::lock_guard<std::mutex> hold(f->cache->lock);
    if (f->cache->values.empty() || !(f->cache->grid == grid)) {
      f->cache->grid = grid;
      f->cache->values.assign(grid.size(), Vec2{});
      f->error.add_on_nodes(grid, f->cache->values);
    }
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = out[n] + f->cache->values[n];
    return;
  }
  out.resize(grid.size());
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      out[grid.index(i, j)] = sample(grid.node(i, j), t);
    }
  }
}

bool FlowSource::is_steady() const {
  return std::visit(Overloaded{
                        [](const GriddedFlow& f) { return f.grid.nt == 1; },
                        [](const AnalyticalFlow& f) {
                          if (const auto* g = std::get_if<DoubleGyreFlow>(&f)) {
                            return g->epsilon == 0.0 || g->omega == 0.0;
                          }
                          return true;
                        },
                        [](const PerturbedFlow& f) { return f.base->is_steady(); },
                        [](const FunctionFlow& f) { return f.steady; },
                    },
                    *model_);
}

FlowSource FlowSource::restricted(const Extent& e) const {
  FlowSource out = *this;
  out.extent_ = {std::max(e.x_min, extent_.x_min), std::min(e.x_max, extent_.x_max),
                 std::max(e.y_min, extent_.y_min), std::min(e.y_max, extent_.y_max),
                 std::max(e.t_min, extent_.t_min), std::min(e.t_max, extent_.t_max)};
  if (out.extent_.x_min > out.extent_.x_max || out.extent_.y_min > out.extent_.y_max ||
      out.extent_.t_min > out.extent_.t_max) {
    throw ParameterError("restricted extent is empty");
  }
  return out;
}

FlowSource FlowSource::with_clamp(bool clamp) const {
  FlowSource out = *this;
  out.clamp_time_ = clamp;
  return out;
}

FlowSource make_uniform(Vec2 velocity) { return FlowSource::analytical(UniformFlow{velocity}); }

FlowSource make_highway(double y1, double y2, Vec2 band_velocity) {
  if (!(y1 < y2)) throw ParameterError("highway band requires y1 < y2");
  return FlowSource::analytical(HighwayFlow{y1, y2, band_velocity});
}

FlowSource make_double_gyre(double amplitude, double omega, double epsilon, double scale) {
  if (!(amplitude >= 0.0)) throw ParameterError("double gyre amplitude must be >= 0");
  if (!(scale > 0.0)) throw ParameterError("double gyre scale must be positive");
  Extent e;
  e.x_min = 0.0;
  e.x_max = 2.0 * scale;
  e.y_min = 0.0;
  e.y_max = scale;
  return FlowSource::analytical(DoubleGyreFlow{amplitude, omega, epsilon, scale}, e);
}

FlowSource read_flow_file(const std::filesystem::path& path) {
  detail::ByteReader in(path);
  in.expect_magic("OFG1");
  GriddedFlow f;
  f.grid.space.nx = in.u32("nx");
  f.grid.space.ny = in.u32("ny");
  f.grid.nt = in.u32("nt");
  f.grid.space.x0 = in.f64("x0");
  f.grid.space.dx = in.f64("dx");
  f.grid.space.y0 = in.f64("y0");
  f.grid.space.dy = in.f64("dy");
  f.grid.t0 = in.f64("t0");
  f.grid.dt_snap = in.f64("dt_snap");
  try {
    f.grid.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), 4);
  }
  const std::uint64_t count = static_cast<std::uint64_t>(f.grid.size());
  in.need(count * 2 * sizeof(float), "payload");
  f.u.resize(count);
  f.v.resize(count);
  for (auto& x : f.u) x = in.f32("u value");
  for (auto& x : f.v) x = in.f32("v value");
  if (in.remaining() != 0) throw FormatError("trailing bytes after payload", in.offset());
  return FlowSource::gridded(std::move(f));
}

void write_flow_file(const GriddedFlow& flow, const std::filesystem::path& path) {
  flow.validate();
  detail::ByteWriter out;
  out.magic("OFG1");
  out.u32(static_cast<std::uint32_t>(flow.grid.space.nx));
  out.u32(static_cast<std::uint32_t>(flow.grid.space.ny));
  out.u32(static_cast<std::uint32_t>(flow.grid.nt));
  out.f64(flow.grid.space.x0);
  out.f64(flow.grid.space.dx);
  out.f64(flow.grid.space.y0);
  out.f64(flow.grid.space.dy);
  out.f64(flow.grid.t0);
  out.f64(flow.grid.dt_snap);
  for (float x : flow.u) out.f32(x);
  for (float x : flow.v) out.f32(x);
  out.save(path);
}

GriddedFlow rasterize(const FlowSource& field, const SpaceTimeGrid& grid) {
  grid.validate();
  GriddedFlow out{grid, {}, {}};
  out.u.reserve(grid.size());
  out.v.reserve(grid.size());
  std::vector<Vec2> slice;
  for (std::size_t k = 0; k < grid.nt; ++k) {
    field.sample_nodes(grid.space, grid.t_at(k), slice);
    for (const Vec2& w : slice) {
      out.u.push_back(static_cast<float>(w.x));
      out.v.push_back(static_cast<float>(w.y));
    }
  }
  return out;
}

SpatialGrid planar_from_geographic(const GeoAxes& a) {
  if (!(a.dlon > 0.0) || !(a.dlat > 0.0)) throw ParameterError("degree spacing must be positive");
  const double lat_ref = a.lat0 + 0.5 * a.dlat * static_cast<double>(a.ny - 1);
  const double mx = kMetersPerDegree * std::cos(lat_ref * kPi / 180.0);
  SpatialGrid g;
  g.x0 = a.lon0 * mx;
  g.dx = a.dlon * mx;
  g.y0 = a.lat0 * kMetersPerDegree;
  g.dy = a.dlat * kMetersPerDegree;
  g.nx = a.nx;
  g.ny = a.ny;
  g.validate();
  return g;
}

}  // namespace hjnav
