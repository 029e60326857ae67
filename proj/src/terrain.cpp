#include "hjnav/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>

#include "binary_io.hpp"
#include "hjnav/error.hpp"

namespace hjnav {

void ElevationGrid::validate() const {
  grid.validate();
  if (elevation.size() != grid.size()) throw ParameterError("elevation array size mismatch");
  if (!std::all_of(elevation.begin(), elevation.end(), [](float e) { return std::isfinite(e); })) {
    throw ParameterError("elevation contains non-finite values");
  }
}

bool CellSet::contains(Vec2 p) const {
  // Nearest-cell lookup: cell (i, j) covers half a spacing around its node.
  const double hx = 0.5 * grid.dx;
  const double hy = 0.5 * grid.dy;
  if (p.x < grid.x0 - hx || p.x > grid.x_max() + hx || p.y < grid.y0 - hy ||
      p.y > grid.y_max() + hy) {
    return false;
  }
  const auto [i, j] = grid.nearest(p);
  return at(i, j);
}

std::size_t CellSet::count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(),
                                                [](std::uint8_t c) { return c != 0; }));
}

ObstacleMask empty_mask(const SpatialGrid& grid) {
  ObstacleMask m;
  m.grid = grid;
  m.cells.assign(grid.size(), 0);
  return m;
}

double DistanceMap::sample(Vec2 p) const {
  const Bilinear b = locate(grid, p);
  const std::size_t i1 = std::min(b.i + 1, grid.nx - 1);
  const std::size_t j1 = std::min(b.j + 1, grid.ny - 1);
  const double d00 = at(b.i, b.j), d10 = at(i1, b.j), d01 = at(b.i, j1), d11 = at(i1, j1);
  if (std::isinf(d00) || std::isinf(d10) || std::isinf(d01) || std::isinf(d11)) {
    return kUnreachable;
  }
  return (1 - b.fx) * (1 - b.fy) * d00 + b.fx * (1 - b.fy) * d10 + (1 - b.fx) * b.fy * d01 +
         b.fx * b.fy * d11;
}

Vec2 DistanceMap::gradient(Vec2 p) const {
  auto node_grad = [&](std::size_t i, std::size_t j) -> Vec2 {
    auto diff = [&](std::size_t lo, std::size_t hi, double d_lo, double d_hi, double h) {
      if (std::isinf(d_lo) || std::isinf(d_hi) || lo == hi) return 0.0;
      return (d_hi - d_lo) / (static_cast<double>(hi - lo) * h);
    };
    const std::size_t il = i > 0 ? i - 1 : i;
    const std::size_t ir = std::min(i + 1, grid.nx - 1);
    const std::size_t jl = j > 0 ? j - 1 : j;
    const std::size_t jr = std::min(j + 1, grid.ny - 1);
    return {diff(il, ir, at(il, j), at(ir, j), grid.dx),
            diff(jl, jr, at(i, jl), at(i, jr), grid.dy)};
  };
  const Bilinear b = locate(grid, p);
  const std::size_t i1 = std::min(b.i + 1, grid.nx - 1);
  const std::size_t j1 = std::min(b.j + 1, grid.ny - 1);
  return node_grad(b.i, b.j) * ((1 - b.fx) * (1 - b.fy)) + node_grad(i1, b.j) * (b.fx * (1 - b.fy)) +
         node_grad(b.i, j1) * ((1 - b.fx) * b.fy) + node_grad(i1, j1) * (b.fx * b.fy);
}

ElevationGrid coarsen_max(const ElevationGrid& elev, int factor) {
  if (factor <= 0) throw ParameterError("coarsening factor must be positive");
  elev.validate();
  const auto f = static_cast<std::size_t>(factor);
  const SpatialGrid& in = elev.grid;
  ElevationGrid out;
  out.grid.nx = (in.nx + f - 1) / f;
  out.grid.ny = (in.ny + f - 1) / f;
  out.grid.dx = in.dx * static_cast<double>(f);
  out.grid.dy = in.dy * static_cast<double>(f);
  // Coarse nodes sit at the centre of their block.
  out.grid.x0 = in.x0 + 0.5 * static_cast<double>(f - 1) * in.dx;
  out.grid.y0 = in.y0 + 0.5 * static_cast<double>(f - 1) * in.dy;
  out.padded = elev.padded || (in.nx % f != 0) || (in.ny % f != 0);
  out.elevation.assign(out.grid.size(), -std::numeric_limits<float>::infinity());
  for (std::size_t j = 0; j < out.grid.ny * f; ++j) {
    const std::size_t sj = std::min(j, in.ny - 1);
    for (std::size_t i = 0; i < out.grid.nx * f; ++i) {
      const std::size_t si = std::min(i, in.nx - 1);
      float& cell = out.elevation[out.grid.index(i / f, j / f)];
      cell = std::max(cell, elev.at(si, sj));
    }
  }
  return out;
}

ObstacleMask obstacle_mask(const ElevationGrid& elev, double threshold) {
  elev.validate();
  ObstacleMask m;
  m.grid = elev.grid;
  m.threshold = threshold;
  m.cells.resize(elev.elevation.size());
  std::transform(elev.elevation.begin(), elev.elevation.end(), m.cells.begin(),
                 [threshold](float e) { return static_cast<std::uint8_t>(e > threshold); });
  return m;
}

ObstacleMask dilate(const ObstacleMask& mask, int cells) {
  if (cells < 0) throw ParameterError("dilation radius must be >= 0");
  ObstacleMask out = mask;
  const SpatialGrid& g = mask.grid;
  const auto r = static_cast<std::ptrdiff_t>(cells);
  const auto nx = static_cast<std::ptrdiff_t>(g.nx), ny = static_cast<std::ptrdiff_t>(g.ny);
  for (std::ptrdiff_t j = 0; j < ny; ++j) {
    for (std::ptrdiff_t i = 0; i < nx; ++i) {
      if (!mask.cells[g.index(i, j)]) continue;
      for (std::ptrdiff_t b = std::max<std::ptrdiff_t>(0, j - r); b <= std::min(ny - 1, j + r); ++b)
        for (std::ptrdiff_t a = std::max<std::ptrdiff_t>(0, i - r); a <= std::min(nx - 1, i + r); ++a)
          out.cells[g.index(a, b)] = 1;
    }
  }
  return out;
}

DistanceMap distance_map(const ObstacleMask& mask) {
  const SpatialGrid& g = mask.grid;
  g.validate();
  DistanceMap out{g, std::vector<double>(g.size(), DistanceMap::kUnreachable)};

  auto for_neighbors = [&](std::size_t n, auto&& fn) {
    const std::size_t i = n % g.nx;
    const std::size_t j = n / g.nx;
    if (i > 0) fn(n - 1, g.dx);
    if (i + 1 < g.nx) fn(n + 1, g.dx);
    if (j > 0) fn(n - g.nx, g.dy);
    if (j + 1 < g.ny) fn(n + g.nx, g.dy);
  };

  if (g.dx == g.dy) {
    std::vector<std::uint32_t> hops(g.size(), std::numeric_limits<std::uint32_t>::max());
    std::deque<std::size_t> frontier;
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (mask.cells[n]) {
        hops[n] = 0;
        frontier.push_back(n);
      }
    }
    while (!frontier.empty()) {
      const std::size_t n = frontier.front();
      frontier.pop_front();
      for_neighbors(n, [&](std::size_t m, double) {
        if (hops[m] == std::numeric_limits<std::uint32_t>::max()) {
          hops[m] = hops[n] + 1;
          frontier.push_back(m);
        }
      });
    }
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (hops[n] != std::numeric_limits<std::uint32_t>::max()) {
        out.distance[n] = static_cast<double>(hops[n]) * g.dx;
      }
    }
    return out;
  }

  // Unequal spacings: the same 4-connected search with weighted hops.
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (mask.cells[n]) {
      out.distance[n] = 0.0;
      open.emplace(0.0, n);
    }
  }
  while (!open.empty()) {
    const auto [d, n] = open.top();
    open.pop();
    if (d > out.distance[n]) continue;
    for_neighbors(n, [&](std::size_t m, double step) {
      if (d + step < out.distance[m]) {
        out.distance[m] = d + step;
        open.emplace(d + step, m);
      }
    });
  }
  return out;
}

ElevationGrid read_elevation_file(const std::filesystem::path& path) {
  detail::ByteReader in(path);
  in.expect_magic("ELG1");
  ElevationGrid e;
  e.grid.nx = in.u32("nx");
  e.grid.ny = in.u32("ny");
  e.grid.x0 = in.f64("x0");
  e.grid.dx = in.f64("dx");
  e.grid.y0 = in.f64("y0");
  e.grid.dy = in.f64("dy");
  try {
    e.grid.validate();
  } catch (const ParameterError& err) {
    throw FormatError(std::string("invalid header: ") + err.what(), 4);
  }
  in.need(static_cast<std::uint64_t>(e.grid.size()) * sizeof(float), "payload");
  e.elevation.resize(e.grid.size());
  for (auto& z : e.elevation) z = in.f32("elevation");
  if (in.remaining() != 0) throw FormatError("trailing bytes after payload", in.offset());
  return e;
}

void write_elevation_file(const ElevationGrid& elev, const std::filesystem::path& path) {
  elev.validate();
  detail::ByteWriter out;
  out.magic("ELG1");
  out.u32(static_cast<std::uint32_t>(elev.grid.nx));
  out.u32(static_cast<std::uint32_t>(elev.grid.ny));
  out.f64(elev.grid.x0);
  out.f64(elev.grid.dx);
  out.f64(elev.grid.y0);
  out.f64(elev.grid.dy);
  for (float z : elev.elevation) out.f32(z);
  out.save(path);
}

}  // namespace hjnav
