#include "hjnav/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "hjnav/error.hpp"

namespace hjnav {

void write_pgm(std::span<const double> values, const SpatialGrid& grid,
               const std::filesystem::path& path) {
  if (values.size() != grid.size()) throw ParameterError("pgm: value count does not match grid");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "P2\n" << grid.nx << ' ' << grid.ny << "\n255\n";
  for (std::size_t r = 0; r < grid.ny; ++r) {
    const std::size_t j = grid.ny - 1 - r;
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double v = values[grid.index(i, j)];
      int level = 0;
      if (std::isfinite(v)) {
        level = hi > lo ? 1 + static_cast<int>(std::lround(254.0 * (v - lo) / (hi - lo))) : 255;
      }
      out << level << (i + 1 < grid.nx ? ' ' : '\n');
    }
  }
}

void write_grid_csv(std::span<const double> values, const SpatialGrid& grid,
                    const std::string& column, const std::filesystem::path& path) {
  if (values.size() != grid.size()) throw ParameterError("csv: value count does not match grid");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "x_m,y_m," << column << '\n' << std::setprecision(12);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double v = values[grid.index(i, j)];
      out << grid.x_at(i) << ',' << grid.y_at(j) << ',';
      if (!std::isnan(v)) out << v;
      out << '\n';
    }
  }
}

}  // namespace hjnav
