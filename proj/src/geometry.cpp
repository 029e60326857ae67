#include "hjnav/geometry.hpp"

#include <algorithm>
#include <sstream>

#include "hjnav/error.hpp"

namespace hjnav {

ExtentError::ExtentError(const std::string& axis, double value, double lo, double hi)
    : Error([&] {
        std::ostringstream os;
        os << "query outside extent on axis " << axis << ": " << value << " not in [" << lo
           << ", " << hi << "]";
        return os.str();
      }()),
      axis_(axis) {}

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

void SpatialGrid::validate() const {
  if (!(dx > 0.0) || !(dy > 0.0)) throw ParameterError("grid spacing must be positive");
  if (nx < 1 || ny < 1) throw ParameterError("grid must have at least one node per axis");
  if (!std::isfinite(x0) || !std::isfinite(y0)) throw ParameterError("grid origin not finite");
}

std::pair<std::size_t, std::size_t> SpatialGrid::nearest(Vec2 p) const {
  auto snap = [](double q, double origin, double h, std::size_t n) {
    const double r = std::round((q - origin) / h);
    if (!(r > 0.0)) return std::size_t{0};
    return std::min(static_cast<std::size_t>(r), n - 1);
  };
  return {snap(p.x, x0, dx, nx), snap(p.y, y0, dy, ny)};
}

Bilinear locate(const SpatialGrid& g, Vec2 p) {
  auto axis = [](double q, double origin, double h, std::size_t n, std::size_t& idx, double& f) {
    if (n < 2) {
      idx = 0;
      f = 0.0;
      return;
    }
    const double s = std::clamp((q - origin) / h, 0.0, static_cast<double>(n - 1));
    const auto cell = std::min(static_cast<std::size_t>(s), n - 2);
    idx = cell;
    f = s - static_cast<double>(cell);
  };
  Bilinear b;
  axis(p.x, g.x0, g.dx, g.nx, b.i, b.fx);
  axis(p.y, g.y0, g.dy, g.ny, b.j, b.fy);
  return b;
}

}  // namespace hjnav
