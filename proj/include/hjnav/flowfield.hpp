#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <variant>
#include <vector>

#include "hjnav/geometry.hpp"

namespace hjnav {

/// Spatial lattice plus uniformly spaced snapshot times.
struct SpaceTimeGrid {
  SpatialGrid space;
  double t0 = 0.0;
  double dt_snap = 1.0;
  std::size_t nt = 1;

  /// Requires nx, ny >= 2, nt >= 1 and positive spacings.
  void validate() const;
  double t_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt_snap; }
  double t_max() const { return t_at(nt - 1); }
  std::size_t size() const { return nt * space.size(); }
  friend bool operator==(const SpaceTimeGrid&, const SpaceTimeGrid&) = default;
};

/// Axis-aligned space-time box on which a field may be sampled.
struct Extent {
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double x_min = -kInf;
  double x_max = kInf;
  double y_min = -kInf;
  double y_max = kInf;
  double t_min = -kInf;
  double t_max = kInf;

  bool covers_space(const SpatialGrid& g) const {
    return g.x0 >= x_min && g.x_max() <= x_max && g.y0 >= y_min && g.y_max() <= y_max;
  }
  bool covers_time(double t_begin, double t_end) const {
    return t_begin >= t_min && t_end <= t_max;
  }
};

/// Velocity samples on a SpaceTimeGrid, one value per (t, y, x) node.
struct GriddedFlow {
  SpaceTimeGrid grid;
  std::vector<float> u;
  std::vector<float> v;

  /// Checks array lengths against the grid and that every value is finite.
  void validate() const;
};

struct UniformFlow {
  Vec2 velocity;
};

/// Zonal jet: `velocity` for y in [y1, y2], zero elsewhere.
struct HighwayFlow {
  double y1 = 0.0;
  double y2 = 1.0;
  Vec2 velocity;
};

/// Periodically perturbed double gyre on [0, 2*scale] x [0, scale].
/// Velocity amplitude is pi*amplitude (m/s).
struct DoubleGyreFlow {
  double amplitude = 0.1;
  double omega = 0.0;
  double epsilon = 0.0;
  double scale = 1.0;
};

using AnalyticalFlow = std::variant<UniformFlow, HighwayFlow, DoubleGyreFlow>;

/// Sum of plane-wave modes per velocity component; models a spatially
/// correlated forecast error that is constant over a forecast's horizon.
struct FourierField {
  struct Mode {
    double kx = 0.0;
    double ky = 0.0;
    double phase_u = 0.0;
    double phase_v = 0.0;
  };
  std::vector<Mode> modes;
  double amplitude = 0.0;  // per mode and component

  Vec2 eval(Vec2 p) const;
  /// Adds the field at every node of `grid` to `out`.
  void add_on_nodes(const SpatialGrid& grid, std::vector<Vec2>& out) const;
};

class FlowSource;

/// A base field plus an additive error field.
struct PerturbedFlow {
  struct NodeCache {
    std::mutex lock;
    SpatialGrid grid;
    std::vector<Vec2> values;
  };
  std::shared_ptr<const FlowSource> base;
  FourierField error;
  // The error is steady, so its values on the last sampled lattice are kept.
  std::shared_ptr<NodeCache> cache = std::make_shared<NodeCache>();
};

/// Arbitrary callable field; used for test fixtures and adapters.
struct FunctionFlow {
  std::function<Vec2(Vec2, double)> fn;
  bool steady = false;
};

/// Immutable, cheaply copyable handle to a time-varying 2D velocity field.
/// Sampling outside the declared extent throws ExtentError unless the time
/// axis was declared clamped, in which case time is clamped to the extent.
class FlowSource {
 public:
  using Model = std::variant<GriddedFlow, AnalyticalFlow, PerturbedFlow, FunctionFlow>;

  FlowSource(Model model, Extent extent, bool clamp_time = false);

  static FlowSource gridded(GriddedFlow flow, bool clamp_time = false);
  static FlowSource analytical(AnalyticalFlow flow, Extent extent = {});

  Vec2 sample(Vec2 p, double t) const;
  /// Samples every node of `grid` at time t into `out` (resized).
  void sample_nodes(const SpatialGrid& grid, double t, std::vector<Vec2>& out) const;

  const Extent& extent() const { return extent_; }
  bool clamp_time() const { return clamp_time_; }
  bool is_steady() const;
  const Model& model() const { return *model_; }

  /// Copy with a narrower extent (e.g. a forecast's validity window).
  FlowSource restricted(const Extent& e) const;
  FlowSource with_clamp(bool clamp) const;

 private:
  Vec2 sample_unchecked(Vec2 p, double t) const;
  void check(Vec2 p, double& t) const;

  std::shared_ptr<const Model> model_;
  Extent extent_;
  bool clamp_time_ = false;
};

FlowSource make_uniform(Vec2 velocity);
/// Throws ParameterError unless y1 < y2.
FlowSource make_highway(double y1, double y2, Vec2 band_velocity);
/// Throws ParameterError if amplitude < 0 or scale <= 0.
FlowSource make_double_gyre(double amplitude, double omega, double epsilon, double scale);

/// OFG1 flow file. Little-endian; see README for the byte layout.
FlowSource read_flow_file(const std::filesystem::path& path);
void write_flow_file(const GriddedFlow& flow, const std::filesystem::path& path);

/// Samples any field onto a grid, producing something write_flow_file accepts.
GriddedFlow rasterize(const FlowSource& field, const SpaceTimeGrid& grid);

/// Geographic (degree) axes of a lon/lat grid.
struct GeoAxes {
  double lon0 = 0.0;
  double dlon = 1.0;
  double lat0 = 0.0;
  double dlat = 1.0;
  std::size_t nx = 2;
  std::size_t ny = 2;
};

inline constexpr double kMetersPerDegree = 111320.0;

/// Equirectangular projection about the mid latitude. Longitude maps to x,
/// latitude to y, both in meters.
SpatialGrid planar_from_geographic(const GeoAxes& axes);

}  // namespace hjnav
