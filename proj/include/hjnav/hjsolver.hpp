#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hjnav/flowfield.hpp"
#include "hjnav/terrain.hpp"

namespace hjnav {

struct SolverConfig {
  double u_max = 0.1;     // control speed bound (m/s)
  double d_max = 0.0;     // worst-case disturbance speed (m/s)
  double alpha = 1.0;     // in-target running reward rate
  double cfl = 0.5;
  double sentinel = 1e10;  // value of unreachable / doomed states
  double min_dt = 1e-6;    // CFL steps below this raise ResolutionError (s)
  /// Spatial lattice of the solve.
  SpatialGrid grid;
  /// Desired spacing of stored snapshots (s); the solve stores
  /// ceil((T - t_start) / snapshot_dt) + 1 evenly spaced slices.
  double snapshot_dt = 3600.0;
  /// Headings used by the upwind capture-set transport.
  int capture_headings = 32;
  /// Spatial accuracy: 1 (upwind differences, Euler) or 2 (ENO2, Heun).
  int order = 2;

  void validate() const;
};

struct TargetSpec {
  Vec2 center;
  double radius = 1.0;

  void validate() const;
  bool contains(Vec2 p) const { return norm(p - center) <= radius; }
  /// max(0, |p - c| - r)
  double distance(Vec2 p) const;
};

/// Optimal cost-to-go J*(x, t) on a space-time grid. Obstacle cells and
/// cells inevitably carried into obstacles hold the sentinel.
class ValueFunction {
 public:
  ValueFunction(SpaceTimeGrid grid, std::vector<double> values, std::vector<std::uint8_t> obstacle,
                std::vector<std::uint8_t> target, double sentinel);

  const SpaceTimeGrid& grid() const { return grid_; }
  const SpatialGrid& space() const { return grid_.space; }
  double t_start() const { return grid_.t0; }
  double t_end() const { return grid_.t_max(); }
  double sentinel() const { return sentinel_; }

  double at(std::size_t k, std::size_t i, std::size_t j) const {
    return values_[k * grid_.space.size() + grid_.space.index(i, j)];
  }
  const double* slice(std::size_t k) const { return values_.data() + k * grid_.space.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint8_t>& obstacle_cells() const { return obstacle_; }
  const std::vector<std::uint8_t>& target_cells() const { return target_; }

  /// Values at or above half the sentinel count as unreachable.
  bool is_sentinel(double v) const { return v >= 0.5 * sentinel_; }

  /// Slice index k and weight w such that J(t) = (1-w) J_k + w J_{k+1}.
  /// Throws HorizonError outside [t_start, t_end].
  std::pair<std::size_t, double> time_weight(double t) const;
  /// Node values at time t, linearly interpolated between snapshots. A node
  /// that is sentinel on either bracketing snapshot stays sentinel.
  std::vector<double> values_at(double t) const;
  /// Bilinear in space and linear in time; sentinel if any stencil node is.
  double sample(Vec2 p, double t) const;

 private:
  SpaceTimeGrid grid_;
  std::vector<double> values_;
  std::vector<std::uint8_t> obstacle_;
  std::vector<std::uint8_t> target_;
  double sentinel_;
};

/// Time-to-reach map D*(x) = T + J*(x, t) - t where J* <= 0, NaN elsewhere.
struct SafeTTRMap {
  SpatialGrid grid;
  double t = 0.0;
  std::vector<double> ttr;
  std::vector<std::uint8_t> valid;

  bool defined(std::size_t i, std::size_t j) const { return valid[grid.index(i, j)] != 0; }
  double at(std::size_t i, std::size_t j) const { return ttr[grid.index(i, j)]; }
};

/// Solves the multi-time reachability PDE backward from T to t_start.
///
/// Terminal slice: sentinel on obstacles, distance to the target elsewhere.
/// Obstacle cells stay frozen, in-target cells gain -alpha per second, and
/// the remaining cells follow
///   dJ/dt = -grad J . v(x, t) + (u_max - d_max) |grad J|
/// discretized with a local Lax-Friedrichs Hamiltonian and explicit Euler
/// steps under the CFL bound. Free cells that every admissible velocity
/// carries into an obstacle before T are detected by transporting an
/// obstacle indicator under the same dynamics with a monotone upwind scheme;
/// where it reaches 1/2 the cell becomes sentinel. Stencils never read
/// sentinel neighbours: their difference is taken as zero.
ValueFunction solve_mtr(const FlowSource& flow, const ObstacleMask& obstacles,
                        const TargetSpec& target, const SolverConfig& config, double t_start,
                        double t_end);

SafeTTRMap safe_ttr(const ValueFunction& J, double t);

/// Backward reachable tube at time t: cells with J*(x, t) <= 0.
CellSet brt(const ValueFunction& J, double t);

/// Per node, the smallest tau such that J*(x, T - tau) <= 0, i.e. how long
/// before T one must depart from x to arrive exactly at T. NaN if the node
/// never enters the tube within the solved horizon.
std::vector<double> latest_departure_ttr(const ValueFunction& J);

/// Count of (node, slice) pairs on obstacle-free, non-sentinel nodes where
/// J at an earlier slice exceeds J at the next later slice by more than tol.
std::size_t monotonicity_violations(const ValueFunction& J, double tol = 1e-9);

/// VFN1 value file: magic, nx ny nt (u32), x0 dx y0 dy t0 dt (f64), then
/// nt*ny*nx float32 values.
void write_value_file(const ValueFunction& J, const std::filesystem::path& path);
/// Reads values back; masks are recovered from the sentinel (obstacle) and
/// the terminal slice (target = zero terminal cost).
ValueFunction read_value_file(const std::filesystem::path& path, double sentinel = 1e10);

}  // namespace hjnav
