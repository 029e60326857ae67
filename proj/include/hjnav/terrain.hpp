#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "hjnav/geometry.hpp"

namespace hjnav {

/// Seafloor elevation per node (meters, negative below sea level).
struct ElevationGrid {
  SpatialGrid grid;
  std::vector<float> elevation;
  /// Set by coarsen_max when the input had to be padded by replication.
  bool padded = false;

  void validate() const;
  float at(std::size_t i, std::size_t j) const { return elevation[grid.index(i, j)]; }
};

/// Boolean field on a spatial grid.
struct CellSet {
  SpatialGrid grid;
  std::vector<std::uint8_t> cells;

  bool at(std::size_t i, std::size_t j) const { return cells[grid.index(i, j)] != 0; }
  /// Nearest-cell membership; points off the grid are never members.
  bool contains(Vec2 p) const;
  std::size_t count() const;
};

/// Cells whose elevation lies strictly above the threshold.
struct ObstacleMask : CellSet {
  double threshold = -150.0;
};

/// Grid with no obstacle cells at all.
ObstacleMask empty_mask(const SpatialGrid& grid);

/// Distance from each node to the nearest obstacle node along 4-connected
/// paths. +infinity everywhere when the mask has no obstacles.
struct DistanceMap {
  static constexpr double kUnreachable = std::numeric_limits<double>::infinity();

  SpatialGrid grid;
  std::vector<double> distance;

  double at(std::size_t i, std::size_t j) const { return distance[grid.index(i, j)]; }
  /// Bilinear interpolation, clamped to the grid. Infinite if any of the
  /// four surrounding nodes is infinite.
  double sample(Vec2 p) const;
  /// Central-difference gradient at the nodes, bilinearly interpolated.
  /// Zero where a stencil touches an unreachable node.
  Vec2 gradient(Vec2 p) const;
};

/// Max-pools `factor` x `factor` blocks. Grids whose dimensions are not
/// multiples of `factor` are padded by replicating the last row/column and
/// the result is flagged as padded.
ElevationGrid coarsen_max(const ElevationGrid& elev, int factor);

ObstacleMask obstacle_mask(const ElevationGrid& elev, double threshold = -150.0);

/// Marks every cell within `cells` steps (8-connected) of an obstacle.
ObstacleMask dilate(const ObstacleMask& mask, int cells);

/// Multi-source BFS from every obstacle cell. Distances are hop counts times
/// spacing; anisotropic grids weight x and y hops by dx and dy.
DistanceMap distance_map(const ObstacleMask& mask);

ElevationGrid read_elevation_file(const std::filesystem::path& path);
void write_elevation_file(const ElevationGrid& elev, const std::filesystem::path& path);

}  // namespace hjnav
