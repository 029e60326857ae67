#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hjnav/geometry.hpp"

namespace hjnav {

/// Plain-text PGM (P2), 255 levels, north row first. NaN/inf pixels are
/// written as 0; finite values are scaled linearly onto 1..255.
void write_pgm(std::span<const double> values, const SpatialGrid& grid,
               const std::filesystem::path& path);

/// Per-node CSV with columns x_m, y_m and `column`; NaN written empty.
void write_grid_csv(std::span<const double> values, const SpatialGrid& grid,
                    const std::string& column, const std::filesystem::path& path);

}  // namespace hjnav
