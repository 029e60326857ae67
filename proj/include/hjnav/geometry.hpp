#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

namespace hjnav {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Regular 2D node lattice. Node (i, j) sits at (x0 + i*dx, y0 + j*dy);
/// storage is row-major with x fastest.
struct SpatialGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  std::size_t nx = 2;
  std::size_t ny = 2;

  /// Throws ParameterError unless spacings are positive and counts >= 1.
  void validate() const;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  double x_at(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
  double y_at(std::size_t j) const { return y0 + static_cast<double>(j) * dy; }
  Vec2 node(std::size_t i, std::size_t j) const { return {x_at(i), y_at(j)}; }
  double x_max() const { return x_at(nx - 1); }
  double y_max() const { return y_at(ny - 1); }
  bool contains(Vec2 p) const {
    return p.x >= x0 && p.x <= x_max() && p.y >= y0 && p.y <= y_max();
  }
  /// Nearest node indices, clamped into the grid.
  std::pair<std::size_t, std::size_t> nearest(Vec2 p) const;

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;
};

/// Bilinear stencil of a point: lower-left node and fractional offsets.
struct Bilinear {
  std::size_t i = 0;
  std::size_t j = 0;
  double fx = 0.0;
  double fy = 0.0;
};

/// Locate p inside the grid. Points on the upper boundary map to the last
/// cell with fraction 1. The caller is responsible for extent checks.
Bilinear locate(const SpatialGrid& g, Vec2 p);

}  // namespace hjnav
