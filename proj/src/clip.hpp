#pragma once

#include <array>

#include "robinlab/geometry.hpp"

namespace robinlab::detail {

/// Part of a triangle where its linear interpolant exceeds a level (at most 4 corners).
struct ClippedPolygon {
  std::array<Point, 4> points{};
  std::array<double, 4> values{};
  int size = 0;

  double area() const {
    double twice = 0.0;
    for (int i = 0; i < size; ++i) twice += cross(points[i], points[(i + 1) % size]);
    return 0.5 * twice;
  }

  /// Exact integral of the interpolant over the polygon (fan of linear pieces).
  double integral() const {
    double sum = 0.0;
    for (int i = 1; i + 1 < size; ++i) {
      const double a = 0.5 * orient(points[0], points[i], points[i + 1]);
      sum += a * (values[0] + values[i] + values[i + 1]) / 3.0;
    }
    return sum;
  }
};

/// Sutherland-Hodgman clip of {u > level}; keeps the counter-clockwise order.
inline ClippedPolygon clip_above(const std::array<Point, 3>& p, const std::array<double, 3>& u,
                                 double level) {
  ClippedPolygon out;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const bool in_i = u[i] > level;
    const bool in_j = u[j] > level;
    if (in_i) {
      out.points[out.size] = p[i];
      out.values[out.size] = u[i];
      ++out.size;
    }
    if (in_i != in_j) {
      const double s = (level - u[i]) / (u[j] - u[i]);
      out.points[out.size] = p[i] + s * (p[j] - p[i]);
      out.values[out.size] = level;
      ++out.size;
    }
  }
  return out;
}

}  // namespace robinlab::detail
