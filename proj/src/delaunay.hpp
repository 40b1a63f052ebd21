#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "robinlab/geometry.hpp"

namespace robinlab::detail {

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// Incremental Bowyer-Watson triangulation inside a large super triangle.
///
/// Vertices 0..2 are the super triangle corners. Triangle slots are recycled,
/// so a triangle index is only meaningful together with its vertex triple.
class Delaunay {
 public:
  struct Triangle {
    std::array<std::size_t, 3> v{};
    // nbr[i] is the triangle across the edge opposite v[i].
    std::array<std::size_t, 3> nbr{kNone, kNone, kNone};
    bool alive = false;
  };

  Delaunay(Point lo, Point hi);

  /// Returns the new vertex index, or nullopt when p coincides with an existing vertex.
  std::optional<std::size_t> insert(Point p);

  const std::vector<Point>& points() const { return points_; }
  const std::vector<Triangle>& triangles() const { return tris_; }
  static bool is_super(std::size_t v) { return v < 3; }

 private:
  std::size_t locate(Point p);
  std::size_t new_triangle();

  std::vector<Point> points_;
  std::vector<Triangle> tris_;
  std::vector<std::size_t> free_;
  std::vector<unsigned> stamp_;
  unsigned epoch_ = 0;
  std::size_t hint_ = 0;
  double merge_tol_ = 0.0;
};

/// Sign-exact orientation: positive when (a, b, c) is counter-clockwise, zero when collinear.
double orient2d(Point a, Point b, Point c);
/// Sign-exact; positive when d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
double incircle(Point a, Point b, Point c, Point d);
Point circumcenter(Point a, Point b, Point c);

}  // namespace robinlab::detail
