#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <vector>

#include "robinlab/fem.hpp"
#include "robinlab/geometry.hpp"

namespace testing {

using namespace robinlab;

constexpr double kPi = std::numbers::pi;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Star-shaped polygon with sorted random angles; always simple and counter-clockwise.
inline DomainSpec random_polygon(Rng& rng) {
  const int n = uniform_int(rng, 5, 9);
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) angles.push_back(2.0 * kPi * (i + uniform(rng, 0.15, 0.85)) / n);
  std::vector<Point> corners;
  for (double a : angles) {
    const double r = uniform(rng, 0.7, 1.2);
    corners.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return DomainSpec::polygon(corners);
}

inline DomainSpec random_domain(Rng& rng) {
  switch (uniform_int(rng, 0, 4)) {
    case 0:
      return DomainSpec::disk(uniform(rng, 0.6, 1.6));
    case 1:
      return DomainSpec::ellipse(uniform(rng, 0.7, 1.6), uniform(rng, 0.7, 1.6));
    case 2:
      return DomainSpec::rectangle(uniform(rng, 0.8, 2.0), uniform(rng, 0.8, 2.0));
    case 3: {
      const double r = uniform(rng, 0.8, 1.4);
      return DomainSpec::perturbed_disk(r, uniform(rng, 0.0, 0.25) * r, uniform_int(rng, 2, 5));
    }
    default:
      return random_polygon(rng);
  }
}

/// Mesh size giving a few hundred to a few thousand vertices.
inline double moderate_h(const DomainSpec& spec, double fraction = 0.08) { return fraction * std::sqrt(spec.area()); }

inline std::shared_ptr<const TriangleMesh> make_mesh(const DomainSpec& spec, double h) {
  return std::make_shared<const TriangleMesh>(build_mesh(spec, h));
}

/// Small smooth positive field with random coefficients plus vertex noise.
inline ScalarField random_field(std::shared_ptr<const TriangleMesh> mesh, Rng& rng, double noise = 0.05) {
  const double a = uniform(rng, -1, 1), b = uniform(rng, -1, 1), c = uniform(rng, -1, 1);
  const double w = uniform(rng, 1, 4);
  std::normal_distribution<double> jitter(0.0, noise);
  std::vector<double> values;
  for (const Point& p : mesh->vertices) {
    values.push_back(3.0 + a * p.x + b * p.y + c * std::sin(w * p.x * p.y) + jitter(rng));
  }
  return ScalarField(std::move(mesh), std::move(values));
}

// ---- independent oracles -----------------------------------------------------

/// Area of {x in triangle : f(x) > t} for linear f, counting sub-triangle centroids of an
/// n x n subdivision. Only cells cut by the level line can be misclassified, so the error
/// is at most about (2n + 1) cells.
inline double brute_superlevel_area(Point a, Point b, Point c, double fa, double fb, double fc, double t, int n) {
  double area = 0.0;
  const double cell = std::abs(orient(a, b, c)) / 2.0 / (n * n);
  // Barycentric centroids of the n^2 sub-triangles.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; i + j < n; ++j) {
      for (int up = 0; up < 2; ++up) {
        if (up && i + j + 1 >= n) continue;
        double l1, l2;
        if (!up) {
          l1 = (i + 1.0 / 3.0) / n;
          l2 = (j + 1.0 / 3.0) / n;
        } else {
          l1 = (i + 2.0 / 3.0) / n;
          l2 = (j + 2.0 / 3.0) / n;
        }
        const double l0 = 1.0 - l1 - l2;
        const double f = l0 * fa + l1 * fb + l2 * fc;
        if (f > t) area += cell;
      }
    }
  }
  return area;
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double step = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * step) * (i % 2 ? 4.0 : 2.0);
  return sum * step / 3.0;
}

/// Closed-form disk solution of -Laplace v = 1, dv/dn + beta v = 0 on the disk of radius R.
inline double disk_solution(double radius, double beta, Point p) {
  return (radius * radius - dot(p, p)) / 4.0 + radius / (2.0 * beta);
}

}  // namespace testing
