#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "robinlab/errors.hpp"
#include "robinlab/geometry.hpp"
#include "text.hpp"

namespace robinlab {
namespace {

constexpr double kPi = std::numbers::pi;

bool segments_intersect(Point a, Point b, Point c, Point d) {
  const double d1 = orient(c, d, a);
  const double d2 = orient(c, d, b);
  const double d3 = orient(a, b, c);
  const double d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](Point p, Point q, Point r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) ||
         (d3 == 0 && on_segment(a, b, c)) || (d4 == 0 && on_segment(a, b, d));
}

double polygon_signed_area(const std::vector<Point>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    twice += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * twice;
}

Point polygon_centroid(const std::vector<Point>& poly) {
  double cx = 0.0;
  double cy = 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % poly.size()];
    const double w = cross(a, b);
    twice += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
  }
  return {cx / (3.0 * twice), cy / (3.0 * twice)};
}

bool point_in_polygon(const std::vector<Point>& poly, Point p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point a = poly[i];
    const Point b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

// Signed area of disk(0, r) intersected with triangle (0, a, b).
double circle_triangle_area(Point a, Point b, double r) {
  auto sector = [r](Point p, Point q) { return 0.5 * r * r * std::atan2(cross(p, q), dot(p, q)); };
  const Point d = b - a;
  const double qa = dot(d, d);
  if (qa == 0.0) return 0.0;
  const double qb = dot(a, d);
  const double qc = dot(a, a) - r * r;
  const double disc = qb * qb - qa * qc;
  if (disc <= 0.0) return sector(a, b);
  const double sq = std::sqrt(disc);
  const double s0 = std::clamp((-qb - sq) / qa, 0.0, 1.0);
  const double s1 = std::clamp((-qb + sq) / qa, 0.0, 1.0);
  const Point p0 = a + s0 * d;
  const Point p1 = a + s1 * d;
  return sector(a, p0) + 0.5 * cross(p0, p1) + sector(p1, b);
}

template <class F>
double gauss20(F&& f, double lo, double hi) {
  return boost::math::quadrature::gauss<double, 20>::integrate(f, lo, hi);
}

// Area of the star-shaped domain intersected with the centred disk of radius rho.
double polar_overlap(const DomainSpec& spec, double rho) {
  constexpr int kSamples = 4096;
  auto sign = [&](double th) { return spec.polar_radius(th) - rho; };
  std::vector<double> cuts = {0.0};
  for (int i = 0; i < kSamples; ++i) {
    double lo = 2.0 * kPi * i / kSamples;
    double hi = 2.0 * kPi * (i + 1) / kSamples;
    double flo = sign(lo);
    if ((flo > 0) == (sign(hi) > 0)) continue;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((sign(mid) > 0) == (flo > 0)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    cuts.push_back(0.5 * (lo + hi));
  }
  cuts.push_back(2.0 * kPi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // Refine each piece so the rule also resolves the perturbation modes.
    constexpr int kPieces = 16;
    const double w = (cuts[i + 1] - cuts[i]) / kPieces;
    for (int j = 0; j < kPieces; ++j) {
      total += gauss20(
          [&](double th) {
            const double r = std::min(spec.polar_radius(th), rho);
            return 0.5 * r * r;
          },
          cuts[i] + j * w, cuts[i] + (j + 1) * w);
    }
  }
  return total;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

}  // namespace

DomainSpec DomainSpec::disk(double radius) {
  require(std::isfinite(radius) && radius > 0.0, "disk radius must be positive");
  DomainSpec s;
  s.kind_ = DomainKind::disk;
  s.p0_ = radius;
  return s;
}

DomainSpec DomainSpec::ellipse(double semi_axis_x, double semi_axis_y) {
  require(std::isfinite(semi_axis_x) && std::isfinite(semi_axis_y) && semi_axis_x > 0.0 &&
              semi_axis_y > 0.0,
          "ellipse semi-axes must be positive");
  DomainSpec s;
  s.kind_ = DomainKind::ellipse;
  s.p0_ = semi_axis_x;
  s.p1_ = semi_axis_y;
  return s;
}

DomainSpec DomainSpec::rectangle(double width, double height) {
  require(std::isfinite(width) && std::isfinite(height) && width > 0.0 && height > 0.0,
          "rectangle sides must be positive");
  DomainSpec s;
  s.kind_ = DomainKind::rectangle;
  s.p0_ = width;
  s.p1_ = height;
  s.corners_ = {{-0.5 * width, -0.5 * height},
                {0.5 * width, -0.5 * height},
                {0.5 * width, 0.5 * height},
                {-0.5 * width, 0.5 * height}};
  return s;
}

DomainSpec DomainSpec::polygon(std::vector<Point> vertices) {
  require(vertices.size() >= 3, "polygon needs at least 3 vertices");
  for (const Point& p : vertices) {
    require(std::isfinite(p.x) && std::isfinite(p.y), "polygon vertex is not finite");
  }
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    require(distance(vertices[i], vertices[(i + 1) % n]) > 0.0, "polygon has repeated vertices");
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      require(!segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]),
              "polygon is self-intersecting");
    }
  }
  require(polygon_signed_area(vertices) > 0.0, "polygon must be counter-clockwise");
  DomainSpec s;
  s.kind_ = DomainKind::polygon;
  s.corners_ = std::move(vertices);
  return s;
}

DomainSpec DomainSpec::perturbed_disk(double radius, double amplitude, int mode) {
  require(std::isfinite(radius) && radius > 0.0, "perturbed disk radius must be positive");
  require(std::isfinite(amplitude) && std::abs(amplitude) <= 0.3 * radius,
          "perturbed disk amplitude must satisfy |eps| <= 0.3 R");
  require(mode >= 2, "perturbed disk mode must be at least 2");
  DomainSpec s;
  s.kind_ = DomainKind::perturbed_disk;
  s.p0_ = radius;
  s.p1_ = amplitude;
  s.mode_ = mode;
  return s;
}

bool DomainSpec::is_curved() const {
  return kind_ == DomainKind::disk || kind_ == DomainKind::ellipse ||
         kind_ == DomainKind::perturbed_disk;
}

double DomainSpec::area() const {
  switch (kind_) {
    case DomainKind::disk:
      return kPi * p0_ * p0_;
    case DomainKind::ellipse:
      return kPi * p0_ * p1_;
    case DomainKind::rectangle:
      return p0_ * p1_;
    case DomainKind::polygon:
      return polygon_signed_area(corners_);
    case DomainKind::perturbed_disk:
      return kPi * p0_ * p0_ + 0.5 * kPi * p1_ * p1_;
  }
  return 0.0;
}

DomainSpec DomainSpec::scaled(double factor) const {
  require(std::isfinite(factor) && factor > 0.0, "scale factor must be positive");
  DomainSpec s = *this;
  s.p0_ *= factor;
  if (kind_ != DomainKind::disk) s.p1_ *= factor;
  for (Point& c : s.corners_) c = factor * c;
  return s;
}

DomainSpec DomainSpec::with_area(double target_area) const {
  require(std::isfinite(target_area) && target_area > 0.0, "target area must be positive");
  return scaled(std::sqrt(target_area / area()));
}

Point DomainSpec::curve_point(double theta) const {
  switch (kind_) {
    case DomainKind::disk:
      return {p0_ * std::cos(theta), p0_ * std::sin(theta)};
    case DomainKind::ellipse:
      return {p0_ * std::cos(theta), p1_ * std::sin(theta)};
    case DomainKind::perturbed_disk: {
      const double r = polar_radius(theta);
      return {r * std::cos(theta), r * std::sin(theta)};
    }
    default:
      throw InvalidInput("curve_point requires a curved domain");
  }
}

double DomainSpec::polar_radius(double theta) const {
  switch (kind_) {
    case DomainKind::disk:
      return p0_;
    case DomainKind::ellipse: {
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      return p0_ * p1_ / std::sqrt(p1_ * p1_ * c * c + p0_ * p0_ * s * s);
    }
    case DomainKind::perturbed_disk:
      return p0_ + p1_ * std::cos(mode_ * theta);
    default:
      throw InvalidInput("polar_radius requires a curved domain");
  }
}

bool DomainSpec::contains(Point p) const {
  switch (kind_) {
    case DomainKind::disk:
      return dot(p, p) < p0_ * p0_;
    case DomainKind::ellipse:
      return (p.x * p.x) / (p0_ * p0_) + (p.y * p.y) / (p1_ * p1_) < 1.0;
    case DomainKind::perturbed_disk:
      return norm(p) < polar_radius(std::atan2(p.y, p.x));
    case DomainKind::rectangle:
      return std::abs(p.x) < 0.5 * p0_ && std::abs(p.y) < 0.5 * p1_;
    case DomainKind::polygon:
      return point_in_polygon(corners_, p);
  }
  return false;
}

std::string DomainSpec::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case DomainKind::disk:
      out << "disk:" << detail::shortest(p0_);
      break;
    case DomainKind::ellipse:
      out << "ellipse:" << detail::shortest(p0_) << ',' << detail::shortest(p1_);
      break;
    case DomainKind::rectangle:
      out << "rect:" << detail::shortest(p0_) << ',' << detail::shortest(p1_);
      break;
    case DomainKind::polygon:
      out << "polygon:" << corners_.size() << "-gon";
      break;
    case DomainKind::perturbed_disk:
      out << "perturbed_disk:" << detail::shortest(p0_) << ',' << detail::shortest(p1_) << ',' << mode_;
      break;
  }
  return out.str();
}

double fraenkel_asymmetry(const DomainSpec& spec) {
  const double area = spec.area();
  const double rho = std::sqrt(area / kPi);
  double overlap = 0.0;
  switch (spec.kind()) {
    case DomainKind::disk:
      return 0.0;
    case DomainKind::ellipse:
    case DomainKind::perturbed_disk:
      // Both are centred at the origin, which is also their centroid.
      overlap = polar_overlap(spec, rho);
      break;
    case DomainKind::rectangle:
    case DomainKind::polygon: {
      const auto& poly = spec.corners();
      const Point c = polygon_centroid(poly);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        overlap += circle_triangle_area(poly[i] - c, poly[(i + 1) % poly.size()] - c, rho);
      }
      break;
    }
  }
  return std::max(0.0, 2.0 * (area - overlap) / area);
}

}  // namespace robinlab
