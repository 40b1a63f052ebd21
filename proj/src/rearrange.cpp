#include "robinlab/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "clip.hpp"
#include "robinlab/errors.hpp"

namespace robinlab {
namespace {

constexpr double kPi = std::numbers::pi;

std::array<Point, 3> corners(const TriangleMesh& mesh, std::size_t t) {
  const auto& v = mesh.triangles[t];
  return {mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]]};
}

std::array<double, 3> corner_values(const ScalarField& f, std::size_t t) {
  const auto& v = f.mesh().triangles[t];
  return {f[v[0]], f[v[1]], f[v[2]]};
}

double area_above(const ScalarField& field, std::size_t t, double level) {
  const auto u = corner_values(field, t);
  if (u[0] > level && u[1] > level && u[2] > level) return field.mesh().triangle_area(t);
  if (u[0] <= level && u[1] <= level && u[2] <= level) return 0.0;
  return detail::clip_above(corners(field.mesh(), t), u, level).area();
}

std::uint64_t edge_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

// Where the interpolant on edge (a, b) equals the level; computed from the lower
// index so both triangles sharing the edge get the same bits.
Point crossing(const ScalarField& field, std::size_t a, std::size_t b, double level) {
  if (a > b) std::swap(a, b);
  const Point pa = field.mesh().vertices[a];
  const Point pb = field.mesh().vertices[b];
  const double s = (level - field[a]) / (field[b] - field[a]);
  return pa + s * (pb - pa);
}

// int ds / u along a straight piece of length len where u runs linearly from u1 to u2.
double reciprocal_piece(double len, double u1, double u2) {
  if (!(u1 > 0.0 && u2 > 0.0)) throw InvalidInput("reciprocal boundary integral needs a positive trace");
  const double r = (u2 - u1) / u1;
  const double ratio = std::abs(r) < 1e-6 ? 1.0 - r / 2.0 + r * r / 3.0 : std::log1p(r) / r;
  return len / u1 * ratio;
}

void require_level_inside(const ScalarField& field, double t) {
  const Extrema e = field_extrema(field);
  if (!(e.min < t && t < e.max)) {
    throw InvalidInput("level must lie strictly between the field minimum and maximum");
  }
}

}  // namespace

DistributionProfile::DistributionProfile(const ScalarField& field) {
  const TriangleMesh& mesh = field.mesh();
  levels_.assign(field.values().begin(), field.values().end());
  std::sort(levels_.begin(), levels_.end());
  levels_.erase(std::unique(levels_.begin(), levels_.end()), levels_.end());
  const std::size_t k = levels_.size();
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(levels_.begin(), levels_.end(), v) - levels_.begin());
  };

  pieces_.assign(k > 0 ? k - 1 : 0, Piece{});
  jumps_.assign(k, 0.0);
  std::vector<double> starts_at(k, 0.0);  // area of triangles whose lowest value is t_j

  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    auto u = corner_values(field, t);
    std::sort(u.begin(), u.end());
    const auto [a, b, c] = u;
    const double area = mesh.triangle_area(t);
    total_ += area;
    const std::size_t ia = index_of(a);
    const std::size_t ib = index_of(b);
    const std::size_t ic = index_of(c);
    starts_at[ia] += area;
    if (ia == ic) {
      jumps_[ia] += area;
      continue;
    }
    // Lower part: area * (1 - (t - a)^2 / ((b - a)(c - a))).
    for (std::size_t j = ia; j < ib; ++j) {
      const double scale = area / ((b - a) * (c - a));
      const double d = levels_[j] - a;
      pieces_[j].c0 += area - scale * d * d;
      pieces_[j].c1 -= 2.0 * scale * d;
      pieces_[j].c2 -= scale;
    }
    // Upper part: area * (c - t)^2 / ((c - a)(c - b)).
    for (std::size_t j = ib; j < ic; ++j) {
      const double scale = area / ((c - a) * (c - b));
      const double e = c - levels_[j];
      pieces_[j].c0 += scale * e * e;
      pieces_[j].c1 -= 2.0 * scale * e;
      pieces_[j].c2 += scale;
    }
  }
  // Triangles entirely above a gap count whole.
  double above = 0.0;
  for (std::size_t j = k; j-- > 1;) {
    above += starts_at[j];
    pieces_[j - 1].c0 += above;
  }
  values_.assign(k, 0.0);
  // The suffix sums can overshoot the directly summed total by rounding.
  for (std::size_t j = 0; j + 1 < k; ++j) values_[j] = std::min(pieces_[j].c0, total_);
}

std::size_t DistributionProfile::interval_of(double t) const {
  return static_cast<std::size_t>(std::upper_bound(levels_.begin(), levels_.end(), t) - levels_.begin()) - 1;
}

double DistributionProfile::operator()(double t) const {
  if (t < levels_.front()) return total_;
  if (t >= levels_.back()) return 0.0;
  const std::size_t j = interval_of(t);
  const Piece& p = pieces_[j];
  const double tau = t - levels_[j];
  return std::clamp(p.c0 + tau * (p.c1 + tau * p.c2), 0.0, total_);
}

double DistributionProfile::derivative(double t) const {
  if (t < levels_.front() || t >= levels_.back()) return 0.0;
  const std::size_t j = interval_of(t);
  return pieces_[j].c1 + 2.0 * pieces_[j].c2 * (t - levels_[j]);
}

double DistributionProfile::left_limit(double t) const {
  const auto it = std::lower_bound(levels_.begin(), levels_.end(), t);
  if (it != levels_.end() && *it == t) {
    const auto j = static_cast<std::size_t>(it - levels_.begin());
    return values_[j] + jumps_[j];
  }
  return (*this)(t);
}

double DistributionProfile::solve_in_interval(std::size_t j, double s) const {
  const Piece& p = pieces_[j];
  const double width = levels_[j + 1] - levels_[j];
  const double q = p.c0 - s;
  if (q <= 0.0) return levels_[j];
  // Smallest positive root of c2 tau^2 + c1 tau + q, written to avoid cancellation.
  const double disc = std::max(0.0, p.c1 * p.c1 - 4.0 * p.c2 * q);
  const double denom = -p.c1 + std::sqrt(disc);
  double tau = denom > 0.0 ? 2.0 * q / denom : width;
  return levels_[j] + std::clamp(tau, 0.0, width);
}

double DistributionProfile::moment(int p) const {
  if (p != 1 && p != 2) throw InvalidInput("moments are available for p = 1 and p = 2 only");
  double sum = 0.0;
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    sum += jumps_[j] * (p == 1 ? std::abs(levels_[j]) : levels_[j] * levels_[j]);
  }
  // On each gap -mu'(t) = -c1 - 2 c2 tau; integrate t^p times it exactly.
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    const Piece& q = pieces_[j];
    const double t0 = levels_[j];
    const double w = levels_[j + 1] - t0;
    const double m0 = -q.c1 * w - q.c2 * w * w;
    const double m1 = -q.c1 * w * w / 2.0 - 2.0 * q.c2 * w * w * w / 3.0;
    if (p == 1) {
      sum += t0 * m0 + m1;
    } else {
      const double m2 = -q.c1 * w * w * w / 3.0 - q.c2 * w * w * w * w / 2.0;
      sum += t0 * t0 * m0 + 2.0 * t0 * m1 + m2;
    }
  }
  return sum;
}

RearrangementProfile::RearrangementProfile(DistributionProfile distribution) : mu_(std::move(distribution)) {}

double RearrangementProfile::operator()(double s) const {
  const double total = mu_.total_measure();
  if (!(s >= 0.0 && s <= total)) throw InvalidInput("rearrangement evaluated outside [0, |Omega|]");
  const auto& values = mu_.breakpoint_values();
  const auto& levels = mu_.breakpoints();
  if (s == 0.0) return levels.back();
  // Breakpoints with mu(t_j) > s form a prefix.
  const auto count = static_cast<std::size_t>(
      std::partition_point(values.begin(), values.end(), [s](double m) { return m > s; }) - values.begin());
  if (count == 0) return levels.front();
  const std::size_t j = count - 1;
  if (s < values[j + 1] + mu_.jumps()[j + 1]) return levels[j + 1];
  return mu_.solve_in_interval(j, s);
}

std::vector<double> RearrangementProfile::breakpoints() const {
  std::vector<double> s;
  const auto& values = mu_.breakpoint_values();
  const auto& jumps = mu_.jumps();
  for (std::size_t j = 0; j < values.size(); ++j) {
    s.push_back(values[j]);
    if (jumps[j] > 0.0) s.push_back(std::min(mu_.total_measure(), values[j] + jumps[j]));
  }
  s.push_back(mu_.total_measure());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

double RearrangementProfile::lp_norm(int p) const {
  const double m = mu_.moment(p);
  return p == 1 ? m : std::sqrt(m);
}

double distribution(const ScalarField& field, double t) {
  double sum = 0.0;
  for (std::size_t k = 0; k < field.mesh().num_triangles(); ++k) sum += area_above(field, k, t);
  return sum;
}

RearrangementProfile decreasing_rearrangement(const ScalarField& field) {
  if (field_extrema(field).min < 0.0) throw InvalidInput("only non-negative fields are rearranged");
  return RearrangementProfile(DistributionProfile(field));
}

double schwartz_value(const RearrangementProfile& profile, Point x) {
  const double s = kPi * dot(x, x);
  if (s > profile.total_measure()) throw InvalidInput("point lies outside the equal-area disk");
  return profile(s);
}

LevelSetGeometry level_set_geometry(const ScalarField& field, double t) {
  require_level_inside(field, t);
  const TriangleMesh& mesh = field.mesh();
  LevelSetGeometry g;
  g.level = t;

  // Oriented contour pieces keyed by the mesh edges they cross; {u > t} lies on the left.
  std::unordered_map<std::uint64_t, std::uint64_t> next;
  std::unordered_map<std::uint64_t, Point> where;
  std::unordered_map<std::uint64_t, bool> has_incoming;
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    g.area += area_above(field, k, t);
    const auto& v = mesh.triangles[k];
    bool in[3];
    for (int i = 0; i < 3; ++i) in[i] = field[v[i]] > t;
    if (in[0] == in[1] && in[1] == in[2]) continue;
    std::uint64_t leave = 0, enter = 0;
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3;
      if (in[i] == in[j]) continue;
      const std::uint64_t key = edge_key(v[i], v[j]);
      where.try_emplace(key, crossing(field, v[i], v[j], t));
      if (in[i]) {
        leave = key;
      } else {
        enter = key;
      }
    }
    next[leave] = enter;
    has_incoming[enter] = true;
  }

  std::unordered_map<std::uint64_t, bool> used;
  auto trace = [&](std::uint64_t start) {
    std::vector<Point> line{where.at(start)};
    std::uint64_t key = start;
    used[key] = true;
    for (auto it = next.find(key); it != next.end(); it = next.find(key)) {
      key = it->second;
      line.push_back(where.at(key));
      if (used[key]) break;
      used[key] = true;
    }
    for (std::size_t i = 1; i < line.size(); ++i) g.interior_perimeter += distance(line[i - 1], line[i]);
    g.contours.push_back(std::move(line));
  };
  // Open polylines start on the boundary; whatever is left closes on itself.
  std::vector<std::uint64_t> starts;
  for (const auto& [key, _] : next) {
    if (!has_incoming.count(key)) starts.push_back(key);
  }
  std::sort(starts.begin(), starts.end());
  for (std::uint64_t key : starts) trace(key);
  std::vector<std::uint64_t> rest;
  for (const auto& [key, _] : next) rest.push_back(key);
  std::sort(rest.begin(), rest.end());
  for (std::uint64_t key : rest) {
    if (!used[key]) trace(key);
  }

  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const auto [a, b] = e.vertices;
    const bool in_a = field[a] > t;
    const bool in_b = field[b] > t;
    if (!in_a && !in_b) continue;
    Point p = mesh.vertices[a];
    Point q = mesh.vertices[b];
    if (!in_a) p = crossing(field, a, b, t);
    if (!in_b) q = crossing(field, a, b, t);
    g.exterior.push_back({p, q});
    g.exterior_length += distance(p, q);
  }
  return g;
}

double isoperimetric_residual(const ScalarField& field, double t) {
  const LevelSetGeometry g = level_set_geometry(field, t);
  return g.perimeter() - 2.0 * std::sqrt(kPi * g.area);
}

double exterior_reciprocal_integral(const ScalarField& field, double t) {
  const Extrema e = field_extrema(field);
  if (!(t >= 0.0 && t < e.max)) throw InvalidInput("level must lie in [0, field maximum)");
  const TriangleMesh& mesh = field.mesh();
  double sum = 0.0;
  for (const BoundaryEdge& edge : mesh.boundary_edges) {
    const auto [a, b] = edge.vertices;
    const double ua = field[a];
    const double ub = field[b];
    if (ua <= t && ub <= t) continue;
    const double len = distance(mesh.vertices[a], mesh.vertices[b]);
    if (ua > t && ub > t) {
      sum += ua == ub ? len / ua : reciprocal_piece(len, ua, ub);
      continue;
    }
    // Part of the edge above the level, from the crossing to the higher end.
    const double high = std::max(ua, ub);
    const double low = std::min(ua, ub);
    sum += reciprocal_piece(len * (high - t) / (high - low), t, high);
  }
  return sum;
}

ExteriorReciprocalProfile::ExteriorReciprocalProfile(const ScalarField& field) : field_(&field) {
  const TriangleMesh& mesh = field.mesh();
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    levels_.push_back(field[e.vertices[0]]);
    levels_.push_back(field[e.vertices[1]]);
  }
  std::sort(levels_.begin(), levels_.end());
  levels_.erase(std::unique(levels_.begin(), levels_.end()), levels_.end());
  if (levels_.front() <= 0.0) throw InvalidInput("exterior integrals need a positive boundary trace");
  levels_.insert(levels_.begin(), 0.0);
  plain_.assign(levels_.size(), 0.0);
  moment_.assign(levels_.size(), 0.0);
  // Below the smallest boundary value the whole boundary counts and E is constant.
  const double e0 = (*this)(0.0);
  plain_[1] = e0 * levels_[1];
  moment_[1] = e0 * levels_[1] * levels_[1] / 2.0;
  for (std::size_t k = 1; k + 1 < levels_.size(); ++k) {
    plain_[k + 1] = plain_[k] + boost::math::quadrature::gauss<double, 10>::integrate(
                                    [this](double t) { return (*this)(t); }, levels_[k], levels_[k + 1]);
    moment_[k + 1] = moment_[k] + boost::math::quadrature::gauss<double, 10>::integrate(
                                      [this](double t) { return t * (*this)(t); }, levels_[k], levels_[k + 1]);
  }
}

double ExteriorReciprocalProfile::operator()(double t) const {
  return t >= levels_.back() ? 0.0 : exterior_reciprocal_integral(*field_, t);
}

double ExteriorReciprocalProfile::cumulative(double tau) const {
  if (tau <= 0.0) return 0.0;
  if (tau >= levels_.back()) return plain_.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(levels_.begin(), levels_.end(), tau) - levels_.begin()) - 1;
  if (k == 0) return (*this)(0.0) * tau;
  return plain_[k] + boost::math::quadrature::gauss<double, 10>::integrate(
                         [this](double t) { return (*this)(t); }, levels_[k], tau);
}

double ExteriorReciprocalProfile::weighted(double tau) const {
  if (tau <= 0.0) return 0.0;
  if (tau >= levels_.back()) return moment_.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(levels_.begin(), levels_.end(), tau) - levels_.begin()) - 1;
  if (k == 0) return (*this)(0.0) * tau * tau / 2.0;
  return moment_[k] + boost::math::quadrature::gauss<double, 10>::integrate(
                          [this](double t) { return t * (*this)(t); }, levels_[k], tau);
}

double weighted_exterior_integral(const ScalarField& field) {
  return ExteriorReciprocalProfile(field).weighted(field_extrema(field).max);
}

double gradient_band_integral(const ScalarField& field, double t_low, double t_high) {
  if (!(t_low <= t_high)) throw InvalidInput("band requires t_low <= t_high");
  const TriangleMesh& mesh = field.mesh();
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const auto& v = mesh.triangles[k];
    const Point p0 = mesh.vertices[v[0]];
    const Point e1 = mesh.vertices[v[1]] - p0;
    const Point e2 = mesh.vertices[v[2]] - p0;
    const double twice = cross(e1, e2);
    const double d1 = field[v[1]] - field[v[0]];
    const double d2 = field[v[2]] - field[v[0]];
    const Point grad{(d1 * e2.y - d2 * e1.y) / twice, (d2 * e1.x - d1 * e2.x) / twice};
    const double band = area_above(field, k, t_low) - area_above(field, k, t_high);
    sum += norm(grad) * band;
  }
  return sum;
}

double flat_measure(const ScalarField& field, double lo, double hi) {
  const TriangleMesh& mesh = field.mesh();
  double sum = 0.0;
  for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
    const auto u = corner_values(field, k);
    if (u[0] == u[1] && u[1] == u[2] && lo < u[0] && u[0] < hi) sum += mesh.triangle_area(k);
  }
  return sum;
}

CircleFit circle_fit(const LevelSetGeometry& geometry) {
  // Segment endpoints weighted by half the segment length.
  std::vector<Point> points;
  std::vector<double> weights;
  auto add_segment = [&](Point a, Point b) {
    const double w = 0.5 * distance(a, b);
    if (w <= 0.0) return;
    points.push_back(a);
    weights.push_back(w);
    points.push_back(b);
    weights.push_back(w);
  };
  for (const auto& line : geometry.contours) {
    for (std::size_t i = 1; i < line.size(); ++i) add_segment(line[i - 1], line[i]);
  }
  for (const auto& seg : geometry.exterior) add_segment(seg[0], seg[1]);
  if (points.size() < 3) throw InvalidInput("circle fit needs at least three contour points");

  // Centre and scale the data so the normal equations stay well conditioned.
  double wsum = 0.0;
  Point mean{0.0, 0.0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    wsum += weights[i];
    mean = mean + weights[i] * points[i];
  }
  mean = (1.0 / wsum) * mean;
  double spread = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) spread += weights[i] * dot(points[i] - mean, points[i] - mean);
  spread = std::sqrt(spread / wsum);
  if (!(spread > 0.0)) throw InvalidInput("circle fit of coincident points");

  // x^2 + y^2 + D x + E y + F = 0 in scaled coordinates.
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point q = (1.0 / spread) * (points[i] - mean);
    const Eigen::Vector3d row(q.x, q.y, 1.0);
    normal += weights[i] * row * row.transpose();
    rhs -= weights[i] * dot(q, q) * row;
  }
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(normal);
  // An exactly zero pivot is silently pseudo-inverted by LDLT, so look at the pivots too.
  const Eigen::Vector3d pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-10 * pivots.maxCoeff()) ||
      !(ldlt.rcond() > 1e-10)) {
    throw InvalidInput("circle fit is degenerate (collinear contour)");
  }
  const Eigen::Vector3d x = ldlt.solve(rhs);
  const Point c{-x(0) / 2.0, -x(1) / 2.0};
  const double r2 = dot(c, c) - x(2);
  if (!(r2 > 0.0)) throw InvalidInput("circle fit is degenerate (no real radius)");

  CircleFit fit;
  fit.center = mean + spread * c;
  fit.radius = spread * std::sqrt(r2);
  double sq = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = distance(points[i], fit.center) - fit.radius;
    sq += weights[i] * d * d;
  }
  fit.rms_residual = std::sqrt(sq / wsum) / fit.radius;
  return fit;
}

void write_distribution_csv(std::ostream& out, const DistributionProfile& profile, std::size_t n) {
  if (n < 2) throw InvalidInput("profile export needs at least two rows");
  out << std::setprecision(17) << "t,mu\n";
  const double lo = profile.min_value();
  const double hi = profile.max_value();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out << t << ',' << profile(t) << '\n';
  }
}

void write_rearrangement_csv(std::ostream& out, const RearrangementProfile& profile, std::size_t n) {
  if (n < 2) throw InvalidInput("profile export needs at least two rows");
  out << std::setprecision(17) << "s,u_star\n";
  const double total = profile.total_measure();
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::min(total, total * static_cast<double>(i) / static_cast<double>(n - 1));
    out << s << ',' << profile(s) << '\n';
  }
}

}  // namespace robinlab
