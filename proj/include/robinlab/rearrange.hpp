#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "robinlab/fem.hpp"
#include "robinlab/geometry.hpp"

namespace robinlab {

/// Exact distribution function t -> |{u > t}| of a piecewise-linear field.
///
/// Between consecutive distinct vertex values the function is a quadratic in the
/// offset from the left breakpoint. It jumps only where whole triangles are flat.
class DistributionProfile {
 public:
  explicit DistributionProfile(const ScalarField& field);

  double operator()(double t) const;
  /// Right derivative, exact on the interpolant.
  double derivative(double t) const;
  /// Left limit, which differs from the value only at flat levels.
  double left_limit(double t) const;

  double total_measure() const { return total_; }
  double min_value() const { return levels_.front(); }
  double max_value() const { return levels_.back(); }
  /// Sorted distinct vertex values.
  const std::vector<double>& breakpoints() const { return levels_; }
  /// mu(t_j), the right-continuous value at each breakpoint.
  const std::vector<double>& breakpoint_values() const { return values_; }
  /// Area of {u = t_j} for each breakpoint.
  const std::vector<double>& jumps() const { return jumps_; }

  /// Smallest level in [t_j, t_j+1] where the profile drops to s, with mu(t_j) > s.
  double solve_in_interval(std::size_t j, double s) const;
  /// Integral of |t|^p against -d mu, p in {1, 2}.
  double moment(int p) const;

 private:
  struct Piece {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  };
  std::size_t interval_of(double t) const;

  std::vector<double> levels_;
  std::vector<Piece> pieces_;  // one per gap between breakpoints
  std::vector<double> values_;
  std::vector<double> jumps_;
  double total_ = 0.0;
};

/// Generalized inverse s -> sup{t : mu(t) > s} on [0, |Omega_h|].
class RearrangementProfile {
 public:
  explicit RearrangementProfile(DistributionProfile distribution);

  double operator()(double s) const;
  double total_measure() const { return mu_.total_measure(); }
  const DistributionProfile& distribution() const { return mu_; }
  /// Values of s where the rearrangement has a kink or a jump (descending in t).
  std::vector<double> breakpoints() const;
  /// (int_0^|Omega| |u*|^p ds)^(1/p), p in {1, 2}.
  double lp_norm(int p) const;

 private:
  DistributionProfile mu_;
};

/// |{u > t}| by clipping every triangle; independent of DistributionProfile.
double distribution(const ScalarField& field, double t);

/// Rejects fields with negative values.
RearrangementProfile decreasing_rearrangement(const ScalarField& field);

/// u*(pi |x|^2); points outside the equal-area disk are rejected.
double schwartz_value(const RearrangementProfile& profile, Point x);

struct LevelSetGeometry {
  double level = 0.0;
  /// Polylines of {u = t} inside the domain; closed ones repeat the first point.
  std::vector<std::vector<Point>> contours;
  /// Boundary sub-segments where u > t.
  std::vector<std::array<Point, 2>> exterior;
  double interior_perimeter = 0.0;
  double exterior_length = 0.0;
  double area = 0.0;

  double perimeter() const { return interior_perimeter + exterior_length; }
};

/// Requires min < t < max.
LevelSetGeometry level_set_geometry(const ScalarField& field, double t);

/// P({u > t}) - 2 sqrt(pi) |{u > t}|^(1/2).
double isoperimetric_residual(const ScalarField& field, double t);

/// Integral of 1/u over the part of the boundary where u > t, exact per edge.
double exterior_reciprocal_integral(const ScalarField& field, double t);

/// Running integrals of E(t) = exterior_reciprocal_integral(field, t) over [0, tau].
/// E is smooth between sorted boundary values, so each gap gets one Gauss-Legendre rule.
class ExteriorReciprocalProfile {
 public:
  explicit ExteriorReciprocalProfile(const ScalarField& field);

  double operator()(double t) const;
  /// int_0^tau E(t) dt
  double cumulative(double tau) const;
  /// int_0^tau t E(t) dt
  double weighted(double tau) const;

 private:
  const ScalarField* field_;
  std::vector<double> levels_;  // 0 followed by the sorted boundary values
  std::vector<double> plain_;   // cumulative integrals at levels_
  std::vector<double> moment_;
};

/// int_0^max t E(t) dt.
double weighted_exterior_integral(const ScalarField& field);

/// Integral of |grad u| over {t_low < u <= t_high}.
double gradient_band_integral(const ScalarField& field, double t_low, double t_high);

/// Area of triangles with zero gradient whose value lies strictly inside (lo, hi).
double flat_measure(const ScalarField& field, double lo, double hi);

struct CircleFit {
  Point center;
  double radius = 0.0;
  /// Length-weighted rms of |p - center| - radius, divided by radius.
  double rms_residual = 0.0;
};

/// Algebraic least-squares circle through the whole level-set boundary.
/// Throws InvalidInput for fewer than three points or collinear points.
CircleFit circle_fit(const LevelSetGeometry& geometry);

/// "t,mu" on n uniform levels spanning [min, max].
void write_distribution_csv(std::ostream& out, const DistributionProfile& profile, std::size_t n);
/// "s,u_star" on n uniform measures spanning [0, |Omega_h|].
void write_rearrangement_csv(std::ostream& out, const RearrangementProfile& profile, std::size_t n);

}  // namespace robinlab
