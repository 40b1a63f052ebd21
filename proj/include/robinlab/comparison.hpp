#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "robinlab/fem.hpp"
#include "robinlab/geometry.hpp"
#include "robinlab/rearrange.hpp"

namespace robinlab {

/// Closed-form solution on the disk of a given area:
/// v(x) = (A - pi |x|^2) / (4 pi) + sqrt(A) / (2 sqrt(pi) beta).
class RadialReference {
 public:
  RadialReference(double area, double beta);

  double area() const { return area_; }
  double beta() const { return beta_; }
  double radius() const { return radius_; }
  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }
  double perimeter() const;

  /// Requires 0 <= r <= radius.
  double value(double r) const;
  /// The same formula without the range check.
  double extended_value(double r) const;
  /// Decreasing rearrangement, 0 <= s <= area.
  double vstar(double s) const;
  /// Distribution function, clamped to [0, area].
  double phi(double t) const;
  /// Exact ||v||_p on the disk, p in {1, 2}.
  double lp_norm(int p) const;
  /// int over the exterior boundary part of 1/v: perimeter / v_min below v_min, zero above.
  double exterior_reciprocal(double t) const;
  /// int_0^v_min t * exterior_reciprocal(t) dt.
  double weighted_exterior_integral() const;

 private:
  double area_;
  double beta_;
  double radius_;
  double v_min_;
  double v_max_;
};

/// Interpolant of the reference profile centred at `center`.
ScalarField interpolate_radial(std::shared_ptr<const TriangleMesh> mesh, const RadialReference& ref,
                               Point center = {0.0, 0.0});

/// One-sided tolerances eps(h) = constant * h * scale, multiplied by the magnitude of
/// the quantity under test. Lemma residuals use lemma_constant * h^2 / dt * scale,
/// since the derivative of the distribution is taken by finite differences.
struct ToleranceModel {
  static constexpr double kDefaultConstant = 0.02;
  static constexpr double kDefaultLemmaConstant = 0.5;

  double constant = kDefaultConstant;
  double lemma_constant = kDefaultLemmaConstant;
  double scale = 1.0;

  double eps(double h) const { return constant * h * scale; }
  double lemma(double h, double dt) const;
};

struct CheckRecord {
  std::string name;
  std::string anchor;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Pass means residual <= tol.
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct ReportMeta {
  std::string domain;
  double beta = 0.0;
  double h = 0.0;
  double area = 0.0;
};

class ComparisonReport {
 public:
  ReportMeta meta;
  std::vector<CheckRecord> checks;

  bool all_pass() const;
  const CheckRecord& find(const std::string& name) const;
  void write_json(std::ostream& out) const;
  void write_csv(std::ostream& out) const;
};

/// lhs <= rhs up to tol.
CheckRecord upper_bound_check(std::string name, std::string anchor, double lhs, double rhs, double tol);
/// |lhs - rhs| <= tol.
CheckRecord identity_check(std::string name, std::string anchor, double lhs, double rhs, double tol);

struct GridOptions {
  std::size_t s_points = 1000;
  std::size_t t_points = 200;
};

/// max over a uniform s grid of u*(s) - v*(s).
CheckRecord pointwise_comparison(const RearrangementProfile& ustar, const RadialReference& ref, double tol,
                                 std::size_t s_points = 1000);
CheckRecord norm_comparison(const ScalarField& field, const RadialReference& ref, int p, double tol);
CheckRecord minima_comparison(const ScalarField& field, const RadialReference& ref, double tol);
/// max over a uniform t grid on [u_m, max(u_M, v_M)] of mu(t) - phi(t).
CheckRecord distribution_comparison(const DistributionProfile& mu, const RadialReference& ref, double tol,
                                    std::size_t t_points = 200);
/// mu(t) = |Omega_h| for t <= u_m, by direct clipping on a grid of [0, u_m].
CheckRecord full_measure_check(const ScalarField& field, std::size_t t_points = 16);

struct LemmaResiduals {
  std::vector<double> levels;
  /// -mu'(t) + E(t) / beta - 4 pi, both taken over the stencil around t
  std::vector<double> residuals;
  double step = 0.0;
};

/// Residuals on `points` uniform levels inside (u_m + d, u_M - d), d = 1e-3 (u_M - u_m).
/// The derivative uses central differences, one-sided at the two ends; the boundary term
/// is averaged over the same stencil.
LemmaResiduals lemma_residuals(const ScalarField& field, const DistributionProfile& mu, double beta,
                               std::size_t points = 200);
CheckRecord lemma_check(const LemmaResiduals& residuals, double tol);

struct CompareOptions {
  GridOptions grids;
  ToleranceModel tolerance;
};

/// Every comparison for one solved field; the reference uses the discrete area.
ComparisonReport compare_field(const ScalarField& field, double beta, const CompareOptions& options = {});

struct LevelFit {
  double level = 0.0;
  CircleFit fit;
};

/// Circle fits of {u > t} at `count` levels evenly spaced strictly inside (u_m, u_M).
std::vector<LevelFit> level_set_circle_fits(const ScalarField& field, std::size_t count);
/// Largest distance between two fitted centres.
double center_spread(const std::vector<LevelFit>& fits);

struct RigidityRow {
  /// Member after rescaling to area pi, in domain grammar form.
  std::string domain;
  double asymmetry = 0.0;
  double h = 0.0;
  double area = 0.0;
  /// max over s of v*(s) - u*(s), clamped at zero.
  double deficit = 0.0;
  /// min(v_m - u_m, v*(A/4) - u*(A/4)): the gaps at the boundary and at half the radius.
  double min_gap = 0.0;
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;
  double tolerance = 0.0;
  std::vector<LevelFit> fits;
};

struct RigidityOptions {
  std::size_t s_points = 1000;
  std::size_t fit_levels = 5;
  ToleranceModel tolerance;
};

/// Rescales each member to area pi, solves and compares; members run concurrently.
/// Rows come back sorted by asymmetry.
std::vector<RigidityRow> rigidity_probe(const std::vector<DomainSpec>& family, double beta, double h,
                                        const RigidityOptions& options = {});
void write_rigidity_csv(std::ostream& out, const std::vector<RigidityRow>& rows);

/// Checks over a probe table sorted by asymmetry:
///   deficit_monotone     deficits strictly increase with asymmetry
///   equality_deficit     the least asymmetric row has deficit within tolerance
///   extremum_gap:<dom>   each row with positive asymmetry has u_m or u_M strictly below v_m or v_M
///   circle_rms:<dom>     rows whose deficit is within tolerance have round level sets ...
///   center_spread:<dom>  ... with agreeing centres
/// The fit tolerances are the deficit tolerance divided by v_M, relative to the radius 1.
std::vector<CheckRecord> rigidity_checks(const std::vector<RigidityRow>& rows);

}  // namespace robinlab
