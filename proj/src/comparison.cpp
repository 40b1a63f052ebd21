#include "robinlab/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "json.hpp"

#include "robinlab/errors.hpp"

namespace robinlab {
namespace {

constexpr double kPi = std::numbers::pi;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double grid_point(double lo, double hi, std::size_t i, std::size_t n) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

void require_grid(std::size_t n) {
  if (n < 2) throw InvalidInput("grids need at least two points");
}

}  // namespace

RadialReference::RadialReference(double area, double beta) : area_(area), beta_(beta) {
  if (!std::isfinite(area) || area <= 0.0) throw InvalidInput("reference area must be positive");
  if (!std::isfinite(beta) || beta <= 0.0) throw InvalidInput("Robin parameter beta must be positive");
  radius_ = std::sqrt(area / kPi);
  v_min_ = std::sqrt(area) / (2.0 * std::sqrt(kPi) * beta);
  v_max_ = v_min_ + area / (4.0 * kPi);
}

double RadialReference::perimeter() const { return 2.0 * kPi * radius_; }

double RadialReference::extended_value(double r) const { return (area_ - kPi * r * r) / (4.0 * kPi) + v_min_; }

double RadialReference::value(double r) const {
  if (!(r >= 0.0 && r <= radius_)) throw InvalidInput("radius outside [0, R]");
  return extended_value(r);
}

double RadialReference::vstar(double s) const {
  if (!(s >= 0.0 && s <= area_)) throw InvalidInput("measure outside [0, |Omega|]");
  return (area_ - s) / (4.0 * kPi) + v_min_;
}

double RadialReference::phi(double t) const {
  if (t >= v_max_) return 0.0;
  return std::clamp(area_ - 4.0 * kPi * (t - v_min_), 0.0, area_);
}

double RadialReference::lp_norm(int p) const {
  if (p == 1) return area_ * area_ / (8.0 * kPi) + area_ * v_min_;
  if (p == 2) return std::sqrt(4.0 * kPi / 3.0 * (std::pow(v_max_, 3) - std::pow(v_min_, 3)));
  throw InvalidInput("radial norms are available for p = 1 and p = 2 only");
}

double RadialReference::exterior_reciprocal(double t) const { return t < v_min_ ? perimeter() / v_min_ : 0.0; }

double RadialReference::weighted_exterior_integral() const { return perimeter() / v_min_ * v_min_ * v_min_ / 2.0; }

ScalarField interpolate_radial(std::shared_ptr<const TriangleMesh> mesh, const RadialReference& ref, Point center) {
  return interpolate(std::move(mesh), [&](Point p) { return ref.extended_value(distance(p, center)); });
}

double ToleranceModel::lemma(double h, double dt) const {
  if (!(dt > 0.0)) throw InvalidInput("lemma tolerance needs a positive level step");
  return lemma_constant * h * h / dt * scale;
}

bool ComparisonReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

const CheckRecord& ComparisonReport::find(const std::string& name) const {
  for (const CheckRecord& c : checks) {
    if (c.name == name) return c;
  }
  throw InvalidInput("no check named " + name);
}

void ComparisonReport::write_json(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["meta"] = {{"domain", meta.domain}, {"beta", meta.beta}, {"h", meta.h}, {"area", meta.area}};
  j["checks"] = nlohmann::ordered_json::array();
  for (const CheckRecord& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"anchor", c.anchor},
                           {"lhs", c.lhs},
                           {"rhs", c.rhs},
                           {"residual", c.residual},
                           {"tol", c.tol},
                           {"pass", c.pass}});
  }
  out << j.dump(2) << '\n';
}

void ComparisonReport::write_csv(std::ostream& out) const {
  out << std::setprecision(17) << "name,anchor,lhs,rhs,residual,tol,pass\n";
  for (const CheckRecord& c : checks) {
    out << csv_field(c.name) << ',' << csv_field(c.anchor) << ',' << c.lhs << ',' << c.rhs << ',' << c.residual
        << ',' << c.tol << ',' << (c.pass ? "true" : "false") << '\n';
  }
}

CheckRecord upper_bound_check(std::string name, std::string anchor, double lhs, double rhs, double tol) {
  const double residual = lhs - rhs;
  return {std::move(name), std::move(anchor), lhs, rhs, residual, tol, residual <= tol};
}

CheckRecord identity_check(std::string name, std::string anchor, double lhs, double rhs, double tol) {
  const double residual = std::abs(lhs - rhs);
  return {std::move(name), std::move(anchor), lhs, rhs, residual, tol, residual <= tol};
}

CheckRecord pointwise_comparison(const RearrangementProfile& ustar, const RadialReference& ref, double tol,
                                 std::size_t s_points) {
  require_grid(s_points);
  const double total = std::min(ustar.total_measure(), ref.area());
  double worst = -std::numeric_limits<double>::infinity();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < s_points; ++i) {
    const double s = grid_point(0.0, total, i, s_points);
    const double u = ustar(s);
    const double v = ref.vstar(s);
    if (u - v > worst) {
      worst = u - v;
      lhs = u;
      rhs = v;
    }
  }
  return upper_bound_check("pointwise", "u_sharp <= v", lhs, rhs, tol);
}

CheckRecord norm_comparison(const ScalarField& field, const RadialReference& ref, int p, double tol) {
  if (p != 1 && p != 2) throw InvalidInput("norm comparison supports p = 1 and p = 2 only");
  return upper_bound_check(p == 1 ? "norm_l1" : "norm_l2", p == 1 ? "||u||_1 <= ||v||_1" : "||u||_2 <= ||v||_2",
                           robinlab::lp_norm(field, p), ref.lp_norm(p), tol);
}

CheckRecord minima_comparison(const ScalarField& field, const RadialReference& ref, double tol) {
  return upper_bound_check("minima", "u_m <= v_m", field_extrema(field).min, ref.v_min(), tol);
}

CheckRecord distribution_comparison(const DistributionProfile& mu, const RadialReference& ref, double tol,
                                    std::size_t t_points) {
  require_grid(t_points);
  const double lo = mu.min_value();
  const double hi = std::max(mu.max_value(), ref.v_max());
  double worst = -std::numeric_limits<double>::infinity();
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < t_points; ++i) {
    const double t = grid_point(lo, hi, i, t_points);
    const double a = mu(t);
    const double b = ref.phi(t);
    if (a - b > worst) {
      worst = a - b;
      lhs = a;
      rhs = b;
    }
  }
  return upper_bound_check("distribution", "mu(t) <= phi(t)", lhs, rhs, tol);
}

CheckRecord full_measure_check(const ScalarField& field, std::size_t t_points) {
  require_grid(t_points);
  const double area = mesh_area(field.mesh());
  const double u_min = field_extrema(field).min;
  double worst = 0.0;
  double lhs = area;
  for (std::size_t i = 0; i < t_points; ++i) {
    // Strictly below the minimum, where the super-level set is everything.
    const double t = grid_point(0.0, u_min, i, t_points + 1);
    const double m = distribution(field, t);
    if (std::abs(m - area) >= worst) {
      worst = std::abs(m - area);
      lhs = m;
    }
  }
  return identity_check("full_measure", "mu(t) = |Omega| for t < u_m", lhs, area, 1e-12 * area);
}

LemmaResiduals lemma_residuals(const ScalarField& field, const DistributionProfile& mu, double beta,
                               std::size_t points) {
  if (points < 3) throw InvalidInput("lemma grid needs at least three levels");
  if (!std::isfinite(beta) || beta <= 0.0) throw InvalidInput("Robin parameter beta must be positive");
  const double lo = mu.min_value();
  const double hi = mu.max_value();
  if (!(hi > lo)) throw InvalidInput("lemma residuals need a non-constant field");
  const double margin = 1e-3 * (hi - lo);
  LemmaResiduals out;
  out.step = (hi - lo - 2.0 * margin) / static_cast<double>(points - 1);
  const double dt = out.step;
  const ExteriorReciprocalProfile exterior(field);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + margin + dt * static_cast<double>(i);
    const double left = i == 0 ? t : t - dt;
    const double right = i + 1 == points ? t : t + dt;
    const double width = right - left;
    // E is averaged over the same stencil as mu: near the largest boundary value it
    // falls like a square root and a point value cannot match the difference quotient.
    const double slope = (mu(right) - mu(left)) / width;
    const double mean_exterior = (exterior.cumulative(right) - exterior.cumulative(left)) / width;
    out.levels.push_back(t);
    out.residuals.push_back(-slope + mean_exterior / beta - 4.0 * kPi);
  }
  return out;
}

CheckRecord lemma_check(const LemmaResiduals& residuals, double tol) {
  const double low = *std::min_element(residuals.residuals.begin(), residuals.residuals.end());
  // 4 pi <= -mu' + E / beta, written as lhs <= rhs.
  return upper_bound_check("lemma", "4 pi <= -mu'(t) + (1/beta) int_ext 1/u", 4.0 * kPi, 4.0 * kPi + low, tol);
}

ComparisonReport compare_field(const ScalarField& field, double beta, const CompareOptions& options) {
  const TriangleMesh& mesh = field.mesh();
  const double area = mesh_area(mesh);
  const double h = mesh.h > 0.0 ? mesh.h : max_edge_length(mesh);
  const RadialReference ref(area, beta);
  const RearrangementProfile ustar = decreasing_rearrangement(field);
  const DistributionProfile& mu = ustar.distribution();
  const ExteriorReciprocalProfile exterior(field);
  const Extrema ex = field_extrema(field);
  const double eps = options.tolerance.eps(h);

  ComparisonReport report;
  report.meta = {mesh.domain ? mesh.domain->describe() : "mesh", beta, h, area};
  auto& checks = report.checks;

  checks.push_back(identity_check("flux", "beta * int_boundary u = |Omega|", beta * boundary_integral(field), area,
                                  1e-9 * area));
  checks.push_back(identity_check("rayleigh", "quotient(u) = int u", rayleigh_quotient(field, beta),
                                  torsional_rigidity(field), 1e-8 * torsional_rigidity(field)));
  checks.push_back(pointwise_comparison(ustar, ref, eps * ref.v_max(), options.grids.s_points));
  checks.push_back(norm_comparison(field, ref, 1, eps * ref.lp_norm(1)));
  checks.push_back(norm_comparison(field, ref, 2, eps * ref.lp_norm(2)));
  checks.push_back(minima_comparison(field, ref, eps * ref.v_min()));
  checks.push_back(distribution_comparison(mu, ref, eps * area, options.grids.t_points));
  checks.push_back(full_measure_check(field));

  const LemmaResiduals lemma = lemma_residuals(field, mu, beta, options.grids.t_points);
  checks.push_back(lemma_check(lemma, options.tolerance.lemma(h, lemma.step)));

  // u*(s) <= (|Omega| - s) / (4 pi) + (1 / (4 pi beta)) int_0^u*(s) E.
  {
    const std::size_t n = options.grids.s_points;
    require_grid(n);
    double worst = -std::numeric_limits<double>::infinity();
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = grid_point(0.0, ustar.total_measure(), i, n);
      const double u = ustar(s);
      const double bound = (area - s) / (4.0 * kPi) + exterior.cumulative(u) / (4.0 * kPi * beta);
      if (u - bound > worst) {
        worst = u - bound;
        lhs = u;
        rhs = bound;
      }
    }
    checks.push_back(upper_bound_check("integrated_lemma", "u*(s) <= (|Omega|-s)/(4 pi) + boundary term", lhs,
                                       rhs, eps * ref.v_max()));
  }
  checks.push_back(upper_bound_check("chain", "int_0^u_M int_ext 1/u <= |Omega| / (beta u_m)",
                                     exterior.cumulative(ex.max), area / (beta * ex.min),
                                     eps * area / (beta * ex.min)));
  checks.push_back(identity_check("weighted_boundary", "int_0^u_M t int_ext 1/u dt = |Omega| / (2 beta)",
                                  exterior.weighted(ex.max), area / (2.0 * beta), 1e-3 * area / (2.0 * beta)));
  return report;
}

std::vector<LevelFit> level_set_circle_fits(const ScalarField& field, std::size_t count) {
  const Extrema ex = field_extrema(field);
  std::vector<LevelFit> fits;
  for (std::size_t k = 1; k <= count; ++k) {
    const double t = ex.min + (ex.max - ex.min) * static_cast<double>(k) / static_cast<double>(count + 1);
    fits.push_back({t, circle_fit(level_set_geometry(field, t))});
  }
  return fits;
}

double center_spread(const std::vector<LevelFit>& fits) {
  double spread = 0.0;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (std::size_t j = i + 1; j < fits.size(); ++j) {
      spread = std::max(spread, distance(fits[i].fit.center, fits[j].fit.center));
    }
  }
  return spread;
}

namespace {

RigidityRow probe_member(const DomainSpec& spec, double beta, double h, const RigidityOptions& options) {
  RigidityRow row;
  const DomainSpec scaled = spec.with_area(kPi);
  row.domain = scaled.describe();
  row.asymmetry = fraenkel_asymmetry(scaled);
  auto mesh = std::make_shared<const TriangleMesh>(build_mesh(scaled, h));
  const ScalarField u = solve_torsion(mesh, beta);
  row.h = mesh->h;
  row.area = mesh_area(*mesh);
  const RadialReference ref(row.area, beta);
  const RearrangementProfile ustar = decreasing_rearrangement(u);
  require_grid(options.s_points);
  double deficit = 0.0;
  for (std::size_t i = 0; i < options.s_points; ++i) {
    const double s = grid_point(0.0, row.area, i, options.s_points);
    deficit = std::max(deficit, ref.vstar(s) - ustar(s));
  }
  row.deficit = deficit;
  const Extrema ex = field_extrema(u);
  row.u_min = ex.min;
  row.u_max = ex.max;
  row.v_min = ref.v_min();
  row.v_max = ref.v_max();
  const double quarter = row.area / 4.0;
  row.min_gap = std::min(ref.v_min() - ex.min, ref.vstar(quarter) - ustar(quarter));
  row.tolerance = options.tolerance.eps(row.h) * ref.v_max();
  row.fits = level_set_circle_fits(u, options.fit_levels);
  return row;
}

}  // namespace

std::vector<RigidityRow> rigidity_probe(const std::vector<DomainSpec>& family, double beta, double h,
                                        const RigidityOptions& options) {
  if (family.empty()) throw InvalidInput("rigidity probe needs at least one domain");
  if (!std::isfinite(beta) || beta <= 0.0) throw InvalidInput("Robin parameter beta must be positive");
  std::vector<std::future<RigidityRow>> jobs;
  jobs.reserve(family.size());
  for (const DomainSpec& spec : family) {
    jobs.push_back(std::async(std::launch::async, probe_member, spec, beta, h, options));
  }
  std::vector<RigidityRow> rows;
  rows.reserve(jobs.size());
  for (auto& job : jobs) rows.push_back(job.get());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RigidityRow& a, const RigidityRow& b) { return a.asymmetry < b.asymmetry; });
  return rows;
}

void write_rigidity_csv(std::ostream& out, const std::vector<RigidityRow>& rows) {
  out << std::setprecision(17) << "asymmetry,deficit,min_gap,u_m,v_m,u_M,v_M\n";
  for (const RigidityRow& r : rows) {
    out << r.asymmetry << ',' << r.deficit << ',' << r.min_gap << ',' << r.u_min << ',' << r.v_min << ','
        << r.u_max << ',' << r.v_max << '\n';
  }
}

std::vector<CheckRecord> rigidity_checks(const std::vector<RigidityRow>& rows) {
  if (rows.empty()) throw InvalidInput("rigidity checks need at least one row");
  std::vector<CheckRecord> checks;
  if (rows.size() > 1) {
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) step = std::min(step, rows[i].deficit - rows[i - 1].deficit);
    CheckRecord c{"deficit_monotone", "deficit increases with asymmetry", 0.0, step, -step, 0.0, step > 0.0};
    checks.push_back(std::move(c));
  }
  checks.push_back(upper_bound_check("equality_deficit", "max_s v*(s) - u*(s) ~ 0 on the disk", rows.front().deficit,
                                     0.0, rows.front().tolerance));
  for (const RigidityRow& r : rows) {
    if (r.asymmetry > 0.0) {
      const double gap = std::max(r.v_min - r.u_min, r.v_max - r.u_max);
      CheckRecord c{"extremum_gap:" + r.domain, "not (u_m = v_m and u_M = v_M)", gap, r.tolerance,
                    r.tolerance - gap, 0.0, gap > r.tolerance};
      checks.push_back(std::move(c));
    }
    if (r.deficit <= r.tolerance && !r.fits.empty()) {
      const double fit_tol = r.tolerance / r.v_max;
      double rms = 0.0;
      for (const LevelFit& f : r.fits) rms = std::max(rms, f.fit.rms_residual);
      checks.push_back(upper_bound_check("circle_rms:" + r.domain, "level sets are disks", rms, 0.0, fit_tol));
      checks.push_back(upper_bound_check("center_spread:" + r.domain, "level sets are concentric",
                                         center_spread(r.fits), 0.0, fit_tol));
    }
  }
  return checks;
}

}  // namespace robinlab
