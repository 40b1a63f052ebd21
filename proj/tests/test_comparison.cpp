#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "robinlab/comparison.hpp"
#include "robinlab/errors.hpp"
#include "support.hpp"

using namespace robinlab;
using testing::kPi;

namespace {

ScalarField solved(const DomainSpec& spec, double h, double beta = 1.0) {
  return solve_torsion(testing::make_mesh(spec, h), beta);
}

}  // namespace

TEST_CASE("radial reference values") {
  const RadialReference ref(kPi, 1.0);
  CHECK(ref.radius() == doctest::Approx(1.0));
  CHECK(ref.value(0.0) == doctest::Approx(0.75));
  CHECK(ref.value(1.0) == doctest::Approx(0.5));
  CHECK(ref.v_min() == doctest::Approx(0.5));
  CHECK(ref.v_max() == doctest::Approx(0.75));
  CHECK_THROWS_AS(ref.value(1.01), InvalidInput);
  CHECK_THROWS_AS(ref.value(-0.1), InvalidInput);
  CHECK_THROWS_AS(ref.vstar(kPi * 1.01), InvalidInput);
  CHECK_THROWS_AS(RadialReference(kPi, 0.0), InvalidInput);
  CHECK_THROWS_AS(RadialReference(-1.0, 1.0), InvalidInput);

  // Large beta gives the Dirichlet profile.
  const RadialReference stiff(kPi, 1e12);
  CHECK(stiff.value(0.5) == doctest::Approx((kPi - kPi * 0.25) / (4 * kPi)).epsilon(1e-10));

  CHECK(ref.vstar(kPi) == doctest::Approx(ref.v_min()).epsilon(1e-15));
  CHECK(ref.vstar(0.0) == doctest::Approx(ref.v_max()).epsilon(1e-15));
  testing::Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const double area = testing::uniform(rng, 0.5, 5.0), beta = testing::uniform(rng, 0.2, 4.0);
    const RadialReference r(area, beta);
    const double rad = testing::uniform(rng, 0.0, r.radius());
    CHECK(r.vstar(kPi * rad * rad) == doctest::Approx(r.value(rad)).epsilon(1e-14));
    CHECK(r.phi(r.value(rad)) == doctest::Approx(kPi * rad * rad).scale(area).epsilon(1e-12));
    CHECK(r.phi(r.v_min() - 0.1) == area);
    CHECK(r.phi(r.v_max() + 0.1) == 0.0);
    // Norms by quadrature in polar coordinates.
    for (int p : {1, 2}) {
      const double q = testing::simpson([&](double s) { return 2 * kPi * s * std::pow(r.value(s), p); }, 0.0,
                                        r.radius(), 2000);
      CHECK(r.lp_norm(p) == doctest::Approx(p == 1 ? q : std::sqrt(q)).epsilon(1e-10));
    }
    CHECK(r.weighted_exterior_integral() == doctest::Approx(area / (2 * beta)).epsilon(1e-13));
    CHECK(r.exterior_reciprocal(r.v_min() * 0.5) == doctest::Approx(r.perimeter() / r.v_min()).epsilon(1e-14));
    CHECK(r.exterior_reciprocal(r.v_min() * 1.5) == 0.0);
  }
  CHECK(ref.lp_norm(1) == doctest::Approx(5 * kPi / 8).epsilon(1e-14));
  CHECK_THROWS_AS(ref.lp_norm(3), InvalidInput);
}

TEST_CASE("check records") {
  const CheckRecord up = upper_bound_check("a", "x <= y", 1.0, 2.0, 0.0);
  CHECK(up.pass);
  CHECK(up.residual == -1.0);
  CHECK_FALSE(upper_bound_check("a", "x <= y", 2.0, 1.0, 0.5).pass);
  CHECK(upper_bound_check("a", "x <= y", 2.0, 1.0, 1.0).pass);
  CHECK(identity_check("b", "x = y", 1.0, 1.2, 0.25).pass);
  CHECK_FALSE(identity_check("b", "x = y", 1.4, 1.0, 0.25).pass);
  CHECK(identity_check("b", "x = y", 1.0, 1.4, 0.25).residual == doctest::Approx(0.4));
}

TEST_CASE("disk: the equality case") {
  const ScalarField u = solved(DomainSpec::disk(1), 0.02);
  const double area = mesh_area(u.mesh());
  const RadialReference ref(area, 1.0);
  const RearrangementProfile ustar = decreasing_rearrangement(u);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = area * i / 999.0;
    worst = std::max(worst, std::abs(ustar(s) - ref.vstar(s)));
  }
  CHECK(worst <= 1e-3);
  CHECK(norm_comparison(u, ref, 1, 1e-3).pass);
  CHECK(std::abs(lp_norm(u, 1) - 5 * kPi / 8) <= 1e-3 * 5 * kPi / 8 + std::abs(area - kPi));
  CHECK(std::abs(field_extrema(u).min - ref.v_min()) <= 1e-3);

  const ComparisonReport report = compare_field(u, 1.0);
  CHECK(report.all_pass());
  CHECK(report.meta.area == area);
  CHECK(report.meta.domain == "disk:1");
}

TEST_CASE("ellipse and square: strict comparisons, stable under refinement") {
  for (const DomainSpec& spec : {DomainSpec::ellipse(1.5, 1).with_area(kPi), DomainSpec::rectangle(1, 1).with_area(kPi)}) {
    CAPTURE(spec.describe());
    double gap[2], l1[2], l2[2], minima[2];
    int k = 0;
    for (double h : {0.05, 0.025}) {
      const ScalarField u = solved(spec, h);
      const double area = mesh_area(u.mesh());
      const RadialReference ref(area, 1.0);
      const RearrangementProfile ustar = decreasing_rearrangement(u);
      // Largest u* - v* over the interior of [0, |Omega|].
      const CheckRecord pw = pointwise_comparison(ustar, ref, 0.0);
      CHECK(pw.pass);
      double smallest = 1e9;
      for (int i = 1; i < 999; ++i) {
        const double s = area * i / 999.0;
        smallest = std::min(smallest, ref.vstar(s) - ustar(s));
      }
      gap[k] = smallest;
      l1[k] = ref.lp_norm(1) - lp_norm(u, 1);
      l2[k] = ref.lp_norm(2) - lp_norm(u, 2);
      minima[k] = ref.v_min() - field_extrema(u).min;
      CHECK(norm_comparison(u, ref, 1, 0.0).pass);
      CHECK(norm_comparison(u, ref, 2, 0.0).pass);
      CHECK(minima_comparison(u, ref, 0.0).pass);
      CHECK_THROWS_AS(norm_comparison(u, ref, 3, 0.0), InvalidInput);
      CHECK(compare_field(u, 1.0).all_pass());
      ++k;
    }
    CHECK(gap[1] > 0.0);
    CHECK(gap[1] == doctest::Approx(gap[0]).epsilon(0.2));
    CHECK(l1[1] > 0.0);
    CHECK(l1[1] == doctest::Approx(l1[0]).epsilon(0.2));
    CHECK(l2[1] > 0.0);
    CHECK(l2[1] == doctest::Approx(l2[0]).epsilon(0.2));
    CHECK(minima[1] > 0.0);
  }
}

TEST_CASE("square: distribution strictly below on a level interval") {
  const ScalarField u = solved(DomainSpec::rectangle(1, 1).with_area(kPi), 0.03);
  const double area = mesh_area(u.mesh());
  const RadialReference ref(area, 1.0);
  const DistributionProfile mu(u);
  const auto ex = field_extrema(u);
  int strict = 0;
  for (int i = 0; i < 200; ++i) {
    const double t = ex.min + (ex.max - ex.min) * i / 199.0;
    if (mu(t) < ref.phi(t) - 1e-3) ++strict;
  }
  CHECK(strict > 100);
  CHECK(mu(ref.v_max()) == 0.0);
  CHECK(ref.phi(ref.v_max()) == 0.0);
  CHECK(full_measure_check(u).pass);
  CHECK(mu(ex.min - 1e-9) == doctest::Approx(area).epsilon(1e-13));
}

TEST_CASE("lemma residuals") {
  SUBCASE("radial interpolant: equality") {
    auto mesh = testing::make_mesh(DomainSpec::disk(1), 0.02);
    const RadialReference ref(kPi, 1.0);
    const ScalarField v = interpolate_radial(mesh, ref);
    const LemmaResiduals r = lemma_residuals(v, DistributionProfile(v), 1.0);
    REQUIRE(r.levels.size() == 200);
    const auto ex = field_extrema(v);
    CHECK(r.levels.front() > ex.min);
    CHECK(r.levels.back() < ex.max);
    for (double x : r.residuals) CHECK(std::abs(x) <= 0.1);
  }
  SUBCASE("ellipse: strictly positive on mid levels") {
    const ScalarField u = solved(DomainSpec::ellipse(1.5, 1), 0.03);
    const LemmaResiduals r = lemma_residuals(u, DistributionProfile(u), 1.0);
    const double tol = ToleranceModel{}.lemma(u.mesh().h, r.step);
    for (double x : r.residuals) CHECK(x >= -tol);
    for (std::size_t i = r.levels.size() / 4; i < 3 * r.levels.size() / 4; ++i) CHECK(r.residuals[i] > 0.1);
    CHECK(lemma_check(r, tol).pass);
  }
  SUBCASE("integrating the lemma") {
    const ScalarField u = solved(DomainSpec::perturbed_disk(1, 0.2, 3), 0.04, 0.7);
    const ComparisonReport report = compare_field(u, 0.7);
    CHECK(report.find("integrated_lemma").pass);
    CHECK(report.find("chain").pass);
    CHECK(report.find("weighted_boundary").pass);
  }
  SUBCASE("bad input") {
    const ScalarField u = solved(DomainSpec::disk(1), 0.2);
    CHECK_THROWS_AS(lemma_residuals(u, DistributionProfile(u), 1.0, 2), InvalidInput);
    CHECK_THROWS_AS(lemma_residuals(u, DistributionProfile(u), -1.0), InvalidInput);
  }
}

TEST_CASE("property: comparison inequalities on random domains") {
  testing::Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const DomainSpec spec = testing::random_domain(rng);
    const double beta = std::vector<double>{0.5, 1.0, 2.0}[trial % 3];
    CAPTURE(spec.describe());
    CAPTURE(beta);
    const ScalarField u = solved(spec, testing::moderate_h(spec, 0.05), beta);
    const ComparisonReport report = compare_field(u, beta);
    for (const CheckRecord& c : report.checks) {
      CAPTURE(c.name);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("property: equality detection is sound") {
  // Whenever the deficit is within tolerance, level sets are round and concentric.
  testing::Rng rng(321);
  for (int trial = 0; trial < 4; ++trial) {
    const double beta = testing::uniform(rng, 0.4, 3.0);
    const double h = testing::uniform(rng, 0.03, 0.05);
    const DomainSpec spec = trial % 2 ? DomainSpec::disk(testing::uniform(rng, 0.5, 2.0))
                                      : DomainSpec::perturbed_disk(1, testing::uniform(rng, 0.0, 0.02), 3);
    CAPTURE(spec.describe());
    const auto rows = rigidity_probe({spec}, beta, h);
    const RigidityRow& row = rows.front();
    if (row.deficit <= row.tolerance) {
      const double fit_tol = row.tolerance / row.v_max;
      for (const LevelFit& f : row.fits) CHECK(f.fit.rms_residual <= fit_tol);
      CHECK(center_spread(row.fits) <= fit_tol);
    }
  }
}

TEST_CASE("pipeline residual on the disk shrinks at second order") {
  TriangleMesh mesh = build_mesh(DomainSpec::disk(1), 0.1);
  double previous_error = 0.0, previous_h = 0.0;
  for (int level = 0; level < 3; ++level) {
    if (level) mesh = refine_uniform(mesh);
    auto shared = std::make_shared<const TriangleMesh>(mesh);
    const ScalarField u = solve_torsion(shared, 1.0);
    const RadialReference ref(mesh_area(mesh), 1.0);
    const RearrangementProfile ustar = decreasing_rearrangement(u);
    double error = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double s = ustar.total_measure() * i / 999.0;
      error = std::max(error, std::abs(ustar(s) - ref.vstar(s)));
    }
    if (level) {
      const double order = std::log(previous_error / error) / std::log(previous_h / mesh.h);
      CAPTURE(level);
      CHECK(order >= 1.8);
    }
    previous_error = error;
    previous_h = mesh.h;
  }
}

TEST_CASE("report serialisation") {
  const ScalarField u = solved(DomainSpec::ellipse(1.2, 1), 0.08);
  const ComparisonReport report = compare_field(u, 1.0);
  std::ostringstream js, csv;
  report.write_json(js);
  report.write_csv(csv);
  const auto parsed = nlohmann::json::parse(js.str());
  CHECK(parsed["meta"]["domain"] == "ellipse:1.2,1");
  CHECK(parsed["meta"]["beta"] == 1.0);
  CHECK(parsed["meta"]["h"].get<double>() == u.mesh().h);
  CHECK(parsed["meta"]["area"].get<double>() == mesh_area(u.mesh()));
  REQUIRE(parsed["checks"].size() == report.checks.size());
  for (std::size_t i = 0; i < report.checks.size(); ++i) {
    const auto& c = parsed["checks"][i];
    for (const char* key : {"name", "anchor", "lhs", "rhs", "residual", "tol", "pass"}) CHECK(c.contains(key));
    CHECK(c["pass"].get<bool>() == report.checks[i].pass);
    CHECK(c["residual"].get<double>() == report.checks[i].residual);
    CHECK(!c["anchor"].get<std::string>().empty());
  }
  const std::string text = csv.str();
  CHECK(text.rfind("name,anchor,lhs,rhs,residual,tol,pass\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(report.checks.size() + 1));
  CHECK_THROWS_AS(report.find("nonexistent"), InvalidInput);
}

TEST_CASE("rigidity probe on an ellipse family") {
  std::vector<DomainSpec> family;
  for (double ratio : {1.5, 1.0, 1.25, 1.1}) family.push_back(DomainSpec::ellipse(ratio, 1.0));
  const auto rows = rigidity_probe(family, 1.0, 0.04);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].deficit >= 0.0);
    CHECK(rows[i].area == doctest::Approx(kPi).epsilon(0.01));
    if (i) {
      CHECK(rows[i].asymmetry > rows[i - 1].asymmetry);
      CHECK(rows[i].deficit > rows[i - 1].deficit);
    }
  }
  CHECK(rows[0].asymmetry == 0.0);
  CHECK(rows[0].deficit <= rows[0].tolerance);
  for (const CheckRecord& c : rigidity_checks(rows)) {
    CAPTURE(c.name);
    CHECK(c.pass);
  }
  std::ostringstream csv;
  write_rigidity_csv(csv, rows);
  CHECK(csv.str().rfind("asymmetry,deficit,min_gap,u_m,v_m,u_M,v_M\n", 0) == 0);
  CHECK_THROWS_AS(rigidity_probe({}, 1.0, 0.05), InvalidInput);
  CHECK_THROWS_AS(rigidity_checks({}), InvalidInput);
}

TEST_CASE("rigidity checks flag a broken table") {
  RigidityRow disk, bumpy;
  disk.domain = "disk:1";
  disk.deficit = 0.0;
  disk.tolerance = 1e-3;
  disk.v_min = disk.u_min = 0.5;
  disk.v_max = disk.u_max = 0.75;
  bumpy = disk;
  bumpy.domain = "perturbed_disk:1,0.1,3";
  bumpy.asymmetry = 0.1;
  bumpy.deficit = 0.0;  // not increasing, and no extremum gap
  const auto checks = rigidity_checks({disk, bumpy});
  const auto failed = std::count_if(checks.begin(), checks.end(), [](const CheckRecord& c) { return !c.pass; });
  CHECK(failed == 2);
}
