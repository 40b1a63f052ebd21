#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "robinlab/errors.hpp"
#include "robinlab/fem.hpp"
#include "robinlab/mesh_io.hpp"
#include "support.hpp"

using namespace robinlab;
using testing::kPi;

namespace {

Eigen::MatrixXd dense(const CsrMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t k = a.row_start[r]; k < a.row_start[r + 1]; ++k) m(r, a.columns[k]) += a.entries[k];
  }
  return m;
}

// Hat-function gradients from the inverse of the affine map, independent of the library.
Eigen::Matrix3d oracle_stiffness(Point a, Point b, Point c) {
  Eigen::Matrix3d coords;
  coords << 1, a.x, a.y, 1, b.x, b.y, 1, c.x, c.y;
  const Eigen::Matrix3d inv = coords.inverse();  // column i holds the coefficients of phi_i
  const double area = std::abs(orient(a, b, c)) / 2.0;
  Eigen::Matrix3d k;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k(i, j) = area * (inv(1, i) * inv(1, j) + inv(2, i) * inv(2, j));
  }
  return k;
}

}  // namespace

TEST_CASE("local stiffness of the unit right triangle") {
  const LocalStiffness k = local_stiffness({0, 0}, {1, 0}, {0, 1});
  const double expected[3][3] = {{1, -0.5, -0.5}, {-0.5, 0.5, 0}, {-0.5, 0, 0.5}};
  const Eigen::Matrix3d oracle = oracle_stiffness({0, 0}, {1, 0}, {0, 1});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(k[i][j] == doctest::Approx(expected[i][j]).epsilon(1e-15));
      CHECK(k[i][j] == doctest::Approx(oracle(i, j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("property: local stiffness on random triangles") {
  testing::Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Point a{testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2)};
    Point b{testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2)};
    Point c{testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2)};
    if (std::abs(orient(a, b, c)) < 0.1) continue;
    if (orient(a, b, c) < 0) std::swap(b, c);
    const LocalStiffness k = local_stiffness(a, b, c);
    const Eigen::Matrix3d oracle = oracle_stiffness(a, b, c);
    for (int i = 0; i < 3; ++i) {
      double row = 0.0;
      for (int j = 0; j < 3; ++j) {
        CHECK(k[i][j] == doctest::Approx(oracle(i, j)).epsilon(1e-10).scale(1.0));
        row += k[i][j];
      }
      CHECK(std::abs(row) < 1e-12);
    }
  }
}

TEST_CASE("Robin edge block") {
  testing::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double length = testing::uniform(rng, 0.01, 2.0), beta = testing::uniform(rng, 0.1, 5.0);
    const LocalEdgeMass m = local_robin_block(length, beta);
    // Simpson's rule is exact for the quadratic products of the two edge hats.
    const auto hat = [](int i, double s) { return i == 0 ? 1.0 - s : s; };
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double oracle =
            beta * length * testing::simpson([&](double s) { return hat(i, s) * hat(j, s); }, 0.0, 1.0, 2);
        CHECK(m[i][j] == doctest::Approx(oracle).epsilon(1e-14));
        CHECK(m[i][j] == doctest::Approx(beta * length / 6.0 * (i == j ? 2.0 : 1.0)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("stiffness annihilates constants and the Robin system is SPD") {
  testing::Rng rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    const DomainSpec spec = testing::random_domain(rng);
    CAPTURE(spec.describe());
    auto mesh = testing::make_mesh(spec, testing::moderate_h(spec, 0.3));
    const CsrMatrix k = assemble_stiffness(*mesh);
    std::vector<double> ones(mesh->num_vertices(), 1.0), out(mesh->num_vertices());
    k.multiply(ones, out);
    for (double v : out) CHECK(std::abs(v) < 1e-12);

    const double beta = testing::uniform(rng, 0.2, 3.0);
    const SparseSystem sys = assemble_robin_system(mesh, beta);
    const Eigen::MatrixXd a = dense(sys.matrix);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    // The stiffness alone is singular: its smallest eigenvalue is zero up to roundoff.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_k(dense(k));
    CHECK(std::abs(eig_k.eigenvalues().minCoeff()) < 1e-10);
    // Load vector integrates f = 1.
    double load = 0.0;
    for (double v : sys.rhs) load += v;
    CHECK(load == doctest::Approx(mesh_area(*mesh)).epsilon(1e-13));
  }
}

TEST_CASE("beta must be positive") {
  auto mesh = testing::make_mesh(DomainSpec::disk(1), 0.3);
  CHECK_THROWS_AS(assemble_robin_system(mesh, 0.0), InvalidInput);
  CHECK_THROWS_AS(assemble_robin_system(mesh, -1.0), InvalidInput);
  CHECK_THROWS_AS(solve_torsion(mesh, std::nan("")), InvalidInput);
}

TEST_CASE("disk solve matches the closed form") {
  auto mesh = testing::make_mesh(DomainSpec::disk(1), 0.02);
  SolveStats stats;
  const ScalarField u = solve(assemble_robin_system(mesh, 1.0), {}, &stats);
  double error = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    error = std::max(error, std::abs(u[i] - testing::disk_solution(1.0, 1.0, mesh->vertices[i])));
  }
  CHECK(error <= 1e-3);
  CHECK(stats.relative_residual <= std::max(1e-12, stats.rounding_floor));
  const Extrema ex = field_extrema(u);
  CHECK(ex.min == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(ex.max == doctest::Approx(0.75).epsilon(1e-3));
  CHECK(torsional_rigidity(u) == doctest::Approx(5 * kPi / 8).epsilon(1e-3));
}

TEST_CASE("torsional rigidity on the disk converges to the closed form") {
  // T = A^2 / (8 pi) + A^(3/2) / (2 sqrt(pi) beta), evaluated at the analytic area.
  for (double beta : {0.5, 2.0}) {
    const double area = kPi;
    const double exact = area * area / (8 * kPi) + std::pow(area, 1.5) / (2 * std::sqrt(kPi) * beta);
    double previous = 1e9;
    for (double h : {0.1, 0.05, 0.025}) {
      const ScalarField u = solve_torsion(testing::make_mesh(DomainSpec::disk(1), h), beta);
      const double err = std::abs(torsional_rigidity(u) - exact);
      CHECK(err < previous);
      previous = err;
    }
    CHECK(previous < 2e-3 * exact);
  }
}

TEST_CASE("square of area pi has smaller rigidity than the disk") {
  const ScalarField u = solve_torsion(testing::make_mesh(DomainSpec::rectangle(1, 1).with_area(kPi), 0.03), 1.0);
  CHECK(torsional_rigidity(u) < 5 * kPi / 8);
}

TEST_CASE("constant field integrates to c times the area") {
  auto mesh = testing::make_mesh(DomainSpec::ellipse(1.5, 1), 0.1);
  const ScalarField c = interpolate(mesh, [](Point) { return 2.5; });
  CHECK(torsional_rigidity(c) == doctest::Approx(2.5 * mesh_area(*mesh)).epsilon(1e-13));
  const Extrema ex = field_extrema(c);
  CHECK(ex.min == 2.5);
  CHECK(ex.max == 2.5);
}

TEST_CASE("Rayleigh quotient") {
  auto mesh = testing::make_mesh(DomainSpec::disk(1), 0.05);
  const ScalarField u = solve_torsion(mesh, 1.0);
  CHECK(rayleigh_quotient(u, 1.0) == doctest::Approx(torsional_rigidity(u)).epsilon(1e-9));

  // phi = 1: |Omega_h|^2 / (beta P_h), which tends to pi / 2 on the unit disk.
  const ScalarField one = interpolate(mesh, [](Point) { return 1.0; });
  const double area = mesh_area(*mesh), perimeter = mesh_perimeter(*mesh);
  CHECK(rayleigh_quotient(one, 1.0) == doctest::Approx(area * area / perimeter).epsilon(1e-13));
  CHECK(rayleigh_quotient(one, 1.0) == doctest::Approx(kPi / 2).epsilon(2e-3));
  CHECK(rayleigh_quotient(one, 1.0) < 5 * kPi / 8);

  testing::Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const ScalarField phi = testing::random_field(mesh, rng);
    const double c = testing::uniform(rng, -5, 5);
    std::vector<double> scaled(phi.values().begin(), phi.values().end());
    for (double& v : scaled) v *= c;
    CHECK(rayleigh_quotient(ScalarField(mesh, scaled), 1.0) ==
          doctest::Approx(rayleigh_quotient(phi, 1.0)).epsilon(1e-12));
    // The torsion field maximises the quotient.
    CHECK(rayleigh_quotient(phi, 1.0) <= rayleigh_quotient(u, 1.0) * (1 + 1e-12));
  }
  const ScalarField zero = interpolate(mesh, [](Point) { return 0.0; });
  CHECK_THROWS_AS(rayleigh_quotient(zero, 1.0), InvalidInput);
}

TEST_CASE("property: flux identity, boundary minimum and monotonicity in beta") {
  testing::Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const DomainSpec spec = testing::random_domain(rng);
    CAPTURE(spec.describe());
    auto mesh = testing::make_mesh(spec, testing::moderate_h(spec));
    const double area = mesh_area(*mesh);
    const auto boundary = mesh->boundary_vertex_mask();
    std::vector<ScalarField> fields;
    for (double beta : {0.5, 1.0, 2.0}) {
      const ScalarField u = solve_torsion(mesh, beta);
      CHECK(std::abs(beta * boundary_integral(u) - area) <= 1e-9 * area);
      std::size_t argmin = 0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(u[i] > 0.0);
        if (u[i] < u[argmin]) argmin = i;
      }
      CHECK(boundary[argmin]);
      // u_m <= v_m for the disk of the same (discrete) area.
      CHECK(field_extrema(u).min <= std::sqrt(area) / (2 * std::sqrt(kPi) * beta) * (1 + 0.02 * mesh->h));
      fields.push_back(u);
    }
    for (std::size_t i = 0; i < mesh->num_vertices(); ++i) {
      CHECK(fields[0][i] > fields[1][i]);
      CHECK(fields[1][i] > fields[2][i]);
    }
  }
}

TEST_CASE("solver failure modes") {
  auto mesh = testing::make_mesh(DomainSpec::disk(1), 0.1);
  const SparseSystem sys = assemble_robin_system(mesh, 1.0);
  SolveOptions capped;
  capped.max_iterations = 2;
  try {
    solve(sys, capped);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.residual() > 1e-12);
    CHECK(e.iterations() == 2);
  }
  SparseSystem negative = sys;
  for (double& v : negative.rhs) v = -v;
  CHECK_THROWS_AS(solve(negative), DiscretizationFailure);
  SolveOptions bad;
  bad.relative_tolerance = 1.5;
  CHECK_THROWS_AS(solve(sys, bad), InvalidInput);
}

TEST_CASE("field and manifest files round trip") {
  auto mesh = testing::make_mesh(DomainSpec::ellipse(1.2, 0.8), 0.1);
  const ScalarField u = solve_torsion(mesh, 0.7);
  std::stringstream text;
  write_field(text, u);
  const ScalarField back = read_field(text, mesh);
  REQUIRE(back.size() == u.size());
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(back[i] == u[i]);

  const auto dir = std::filesystem::temp_directory_path() / "robinlab_fem_io";
  std::filesystem::create_directories(dir);
  write_field_manifest(dir / "field.manifest", {"mesh.txt", 0.7, 1e-12});
  const FieldManifest m = read_field_manifest(dir / "field.manifest");
  CHECK(m.mesh == "mesh.txt");
  CHECK(m.beta == 0.7);
  CHECK(m.tolerance == 1e-12);
  {
    std::ofstream bad(dir / "bad.manifest");
    bad << "mesh=mesh.txt\nbeta=1\ncolour=blue\n";
  }
  CHECK_THROWS_WITH_AS(read_field_manifest(dir / "bad.manifest"), doctest::Contains("colour"), InvalidInput);
  {
    std::ofstream bad(dir / "short.manifest");
    bad << "mesh=mesh.txt\nbeta=1\n";
  }
  CHECK_THROWS_WITH_AS(read_field_manifest(dir / "short.manifest"), doctest::Contains("tol"), InvalidInput);
  std::filesystem::remove_all(dir);

  std::stringstream wrong("3\n1\n2\n3\n");
  CHECK_THROWS_AS(read_field(wrong, mesh), InvalidInput);
}
