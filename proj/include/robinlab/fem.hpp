#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "robinlab/geometry.hpp"

namespace robinlab {

/// Piecewise-linear function on a mesh, one value per vertex.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const TriangleMesh> mesh, std::vector<double> values);

  const TriangleMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriangleMesh>& mesh_ptr() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t v) const { return values_[v]; }
  std::size_t size() const { return values_.size(); }

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  std::vector<double> values_;
};

/// Symmetric matrix in compressed sparse row storage.
struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::size_t> row_start;  // size rows + 1
  std::vector<std::size_t> columns;
  std::vector<double> entries;

  void multiply(std::span<const double> x, std::span<double> y) const;
  double at(std::size_t r, std::size_t c) const;
  std::vector<double> diagonal() const;
};

struct SparseSystem {
  std::shared_ptr<const TriangleMesh> mesh;
  CsrMatrix matrix;
  std::vector<double> rhs;
  double beta = 0.0;
};

struct SolveOptions {
  double relative_tolerance = 1e-12;
  /// Zero selects the default cap of 20 * number of unknowns.
  std::size_t max_iterations = 0;
};

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  /// Double-precision floor of the relative residual, when it exceeded the tolerance.
  double rounding_floor = 0.0;
};

using LocalStiffness = std::array<std::array<double, 3>, 3>;
using LocalEdgeMass = std::array<std::array<double, 2>, 2>;

/// Element stiffness of the three hat functions on triangle (a, b, c).
LocalStiffness local_stiffness(Point a, Point b, Point c);
/// Robin boundary block beta * int_e phi_i phi_j over an edge of the given length.
LocalEdgeMass local_robin_block(double length, double beta);

/// Stiffness matrix only (no boundary term); its rows sum to zero.
CsrMatrix assemble_stiffness(const TriangleMesh& mesh);

/// Discrete weak form of -Laplace(u) = 1 with du/dn + beta u = 0; load f = 1.
SparseSystem assemble_robin_system(std::shared_ptr<const TriangleMesh> mesh, double beta);

/// Jacobi-preconditioned conjugate gradients. Converged means the true relative residual
/// is below the tolerance, or below the rounding floor eps * || |A| |x| || / ||b|| when
/// that floor is larger. Throws NonConvergence past the iteration cap and
/// DiscretizationFailure if any vertex value is not strictly positive.
ScalarField solve(const SparseSystem& system, const SolveOptions& options = {},
                  SolveStats* stats = nullptr);

/// Assemble and solve in one step.
ScalarField solve_torsion(std::shared_ptr<const TriangleMesh> mesh, double beta,
                          const SolveOptions& options = {});

/// Integral of the field over the mesh; the torsional rigidity for a solved field.
double torsional_rigidity(const ScalarField& field);

/// (int |phi|)^2 / (int |grad phi|^2 + beta * int_boundary phi^2).
double rayleigh_quotient(const ScalarField& field, double beta);

struct Extrema {
  double min = 0.0;
  double max = 0.0;
};
Extrema field_extrema(const ScalarField& field);

/// Integral of the trace of the field along the boundary.
double boundary_integral(const ScalarField& field);

/// ||field||_p over the mesh by exact integration of the interpolant, p in {1, 2}.
double lp_norm(const ScalarField& field, int p);

/// Field built by sampling a function at the vertices.
template <class F>
ScalarField interpolate(std::shared_ptr<const TriangleMesh> mesh, F&& f) {
  std::vector<double> values;
  values.reserve(mesh->num_vertices());
  for (const Point& p : mesh->vertices) values.push_back(f(p));
  return ScalarField(std::move(mesh), std::move(values));
}

}  // namespace robinlab
