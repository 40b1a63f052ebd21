#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "clip.hpp"
#include "robinlab/errors.hpp"
#include "robinlab/fem.hpp"

namespace robinlab {
namespace {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

CsrMatrix compress(std::size_t n, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });
  CsrMatrix m;
  m.rows = n;
  m.row_start.assign(n + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row && triplets[j].col == triplets[i].col) {
      sum += triplets[j].value;
      ++j;
    }
    m.columns.push_back(triplets[i].col);
    m.entries.push_back(sum);
    ++m.row_start[triplets[i].row + 1];
    i = j;
  }
  std::partial_sum(m.row_start.begin(), m.row_start.end(), m.row_start.begin());
  return m;
}

void add_stiffness(const TriangleMesh& mesh, std::vector<Triplet>& triplets) {
  for (const auto& t : mesh.triangles) {
    const LocalStiffness k = local_stiffness(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) triplets.push_back({t[i], t[j], k[i][j]});
    }
  }
}

std::array<Point, 3> corners(const TriangleMesh& mesh, std::size_t t) {
  const auto& v = mesh.triangles[t];
  return {mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]]};
}

std::array<double, 3> corner_values(const ScalarField& f, std::size_t t) {
  const auto& v = f.mesh().triangles[t];
  return {f[v[0]], f[v[1]], f[v[2]]};
}

double norm2(std::span<const double> x) { return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0)); }

}  // namespace

ScalarField::ScalarField(std::shared_ptr<const TriangleMesh> mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw InvalidInput("scalar field needs a mesh");
  if (values_.size() != mesh_->num_vertices()) {
    std::ostringstream msg;
    msg << "scalar field has " << values_.size() << " values for " << mesh_->num_vertices() << " vertices";
    throw InvalidInput(msg.str());
  }
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k) sum += entries[k] * x[columns[k]];
    y[r] = sum;
  }
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  const auto first = columns.begin() + static_cast<std::ptrdiff_t>(row_start[r]);
  const auto last = columns.begin() + static_cast<std::ptrdiff_t>(row_start[r + 1]);
  const auto it = std::lower_bound(first, last, c);
  return (it != last && *it == c) ? entries[static_cast<std::size_t>(it - columns.begin())] : 0.0;
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(rows);
  for (std::size_t r = 0; r < rows; ++r) d[r] = at(r, r);
  return d;
}

LocalStiffness local_stiffness(Point a, Point b, Point c) {
  // grad phi_i = perp(opposite edge) / (2 * area).
  const std::array<Point, 3> edge = {c - b, a - c, b - a};
  const double twice_area = orient(a, b, c);
  LocalStiffness k{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) k[i][j] = dot(edge[i], edge[j]) / (2.0 * twice_area);
  }
  return k;
}

LocalEdgeMass local_robin_block(double length, double beta) {
  const double s = beta * length / 6.0;
  return {{{2.0 * s, s}, {s, 2.0 * s}}};
}

CsrMatrix assemble_stiffness(const TriangleMesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh.num_triangles());
  add_stiffness(mesh, triplets);
  return compress(mesh.num_vertices(), std::move(triplets));
}

SparseSystem assemble_robin_system(std::shared_ptr<const TriangleMesh> mesh, double beta) {
  if (!mesh) throw InvalidInput("assemble_robin_system needs a mesh");
  if (!std::isfinite(beta) || beta <= 0.0) throw InvalidInput("Robin parameter beta must be positive");
  std::vector<Triplet> triplets;
  triplets.reserve(9 * mesh->num_triangles() + 4 * mesh->boundary_edges.size());
  add_stiffness(*mesh, triplets);
  for (const BoundaryEdge& e : mesh->boundary_edges) {
    const auto [a, b] = e.vertices;
    const LocalEdgeMass m = local_robin_block(distance(mesh->vertices[a], mesh->vertices[b]), beta);
    triplets.push_back({a, a, m[0][0]});
    triplets.push_back({a, b, m[0][1]});
    triplets.push_back({b, a, m[1][0]});
    triplets.push_back({b, b, m[1][1]});
  }
  SparseSystem sys;
  sys.beta = beta;
  sys.matrix = compress(mesh->num_vertices(), std::move(triplets));
  sys.rhs.assign(mesh->num_vertices(), 0.0);
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    const double share = mesh->triangle_area(t) / 3.0;
    for (std::size_t v : mesh->triangles[t]) sys.rhs[v] += share;
  }
  sys.mesh = std::move(mesh);
  return sys;
}

ScalarField solve(const SparseSystem& system, const SolveOptions& options, SolveStats* stats) {
  if (!system.mesh) throw InvalidInput("solve needs an assembled system");
  if (!(options.relative_tolerance > 0.0 && options.relative_tolerance < 1.0)) {
    throw InvalidInput("solver tolerance must lie in (0, 1)");
  }
  const CsrMatrix& a = system.matrix;
  const std::size_t n = a.rows;
  const std::size_t cap = options.max_iterations > 0 ? options.max_iterations : 20 * n;
  const std::vector<double> diag = a.diagonal();
  const double bnorm = norm2(system.rhs);

  std::vector<double> x(n, 0.0);
  std::vector<double> r = system.rhs;
  std::vector<double> z(n), p(n), ap(n);
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  };
  auto true_residual = [&] {
    a.multiply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = system.rhs[i] - ap[i];
    return norm2(r) / bnorm;
  };
  // Smallest relative residual representable for x stored in double: eps * || |A| |x| || / ||b||.
  auto rounding_floor = [&] {
    double sum = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
      double acc = 0.0;
      for (std::size_t k = a.row_start[row]; k < a.row_start[row + 1]; ++k) {
        acc += std::abs(a.entries[k] * x[a.columns[k]]);
      }
      sum += acc * acc;
    }
    return 4.0 * std::numeric_limits<double>::epsilon() * std::sqrt(sum) / bnorm;
  };

  precondition();
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  double residual = 1.0;
  double attained_floor = 0.0;
  std::size_t it = 0;
  while (it < cap) {
    a.multiply(p, ap);
    const double alpha = rz / std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++it;
    residual = norm2(r) / bnorm;
    if (residual <= options.relative_tolerance) {
      // The recursive residual drifts; confirm against the true one and restart if needed.
      residual = true_residual();
      if (residual <= options.relative_tolerance) break;
      attained_floor = rounding_floor();
      if (residual <= attained_floor) break;
      precondition();
      p = z;
      rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
      continue;
    }
    precondition();
    const double rz_next = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double ratio = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + ratio * p[i];
  }
  if (residual > std::max(options.relative_tolerance, attained_floor)) {
    std::ostringstream msg;
    msg << "conjugate gradients did not converge: relative residual " << residual << " after " << it
        << " iterations";
    throw NonConvergence(msg.str(), residual, it);
  }
  if (stats) *stats = {it, residual, attained_floor};
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0)) {
      std::ostringstream msg;
      msg << "discrete torsion field is not positive at vertex " << i << " (value " << x[i] << ")";
      throw DiscretizationFailure(msg.str());
    }
  }
  return ScalarField(system.mesh, std::move(x));
}

ScalarField solve_torsion(std::shared_ptr<const TriangleMesh> mesh, double beta, const SolveOptions& options) {
  return solve(assemble_robin_system(std::move(mesh), beta), options);
}

double torsional_rigidity(const ScalarField& field) {
  const TriangleMesh& mesh = field.mesh();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto u = corner_values(field, t);
    sum += mesh.triangle_area(t) * (u[0] + u[1] + u[2]) / 3.0;
  }
  return sum;
}

double lp_norm(const ScalarField& field, int p) {
  if (p != 1 && p != 2) throw InvalidInput("lp_norm supports p = 1 and p = 2 only");
  const TriangleMesh& mesh = field.mesh();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto u = corner_values(field, t);
    const double area = mesh.triangle_area(t);
    if (p == 2) {
      sum += area / 6.0 *
             (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[0] * u[1] + u[1] * u[2] + u[2] * u[0]);
    } else {
      const double whole = area * (u[0] + u[1] + u[2]) / 3.0;
      const double positive = detail::clip_above(corners(mesh, t), u, 0.0).integral();
      sum += 2.0 * positive - whole;
    }
  }
  return p == 2 ? std::sqrt(sum) : sum;
}

double boundary_integral(const ScalarField& field) {
  const TriangleMesh& mesh = field.mesh();
  double sum = 0.0;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const auto [a, b] = e.vertices;
    sum += 0.5 * distance(mesh.vertices[a], mesh.vertices[b]) * (field[a] + field[b]);
  }
  return sum;
}

double rayleigh_quotient(const ScalarField& field, double beta) {
  if (!std::isfinite(beta) || beta <= 0.0) throw InvalidInput("Robin parameter beta must be positive");
  const TriangleMesh& mesh = field.mesh();
  double gradient_energy = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t];
    const LocalStiffness k = local_stiffness(mesh.vertices[v[0]], mesh.vertices[v[1]], mesh.vertices[v[2]]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) gradient_energy += field[v[i]] * k[i][j] * field[v[j]];
    }
  }
  double boundary_energy = 0.0;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const auto [a, b] = e.vertices;
    const double len = distance(mesh.vertices[a], mesh.vertices[b]);
    boundary_energy += len / 3.0 * (field[a] * field[a] + field[a] * field[b] + field[b] * field[b]);
  }
  const double denominator = gradient_energy + beta * boundary_energy;
  if (!(denominator > 0.0)) throw InvalidInput("Rayleigh quotient of the zero field is undefined");
  const double l1 = lp_norm(field, 1);
  return l1 * l1 / denominator;
}

Extrema field_extrema(const ScalarField& field) {
  const auto [lo, hi] = std::minmax_element(field.values().begin(), field.values().end());
  return {*lo, *hi};
}

}  // namespace robinlab
