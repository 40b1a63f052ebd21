#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace robinlab {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
inline double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

enum class DomainKind { disk, ellipse, rectangle, polygon, perturbed_disk };

/// Parametric description of a bounded planar Lipschitz domain.
///
/// Disks, ellipses and perturbed disks are centred at the origin and their
/// boundaries are parametrised by an angle in [0, 2pi). Rectangles are centred
/// at the origin as well. Polygons keep their vertex coordinates as given.
class DomainSpec {
 public:
  static DomainSpec disk(double radius);
  static DomainSpec ellipse(double semi_axis_x, double semi_axis_y);
  static DomainSpec rectangle(double width, double height);
  /// Vertices must be counter-clockwise and describe a simple polygon.
  static DomainSpec polygon(std::vector<Point> vertices);
  /// Boundary r(theta) = radius + amplitude * cos(mode * theta).
  static DomainSpec perturbed_disk(double radius, double amplitude, int mode);

  DomainKind kind() const { return kind_; }
  bool is_curved() const;

  double radius() const { return p0_; }
  double semi_axis_x() const { return p0_; }
  double semi_axis_y() const { return p1_; }
  double width() const { return p0_; }
  double height() const { return p1_; }
  double amplitude() const { return p1_; }
  int mode() const { return mode_; }
  /// Corners of rectangles and polygons (counter-clockwise). Empty for curved kinds.
  const std::vector<Point>& corners() const { return corners_; }

  /// Analytic area of the continuous domain.
  double area() const;
  /// Homothetic copy scaled by `factor` about the origin.
  DomainSpec scaled(double factor) const;
  /// Copy rescaled so that the analytic area equals `target_area`.
  DomainSpec with_area(double target_area) const;

  /// Point on a curved boundary at parameter theta.
  Point curve_point(double theta) const;
  /// Polar radius of star-shaped curved boundaries (disk, ellipse, perturbed disk).
  double polar_radius(double theta) const;
  bool contains(Point p) const;

  /// Compact textual form, e.g. "disk:1" or "perturbed_disk:1,0.2,3".
  std::string describe() const;

 private:
  DomainSpec() = default;

  DomainKind kind_ = DomainKind::disk;
  double p0_ = 0.0;
  double p1_ = 0.0;
  int mode_ = 0;
  std::vector<Point> corners_;
};

struct BoundaryEdge {
  std::array<std::size_t, 2> vertices;
  Point normal;
};

/// Conforming triangulation with counter-clockwise triangles and oriented boundary edges.
///
/// Boundary edges follow the counter-clockwise order of their adjacent triangle,
/// so the domain lies to their left and `normal` points outward.
struct TriangleMesh {
  std::vector<Point> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double h = 0.0;

  /// Domain the mesh was built from; drives boundary re-projection on refinement.
  std::optional<DomainSpec> domain;
  /// Curve parameter of each vertex on a curved boundary (NaN elsewhere). Empty when unknown.
  std::vector<double> boundary_parameter;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  double triangle_area(std::size_t t) const;
  /// Vertex flags, true on boundary vertices.
  std::vector<bool> boundary_vertex_mask() const;
};

/// Triangulate `spec` with maximum edge length at most `h_target`.
TriangleMesh build_mesh(const DomainSpec& spec, double h_target);

double mesh_area(const TriangleMesh& mesh);
double mesh_perimeter(const TriangleMesh& mesh);
/// Shoelace area enclosed by the boundary loops.
double boundary_shoelace_area(const TriangleMesh& mesh);
double max_edge_length(const TriangleMesh& mesh);
/// Smallest interior angle over all triangles, in degrees.
double min_angle_degrees(const TriangleMesh& mesh);

/// Split every triangle into four; boundary midpoints on curved domains are projected
/// back onto the boundary curve.
TriangleMesh refine_uniform(const TriangleMesh& mesh);

/// Rigid translation; the result no longer carries a domain for re-projection.
TriangleMesh translated(const TriangleMesh& mesh, Point offset);

/// Throws InvalidInput naming the first violated mesh invariant.
void validate_mesh(const TriangleMesh& mesh);

/// Boundary edges grouped into closed loops (each loop lists vertex indices in order).
std::vector<std::vector<std::size_t>> boundary_loops(const TriangleMesh& mesh);

/// |Omega symmetric-difference B| / |Omega| for the equal-area disk B centred at the
/// centroid of the domain, computed from the domain description.
double fraenkel_asymmetry(const DomainSpec& spec);

}  // namespace robinlab
