#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "robinlab/errors.hpp"
#include "robinlab/geometry.hpp"

namespace robinlab {
namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t directed_key(std::size_t a, std::size_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

std::uint64_t undirected_key(std::size_t a, std::size_t b) {
  return a < b ? directed_key(a, b) : directed_key(b, a);
}

[[noreturn]] void fail(const std::string& what) { throw InvalidInput("invalid mesh: " + what); }

Point outward_normal(Point a, Point b) {
  const Point d = b - a;
  const double len = norm(d);
  return {d.y / len, -d.x / len};
}

}  // namespace

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& v = triangles[t];
  return 0.5 * orient(vertices[v[0]], vertices[v[1]], vertices[v[2]]);
}

std::vector<bool> TriangleMesh::boundary_vertex_mask() const {
  std::vector<bool> mask(vertices.size(), false);
  for (const BoundaryEdge& e : boundary_edges) {
    mask[e.vertices[0]] = true;
    mask[e.vertices[1]] = true;
  }
  return mask;
}

double mesh_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) area += mesh.triangle_area(t);
  return area;
}

double mesh_perimeter(const TriangleMesh& mesh) {
  double length = 0.0;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    length += distance(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
  }
  return length;
}

double boundary_shoelace_area(const TriangleMesh& mesh) {
  double twice = 0.0;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    twice += cross(mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
  }
  return 0.5 * twice;
}

double max_edge_length(const TriangleMesh& mesh) {
  double h = 0.0;
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      h = std::max(h, distance(mesh.vertices[t[i]], mesh.vertices[t[(i + 1) % 3]]));
    }
  }
  return h;
}

double min_angle_degrees(const TriangleMesh& mesh) {
  double smallest = 180.0;
  for (const auto& t : mesh.triangles) {
    for (int i = 0; i < 3; ++i) {
      const Point p = mesh.vertices[t[i]];
      const Point u = mesh.vertices[t[(i + 1) % 3]] - p;
      const Point w = mesh.vertices[t[(i + 2) % 3]] - p;
      smallest = std::min(smallest, std::atan2(std::abs(cross(u, w)), dot(u, w)) * 180.0 / kPi);
    }
  }
  return smallest;
}

TriangleMesh refine_uniform(const TriangleMesh& mesh) {
  TriangleMesh out;
  out.domain = mesh.domain;
  out.vertices = mesh.vertices;
  const bool project = mesh.domain && mesh.domain->is_curved() &&
                       mesh.boundary_parameter.size() == mesh.vertices.size();
  if (project) out.boundary_parameter = mesh.boundary_parameter;

  std::unordered_map<std::uint64_t, bool> on_boundary;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    on_boundary[undirected_key(e.vertices[0], e.vertices[1])] = true;
  }

  std::unordered_map<std::uint64_t, std::size_t> midpoint;
  auto mid = [&](std::size_t a, std::size_t b) {
    const std::uint64_t key = undirected_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    Point p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    double param = std::numeric_limits<double>::quiet_NaN();
    if (project && on_boundary.count(key)) {
      const double ta = mesh.boundary_parameter[a];
      const double tb = mesh.boundary_parameter[b];
      double d = std::remainder(tb - ta, 2.0 * kPi);
      param = ta + 0.5 * d;
      if (param < 0.0) param += 2.0 * kPi;
      if (param >= 2.0 * kPi) param -= 2.0 * kPi;
      p = mesh.domain->curve_point(param);
    }
    const std::size_t id = out.vertices.size();
    out.vertices.push_back(p);
    if (project) out.boundary_parameter.push_back(param);
    midpoint.emplace(key, id);
    return id;
  };

  out.triangles.reserve(4 * mesh.num_triangles());
  for (const auto& t : mesh.triangles) {
    const std::size_t ab = mid(t[0], t[1]);
    const std::size_t bc = mid(t[1], t[2]);
    const std::size_t ca = mid(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  out.boundary_edges.reserve(2 * mesh.boundary_edges.size());
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const std::size_t a = e.vertices[0];
    const std::size_t b = e.vertices[1];
    const std::size_t m = mid(a, b);
    out.boundary_edges.push_back({{a, m}, outward_normal(out.vertices[a], out.vertices[m])});
    out.boundary_edges.push_back({{m, b}, outward_normal(out.vertices[m], out.vertices[b])});
  }
  out.h = max_edge_length(out);
  validate_mesh(out);
  return out;
}

TriangleMesh translated(const TriangleMesh& mesh, Point offset) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  for (Point& p : out.vertices) p = p + offset;
  out.triangles = mesh.triangles;
  out.boundary_edges = mesh.boundary_edges;
  out.h = mesh.h;
  return out;
}

void validate_mesh(const TriangleMesh& mesh) {
  const std::size_t nv = mesh.num_vertices();
  if (nv < 3 || mesh.triangles.empty()) fail("empty mesh");
  std::unordered_map<std::uint64_t, int> directed;
  directed.reserve(3 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t];
    for (std::size_t k : v) {
      if (k >= nv) fail("triangle index out of range");
    }
    if (!(mesh.triangle_area(t) > 0.0)) {
      std::ostringstream msg;
      msg << "triangle " << t << " has non-positive signed area";
      fail(msg.str());
    }
    for (int i = 0; i < 3; ++i) {
      if (++directed[directed_key(v[i], v[(i + 1) % 3])] > 1) fail("edge used twice with the same orientation");
    }
  }
  // Edges without a reversed twin are exactly the boundary edges.
  std::size_t open_edges = 0;
  for (const auto& [key, count] : directed) {
    const std::size_t a = key >> 32;
    const std::size_t b = key & 0xffffffffu;
    if (!directed.count(directed_key(b, a))) ++open_edges;
  }
  if (open_edges != mesh.boundary_edges.size()) fail("boundary edge list does not match the open edges");

  std::vector<int> out_degree(nv, 0);
  std::vector<int> in_degree(nv, 0);
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const std::size_t a = e.vertices[0];
    const std::size_t b = e.vertices[1];
    if (a >= nv || b >= nv) fail("boundary edge index out of range");
    if (!directed.count(directed_key(a, b)) || directed.count(directed_key(b, a))) {
      fail("boundary edge is not a single-triangle edge in counter-clockwise order");
    }
    if (std::abs(norm(e.normal) - 1.0) > 1e-9) fail("boundary normal is not unit length");
    ++out_degree[a];
    ++in_degree[b];
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (out_degree[v] != in_degree[v] || out_degree[v] > 1) fail("boundary edges do not form closed loops");
  }

  // Outward normals: compare against the centroid of the adjacent triangle.
  std::unordered_map<std::uint64_t, std::size_t> owner;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& v = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) owner[directed_key(v[i], v[(i + 1) % 3])] = t;
  }
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const auto& v = mesh.triangles[owner.at(directed_key(e.vertices[0], e.vertices[1]))];
    const Point centroid = (1.0 / 3.0) * (mesh.vertices[v[0]] + mesh.vertices[v[1]] + mesh.vertices[v[2]]);
    const Point midpoint = 0.5 * (mesh.vertices[e.vertices[0]] + mesh.vertices[e.vertices[1]]);
    if (!(dot(e.normal, midpoint - centroid) > 0.0)) fail("boundary normal does not point outward");
  }
}

std::vector<std::vector<std::size_t>> boundary_loops(const TriangleMesh& mesh) {
  std::unordered_map<std::size_t, std::size_t> next;
  for (const BoundaryEdge& e : mesh.boundary_edges) next[e.vertices[0]] = e.vertices[1];
  std::vector<std::vector<std::size_t>> loops;
  std::unordered_map<std::size_t, bool> seen;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    const std::size_t start = e.vertices[0];
    if (seen[start]) continue;
    std::vector<std::size_t> loop;
    std::size_t v = start;
    do {
      seen[v] = true;
      loop.push_back(v);
      v = next.at(v);
    } while (v != start && loop.size() <= mesh.boundary_edges.size());
    loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace robinlab
