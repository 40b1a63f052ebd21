#include "robinlab/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "robinlab/errors.hpp"
#include "text.hpp"

namespace robinlab {
namespace {

constexpr int kDigits = 17;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  return in;
}

template <class T>
T take(std::istream& in, const char* what) {
  T value{};
  if (!(in >> value)) throw InvalidInput(std::string("malformed file: expected ") + what);
  return value;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidInput("manifest key '" + key + "': malformed number '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_real(double value) { return detail::shortest(value); }

void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
  out << std::setprecision(kDigits);
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.boundary_edges.size() << '\n';
  for (const Point& p : mesh.vertices) out << p.x << ' ' << p.y << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    out << e.vertices[0] << ' ' << e.vertices[1] << ' ' << e.normal.x << ' ' << e.normal.y << '\n';
  }
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  auto out = open_out(path);
  write_mesh(out, mesh);
}

TriangleMesh read_mesh(std::istream& in) {
  TriangleMesh mesh;
  const auto nv = take<std::size_t>(in, "vertex count");
  const auto nt = take<std::size_t>(in, "triangle count");
  const auto nb = take<std::size_t>(in, "boundary edge count");
  mesh.vertices.resize(nv);
  for (Point& p : mesh.vertices) {
    p.x = take<double>(in, "vertex x");
    p.y = take<double>(in, "vertex y");
  }
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles) {
    for (auto& k : t) k = take<std::size_t>(in, "triangle index");
  }
  mesh.boundary_edges.resize(nb);
  for (BoundaryEdge& e : mesh.boundary_edges) {
    e.vertices[0] = take<std::size_t>(in, "boundary index");
    e.vertices[1] = take<std::size_t>(in, "boundary index");
    e.normal.x = take<double>(in, "normal x");
    e.normal.y = take<double>(in, "normal y");
  }
  validate_mesh(mesh);
  mesh.h = max_edge_length(mesh);
  return mesh;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mesh(in);
}

void write_field(std::ostream& out, const ScalarField& field) {
  out << std::setprecision(kDigits) << field.size() << '\n';
  for (double v : field.values()) out << v << '\n';
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  auto out = open_out(path);
  write_field(out, field);
}

ScalarField read_field(std::istream& in, std::shared_ptr<const TriangleMesh> mesh) {
  const auto n = take<std::size_t>(in, "value count");
  std::vector<double> values(n);
  for (double& v : values) v = take<double>(in, "field value");
  return ScalarField(std::move(mesh), std::move(values));
}

ScalarField read_field(const std::filesystem::path& path, std::shared_ptr<const TriangleMesh> mesh) {
  auto in = open_in(path);
  return read_field(in, std::move(mesh));
}

void write_field_manifest(const std::filesystem::path& path, const FieldManifest& manifest) {
  auto out = open_out(path);
  out << "mesh=" << manifest.mesh << '\n';
  out << "beta=" << format_real(manifest.beta) << '\n';
  out << "tol=" << format_real(manifest.tolerance) << '\n';
}

FieldManifest read_field_manifest(const std::filesystem::path& path) {
  auto in = open_in(path);
  FieldManifest manifest;
  bool has_mesh = false, has_beta = false, has_tol = false;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("manifest line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "mesh") {
      manifest.mesh = value;
      has_mesh = true;
    } else if (key == "beta") {
      manifest.beta = parse_real(key, value);
      has_beta = true;
    } else if (key == "tol") {
      manifest.tolerance = parse_real(key, value);
      has_tol = true;
    } else {
      throw InvalidInput("unknown manifest key '" + key + "'");
    }
  }
  if (!has_mesh) throw InvalidInput("manifest is missing key 'mesh'");
  if (!has_beta) throw InvalidInput("manifest is missing key 'beta'");
  if (!has_tol) throw InvalidInput("manifest is missing key 'tol'");
  return manifest;
}

}  // namespace robinlab
