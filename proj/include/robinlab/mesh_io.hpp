#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "robinlab/fem.hpp"
#include "robinlab/geometry.hpp"

namespace robinlab {

// Mesh text format:
//   nv nt nb
//   nv lines "x y"
//   nt lines "i j k"
//   nb lines "i j nx ny"
// Reals use 17 significant digits so a round trip is bit exact.
void write_mesh(std::ostream& out, const TriangleMesh& mesh);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);
/// Parses and validates; h is recomputed as the longest edge.
TriangleMesh read_mesh(std::istream& in);
TriangleMesh read_mesh(const std::filesystem::path& path);

// Field text format: "nv" then one value per line.
void write_field(std::ostream& out, const ScalarField& field);
void write_field(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field(std::istream& in, std::shared_ptr<const TriangleMesh> mesh);
ScalarField read_field(const std::filesystem::path& path, std::shared_ptr<const TriangleMesh> mesh);

/// key=value sidecar tying a field file to its mesh.
struct FieldManifest {
  std::string mesh;
  double beta = 0.0;
  double tolerance = 0.0;
};

void write_field_manifest(const std::filesystem::path& path, const FieldManifest& manifest);
FieldManifest read_field_manifest(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

}  // namespace robinlab
