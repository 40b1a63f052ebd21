#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <memory>
#include <sstream>

#include "robinlab/comparison.hpp"
#include "robinlab/errors.hpp"
#include "robinlab/experiment.hpp"
#include "robinlab/fem.hpp"
#include "robinlab/geometry.hpp"
#include "robinlab/rearrange.hpp"

namespace py = pybind11;
using namespace robinlab;

namespace {

// Python-side handle on an immutable mesh, shared with the fields solved on it.
struct Mesh {
  std::shared_ptr<const TriangleMesh> ptr;
};

py::dict check_to_dict(const CheckRecord& c) {
  py::dict d;
  d["name"] = c.name;
  d["anchor"] = c.anchor;
  d["lhs"] = c.lhs;
  d["rhs"] = c.rhs;
  d["residual"] = c.residual;
  d["tol"] = c.tol;
  d["pass"] = c.pass;
  return d;
}

py::array_t<double> vertex_array(const TriangleMesh& m) {
  py::array_t<double> out({m.num_vertices(), std::size_t{2}});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    view(i, 0) = m.vertices[i].x;
    view(i, 1) = m.vertices[i].y;
  }
  return out;
}

py::array_t<std::int64_t> triangle_array(const TriangleMesh& m) {
  py::array_t<std::int64_t> out({m.num_triangles(), std::size_t{3}});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) view(t, k) = static_cast<std::int64_t>(m.triangles[t][k]);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robin torsion solver, rearrangements and comparison checks";

  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
  py::register_exception<DiscretizationFailure>(m, "DiscretizationFailure", PyExc_RuntimeError);

  py::class_<DomainSpec>(m, "Domain")
      .def_static("disk", &DomainSpec::disk, py::arg("radius"))
      .def_static("ellipse", &DomainSpec::ellipse, py::arg("a"), py::arg("b"))
      .def_static("rectangle", &DomainSpec::rectangle, py::arg("width"), py::arg("height"))
      .def_static(
          "polygon",
          [](const std::vector<std::pair<double, double>>& corners) {
            std::vector<Point> points;
            for (const auto& [x, y] : corners) points.push_back({x, y});
            return DomainSpec::polygon(std::move(points));
          },
          py::arg("corners"))
      .def_static("perturbed_disk", &DomainSpec::perturbed_disk, py::arg("radius"), py::arg("amplitude"),
                  py::arg("mode"))
      .def_property_readonly("area", &DomainSpec::area)
      .def("with_area", &DomainSpec::with_area, py::arg("area"))
      .def("asymmetry", [](const DomainSpec& d) { return fraenkel_asymmetry(d); })
      .def("__str__", &DomainSpec::describe)
      .def("__repr__", [](const DomainSpec& d) { return "Domain('" + d.describe() + "')"; });

  m.def("parse_domain", &parse_domain, py::arg("text"));

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("vertices", [](const Mesh& self) { return vertex_array(*self.ptr); })
      .def_property_readonly("triangles", [](const Mesh& self) { return triangle_array(*self.ptr); })
      .def_property_readonly("h", [](const Mesh& self) { return self.ptr->h; })
      .def_property_readonly("area", [](const Mesh& self) { return mesh_area(*self.ptr); })
      .def_property_readonly("perimeter", [](const Mesh& self) { return mesh_perimeter(*self.ptr); })
      .def_property_readonly("min_angle", [](const Mesh& self) { return min_angle_degrees(*self.ptr); })
      .def("refine", [](const Mesh& self) { return Mesh{std::make_shared<const TriangleMesh>(refine_uniform(*self.ptr))}; })
      .def("__len__", [](const Mesh& self) { return self.ptr->num_vertices(); });

  m.def(
      "build_mesh",
      [](const DomainSpec& spec, double h) { return Mesh{std::make_shared<const TriangleMesh>(build_mesh(spec, h))}; },
      py::arg("domain"), py::arg("h"));

  py::class_<ScalarField>(m, "Field")
      .def_property_readonly("values",
                             [](const ScalarField& f) {
                               const auto v = f.values();
                               py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
                               std::copy(v.begin(), v.end(), out.mutable_data());
                               return out;
                             })
      .def_property_readonly("mesh", [](const ScalarField& f) { return Mesh{f.mesh_ptr()}; })
      .def_property_readonly("min", [](const ScalarField& f) { return field_extrema(f).min; })
      .def_property_readonly("max", [](const ScalarField& f) { return field_extrema(f).max; })
      .def("lp_norm", [](const ScalarField& f, int p) { return lp_norm(f, p); }, py::arg("p"))
      .def("torsional_rigidity", &torsional_rigidity)
      .def("boundary_integral", &boundary_integral)
      .def("rayleigh_quotient", &rayleigh_quotient, py::arg("beta"))
      .def("__len__", &ScalarField::size);

  m.def(
      "solve_torsion",
      [](const Mesh& mesh, double beta, double tol) {
        SolveOptions options;
        options.relative_tolerance = tol;
        py::gil_scoped_release release;
        return solve_torsion(mesh.ptr, beta, options);
      },
      py::arg("mesh"), py::arg("beta"), py::arg("tol") = 1e-12);

  m.def("distribution", &distribution, py::arg("field"), py::arg("t"));

  py::class_<RearrangementProfile>(m, "Rearrangement")
      .def(py::init([](const ScalarField& f) { return decreasing_rearrangement(f); }), py::arg("field"))
      .def("__call__", &RearrangementProfile::operator(), py::arg("s"))
      .def("distribution", [](const RearrangementProfile& r, double t) { return r.distribution()(t); }, py::arg("t"))
      .def("schwartz", [](const RearrangementProfile& r, double x, double y) { return schwartz_value(r, {x, y}); },
           py::arg("x"), py::arg("y"))
      .def_property_readonly("total_measure", &RearrangementProfile::total_measure);

  py::class_<RadialReference>(m, "RadialReference")
      .def(py::init<double, double>(), py::arg("area"), py::arg("beta"))
      .def_property_readonly("radius", &RadialReference::radius)
      .def_property_readonly("v_min", &RadialReference::v_min)
      .def_property_readonly("v_max", &RadialReference::v_max)
      .def("value", &RadialReference::value, py::arg("r"))
      .def("vstar", &RadialReference::vstar, py::arg("s"))
      .def("phi", &RadialReference::phi, py::arg("t"))
      .def("lp_norm", &RadialReference::lp_norm, py::arg("p"));

  m.def(
      "interpolate_radial", [](const Mesh& mesh, const RadialReference& ref) { return interpolate_radial(mesh.ptr, ref); },
      py::arg("mesh"), py::arg("reference"));

  m.def(
      "compare_field",
      [](const ScalarField& field, double beta, double tol_scale) {
        CompareOptions options;
        options.tolerance.scale = tol_scale;
        ComparisonReport report;
        {
          py::gil_scoped_release release;
          report = compare_field(field, beta, options);
        }
        py::list checks;
        for (const CheckRecord& c : report.checks) checks.append(check_to_dict(c));
        py::dict out;
        out["domain"] = report.meta.domain;
        out["beta"] = report.meta.beta;
        out["h"] = report.meta.h;
        out["area"] = report.meta.area;
        out["all_pass"] = report.all_pass();
        out["checks"] = checks;
        return out;
      },
      py::arg("field"), py::arg("beta"), py::arg("tol_scale") = 1.0);

  m.def(
      "rigidity_probe",
      [](const std::vector<DomainSpec>& family, double beta, double h) {
        std::vector<RigidityRow> rows;
        {
          py::gil_scoped_release release;
          rows = rigidity_probe(family, beta, h);
        }
        py::list out;
        for (const RigidityRow& r : rows) {
          py::dict d;
          d["domain"] = r.domain;
          d["asymmetry"] = r.asymmetry;
          d["deficit"] = r.deficit;
          d["min_gap"] = r.min_gap;
          d["u_min"] = r.u_min;
          d["v_min"] = r.v_min;
          d["u_max"] = r.u_max;
          d["v_max"] = r.v_max;
          d["tolerance"] = r.tolerance;
          out.append(d);
        }
        return out;
      },
      py::arg("family"), py::arg("beta"), py::arg("h"));

  m.def(
      "cli_main",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli_main(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
