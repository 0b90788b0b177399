#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <random>

#include "pvi/analysis.hpp"
#include "pvi/io.hpp"
#include "pvi/oracle.hpp"
#include "pvi/timeloop.hpp"

namespace py = pybind11;

namespace {

Eigen::MatrixXd vertex_array(const pvi::SimplicialMesh& mesh) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(mesh.num_vertices()), mesh.dim());
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    for (int k = 0; k < mesh.dim(); ++k) out(static_cast<Eigen::Index>(v), k) = mesh.vertex(v)[k];
  return out;
}

Eigen::MatrixXi cell_array(const pvi::SimplicialMesh& mesh) {
  Eigen::MatrixXi out(static_cast<Eigen::Index>(mesh.num_cells()), mesh.dim() + 1);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int k = 0; k <= mesh.dim(); ++k) out(static_cast<Eigen::Index>(c), k) = mesh.cell(c)[k];
  return out;
}

py::dict series_dict(const std::vector<pvi::StepRecord>& series) {
  const auto n = static_cast<Eigen::Index>(series.size());
  Eigen::VectorXd t(n), total_B(n), total_N(n), residual(n), dn_sum(n);
  Eigen::VectorXi active(n), iters(n), clamps(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const pvi::StepRecord& r = series[static_cast<std::size_t>(k)];
    t(k) = r.t;
    total_B(k) = r.total_B;
    total_N(k) = r.total_N;
    residual(k) = r.residual;
    dn_sum(k) = r.dn_sum;
    active(k) = r.active_nodes;
    iters(k) = r.newton_iters;
    clamps(k) = r.clamp_count;
  }
  py::dict d;
  d["t"] = t;
  d["total_B"] = total_B;
  d["total_N"] = total_N;
  d["active_nodes"] = active;
  d["newton_iters"] = iters;
  d["residual"] = residual;
  d["clamp_count"] = clamps;
  d["dn_sum"] = dn_sum;
  return d;
}

void set_mode(pvi::SolverOptions& o, const std::string& mode) {
  if (mode == "lagged")
    o.mode = pvi::CouplingMode::TimeLagged;
  else if (mode == "implicit")
    o.mode = pvi::CouplingMode::FullyImplicit;
  else
    throw pvi::ConfigError("mode must be 'lagged' or 'implicit', got '" + mode + "'");
}

std::string get_mode(const pvi::SolverOptions& o) {
  return o.mode == pvi::CouplingMode::TimeLagged ? "lagged" : "implicit";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Biofilm growth with a density constraint: P1 finite elements, backward Euler "
            "and semismooth Newton";

  py::register_exception<pvi::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<pvi::ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<pvi::MeshError>(m, "MeshError", PyExc_ValueError);
  py::register_exception<pvi::SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<pvi::RunFailure>(m, "RunFailure", PyExc_RuntimeError);

  py::class_<pvi::SimplicialMesh>(m, "Mesh")
      .def_static("interval", &pvi::generate_interval, py::arg("a"), py::arg("b"),
                  py::arg("cells"))
      .def_static(
          "rectangle",
          [](std::array<double, 2> xr, std::array<double, 2> yr, int m) {
            return pvi::generate_rectangle(xr, yr, m);
          },
          py::arg("x_range"), py::arg("y_range"), py::arg("m"))
      .def_static(
          "load", [](const std::filesystem::path& p) { return pvi::import_mesh(p); },
          py::arg("path"))
      .def_static("parse", &pvi::parse_mesh_text, py::arg("text"))
      .def_static(
          "from_source", [](const std::string& s) { return pvi::MeshSource::parse(s).build(); },
          py::arg("source"), "Build from 'interval a b n', 'rectangle x0 x1 y0 y1 m' or 'file PATH'.")
      .def_property_readonly("dim", &pvi::SimplicialMesh::dim)
      .def_property_readonly("num_vertices", &pvi::SimplicialMesh::num_vertices)
      .def_property_readonly("num_cells", &pvi::SimplicialMesh::num_cells)
      .def_property_readonly("h", &pvi::SimplicialMesh::h)
      .def_property_readonly("measure", &pvi::SimplicialMesh::measure)
      .def_property_readonly("vertices", &vertex_array)
      .def_property_readonly("cells", &cell_array)
      .def_property_readonly("vertex_tags",
                             [](const pvi::SimplicialMesh& mesh) {
                               auto t = mesh.vertex_tags();
                               return std::vector<int>(t.begin(), t.end());
                             })
      .def_property_readonly("boundary_vertices",
                             [](const pvi::SimplicialMesh& mesh) {
                               auto b = mesh.boundary_vertices();
                               return std::vector<int>(b.begin(), b.end());
                             })
      .def("refine", [](const pvi::SimplicialMesh& mesh) { return pvi::refine_uniform(mesh).mesh; })
      .def("to_text", &pvi::format_mesh_text)
      .def("__repr__", [](const pvi::SimplicialMesh& mesh) {
        return "<Mesh dim=" + std::to_string(mesh.dim()) +
               " vertices=" + std::to_string(mesh.num_vertices()) +
               " cells=" + std::to_string(mesh.num_cells()) + ">";
      });

  py::class_<pvi::Experiment>(m, "Experiment")
      .def(py::init(&pvi::builtin_experiment), py::arg("name"))
      .def_property_readonly("name", [](const pvi::Experiment& e) { return e.model.name; })
      .def_readonly("description", &pvi::Experiment::description)
      .def_property(
          "mesh", [](const pvi::Experiment& e) { return e.run.mesh.describe(); },
          [](pvi::Experiment& e, const std::string& s) { e.run.mesh = pvi::MeshSource::parse(s); })
      .def_property(
          "dt", [](const pvi::Experiment& e) { return e.run.dt; },
          [](pvi::Experiment& e, double v) { e.run.dt = v; })
      .def_property(
          "final_time", [](const pvi::Experiment& e) { return e.run.final_time; },
          [](pvi::Experiment& e, double v) { e.run.final_time = v; })
      .def_property(
          "sample_times", [](const pvi::Experiment& e) { return e.run.sample_times; },
          [](pvi::Experiment& e, std::vector<double> v) { e.run.sample_times = std::move(v); })
      .def_property(
          "tol", [](const pvi::Experiment& e) { return e.run.solver.tol; },
          [](pvi::Experiment& e, double v) { e.run.solver.tol = v; })
      .def_property(
          "max_iter", [](const pvi::Experiment& e) { return e.run.solver.max_iter; },
          [](pvi::Experiment& e, int v) { e.run.solver.max_iter = v; })
      .def_property(
          "mode", [](const pvi::Experiment& e) { return get_mode(e.run.solver); },
          [](pvi::Experiment& e, const std::string& v) { set_mode(e.run.solver, v); })
      .def_property(
          "lump_mass", [](const pvi::Experiment& e) { return e.run.lump_mass; },
          [](pvi::Experiment& e, bool v) { e.run.lump_mass = v; })
      .def_property_readonly("upper_bound",
                             [](const pvi::Experiment& e) { return e.model.bounds.upper; })
      .def_property_readonly("lower_bound",
                             [](const pvi::Experiment& e) { return e.model.bounds.lower; })
      .def_property_readonly("has_study", [](const pvi::Experiment& e) { return e.study.has_value(); })
      .def("build_mesh", [](const pvi::Experiment& e) { return e.run.mesh.build(); });

  py::class_<pvi::Capture>(m, "Capture")
      .def_readonly("step", &pvi::Capture::step)
      .def_readonly("t", &pvi::Capture::t)
      .def_readonly("B", &pvi::Capture::B)
      .def_readonly("Lambda", &pvi::Capture::Lambda)
      .def_readonly("N", &pvi::Capture::N);

  py::class_<pvi::Trajectory>(m, "Trajectory")
      .def_property_readonly("series",
                             [](const pvi::Trajectory& t) { return series_dict(t.series); })
      .def_readonly("captures", &pvi::Trajectory::captures)
      .def_readonly("warnings", &pvi::Trajectory::warnings)
      .def_property_readonly("B", [](const pvi::Trajectory& t) { return t.final_state.B; })
      .def_property_readonly("Lambda",
                             [](const pvi::Trajectory& t) { return t.final_state.Lambda; })
      .def_property_readonly("N", [](const pvi::Trajectory& t) { return t.final_state.N; })
      .def_property_readonly("t", [](const pvi::Trajectory& t) { return t.final_state.t; })
      .def(
          "at",
          [](const pvi::Trajectory& t, double time) -> std::optional<pvi::Capture> {
            const pvi::Capture* c = t.at(time);
            return c ? std::optional<pvi::Capture>(*c) : std::nullopt;
          },
          py::arg("t"))
      .def("to_csv", &pvi::format_series_csv);

  m.def("experiment_names", &pvi::experiment_names);

  m.def(
      "run",
      [](const pvi::Experiment& e, std::optional<pvi::SimplicialMesh> mesh) {
        const pvi::SimplicialMesh built = mesh ? std::move(*mesh) : e.run.mesh.build();
        py::gil_scoped_release release;
        return pvi::run(e.model, built, e.run);
      },
      py::arg("experiment"), py::arg("mesh") = py::none(),
      "Run an experiment; the mesh defaults to the experiment's own.");

  m.def(
      "write_vtk",
      [](const std::filesystem::path& path, const pvi::SimplicialMesh& mesh,
         const pvi::Capture& c) { pvi::write_vtk(path, mesh, c); },
      py::arg("path"), py::arg("mesh"), py::arg("capture"));

  m.def(
      "total_biomass",
      [](const pvi::SimplicialMesh& mesh, const Eigen::VectorXd& B) {
        return pvi::total_biomass(mesh, B);
      },
      py::arg("mesh"), py::arg("B"));

  m.def(
      "convergence",
      [](const std::string& name, int levels) {
        pvi::ConvergenceTable table;
        {
          py::gil_scoped_release release;
          table = pvi::appendix_rate_check(name, levels);
        }
        py::list rows;
        for (const pvi::ConvergenceRow& r : table.rows) {
          py::dict d;
          d["h"] = r.h;
          d["dt"] = r.dt;
          d["err1"] = r.err1;
          d["err2"] = r.err2;
          d["order1"] = r.order1;
          d["order2"] = r.order2;
          rows.append(d);
        }
        return rows;
      },
      py::arg("experiment"), py::arg("levels") = -1,
      "Convergence table of a built-in experiment against its fine surrogate.");

  m.def("observed_order", &pvi::observed_order, py::arg("e_prev"), py::arg("e_cur"),
        py::arg("h_prev"), py::arg("h_cur"));

  m.def(
      "oracle_check",
      [](int instances, unsigned seed, bool inject_fault) {
        std::mt19937_64 rng(seed);
        int agree = 0;
        for (int k = 0; k < instances; ++k) {
          const auto in = pvi::oracle::random_instance(rng);
          if (pvi::oracle::compare_with_newton(in, inject_fault).agree) ++agree;
        }
        return agree;
      },
      py::arg("instances") = 20, py::arg("seed") = 1u, py::arg("inject_fault") = false,
      "Number of random 1D steps on which Newton matches active-set enumeration.");

  m.def(
      "evans_projection", &pvi::evans_projection, py::arg("psi"), py::arg("lower"),
      py::arg("upper"));
}
