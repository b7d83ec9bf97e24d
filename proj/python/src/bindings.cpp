#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shearfront/harness.hpp"
#include "shearfront/limit_problem.hpp"
#include "shearfront/serialize.hpp"
#include "shearfront/spectral.hpp"

namespace py = pybind11;
using namespace shearfront;

namespace {

py::array_t<double> to_numpy(const Field& f) {
  py::array_t<double> a(static_cast<py::ssize_t>(f.size()));
  std::copy(f.begin(), f.end(), a.mutable_data());
  return a;
}

// Fields on the cylinder come back as (n_x, torus size) arrays.
py::array_t<double> cylinder_array(const CylinderGrid& g, const Field& f) {
  py::array_t<double> a({static_cast<py::ssize_t>(g.n_x()), static_cast<py::ssize_t>(g.torus().size())});
  std::copy(f.begin(), f.end(), a.mutable_data());
  return a;
}

Field from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return Field(a.data(), a.data() + a.size());
}

// JSON crosses the boundary as text; the package decodes it.
std::string dump(const Json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "front speeds in shear flows";
  m.attr("__version__") = SHEARFRONT_VERSION;

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<ConvergenceError> convergence_error(m, "ConvergenceError", PyExc_RuntimeError);
  static py::exception<DomainTooShortError> short_error(m, "DomainTooShortError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const InputError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ConvergenceError& e) {
      py::set_error(convergence_error, e.what());
    } catch (const DomainTooShortError& e) {
      py::set_error(short_error, e.what());
    }
  });

  py::class_<TorusGrid>(m, "TorusGrid")
      .def(py::init<int, int>(), py::arg("dim"), py::arg("points_per_dim"))
      .def_property_readonly("dim", &TorusGrid::dim)
      .def_property_readonly("points_per_dim", &TorusGrid::points_per_dim)
      .def_property_readonly("size", &TorusGrid::size)
      .def("coordinate", &TorusGrid::coordinate)
      .def("__repr__", [](const TorusGrid& g) {
        return "TorusGrid(dim=" + std::to_string(g.dim()) + ", points_per_dim=" + std::to_string(g.points_per_dim()) + ")";
      });

  py::class_<CylinderGrid>(m, "CylinderGrid")
      .def(py::init<TorusGrid, double, double, int>(), py::arg("torus"), py::arg("x_min"), py::arg("x_max"), py::arg("n_x"))
      .def_property_readonly("torus", &CylinderGrid::torus)
      .def_property_readonly("x_min", &CylinderGrid::x_min)
      .def_property_readonly("x_max", &CylinderGrid::x_max)
      .def_property_readonly("n_x", &CylinderGrid::n_x)
      .def_property_readonly("dx", &CylinderGrid::dx)
      .def_property_readonly("zero_index", &CylinderGrid::zero_index)
      .def("x", [](const CylinderGrid& g) {
        Field x(g.n_x());
        for (int i = 0; i < g.n_x(); ++i) x[i] = g.x(i);
        return to_numpy(x);
      });

  py::class_<FlowProfile>(m, "FlowProfile")
      .def_property_readonly("grid", &FlowProfile::grid)
      .def_property_readonly("alpha", [](const FlowProfile& f) { return to_numpy(f.alpha()); })
      .def_property_readonly("beta", &FlowProfile::beta)
      .def_property_readonly("alpha_max", &FlowProfile::alpha_max)
      .def_property_readonly("alpha_min", &FlowProfile::alpha_min)
      .def("is_zero", &FlowProfile::is_zero);

  m.def("zero_flow", &flows::zero, py::arg("torus"));
  m.def("cosine_flow", &flows::cosine, py::arg("torus"), py::arg("k") = 1, py::arg("amplitude") = 1.0,
        py::arg("offset") = 0.0);
  m.def("two_mode_flow", &flows::two_mode, py::arg("torus"));
  m.def(
      "custom_flow", [](const TorusGrid& g, py::array_t<double, py::array::c_style | py::array::forcecast> a) {
        return normalize_flow(g, from_numpy(a));
      },
      py::arg("torus"), py::arg("samples"));
  m.def("check_nondegeneracy", [](const FlowProfile& f, int r) { return check_nondegeneracy(f, r).nondegenerate; },
        py::arg("flow"), py::arg("order"));

  py::class_<Reaction>(m, "Reaction")
      .def_static("ignition", &Reaction::ignition, py::arg("theta"))
      .def_static("kpp", &Reaction::kpp, py::arg("fprime0") = 1.0, py::arg("form") = "logistic")
      .def_property_readonly("name", &Reaction::name)
      .def_property_readonly("kind", [](const Reaction& r) { return to_string(r.kind()); })
      .def_property_readonly("theta", &Reaction::theta)
      .def_property_readonly("fprime0", &Reaction::fprime0)
      .def("__call__", &Reaction::operator(), py::arg("u"))
      .def("derivative", &Reaction::derivative, py::arg("u"));
  m.def("make_cutoff", &make_cutoff, py::arg("parent"), py::arg("theta_prime"));

  m.def("mu_of_lambda", &mu_of_lambda, py::arg("lam"), py::arg("A"), py::arg("gamma"), py::arg("flow"));
  m.def("decay_rate", &decay_rate, py::arg("A"), py::arg("gamma"), py::arg("flow"));
  m.def("kpp_minimal_speed", &kpp_minimal_speed, py::arg("A"), py::arg("flow"), py::arg("fprime0"));
  m.def("kpp_limit_speed", &kpp_limit_speed, py::arg("flow"), py::arg("fprime0"));
  m.def("small_amplitude_slope", &small_amplitude_slope, py::arg("flow"), py::arg("fprime0"));
  m.def(
      "principal_eigenvalue",
      [](const TorusGrid& g, double t, py::array_t<double, py::array::c_style | py::array::forcecast> V) {
        const auto r = principal_eigpair(g, t, from_numpy(V));
        return py::make_tuple(r.eigenvalue, to_numpy(r.eigenfunction));
      },
      py::arg("torus"), py::arg("t"), py::arg("potential"));

  py::class_<WindowOptions>(m, "WindowOptions")
      .def(py::init<>())
      .def_readwrite("n_x", &WindowOptions::n_x)
      .def_readwrite("safety", &WindowOptions::safety);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("newton_tol", &SolveOptions::newton_tol)
      .def_readwrite("tol_bc", &SolveOptions::tol_bc)
      .def_readwrite("max_newton", &SolveOptions::max_newton);

  py::class_<FrontSolution>(m, "FrontSolution")
      .def_readonly("gamma", &FrontSolution::gamma)
      .def_readonly("amplitude", &FrontSolution::amplitude)
      .def_readonly("grid", &FrontSolution::grid)
      .def_readonly("residual_norm", &FrontSolution::residual_norm)
      .def_readonly("monotonicity_defect", &FrontSolution::monotonicity_defect)
      .def_property_readonly("speed", &FrontSolution::speed)
      .def_property_readonly("U", [](const FrontSolution& s) { return cylinder_array(s.grid, s.U); })
      .def("summary_json", [](const FrontSolution& s) { return dump(solution_summary(s)); })
      .def("identities_json", [](const FrontSolution& s) { return dump(to_json(check_integral_identities(s))); })
      .def("certificate_bound", [](const FrontSolution& s) { return certificate_upper_bound(s).bound; });

  m.def(
      "solve_front",
      [](double A, const FlowProfile& flow, const Reaction& f, const WindowOptions& w, const SolveOptions& o) {
        py::gil_scoped_release release;
        return solve_front(A, flow, f, flow.grid(), w, o);
      },
      py::arg("A"), py::arg("flow"), py::arg("reaction"), py::arg("window") = WindowOptions{},
      py::arg("options") = SolveOptions{});

  m.def("profile_difference", &profile_difference, py::arg("a"), py::arg("b"));

  m.def(
      "speed_curve_json",
      [](const std::vector<double>& A, const FlowProfile& flow, const Reaction& f, const WindowOptions& w) {
        SpeedCurve c;
        {
          py::gil_scoped_release release;
          c = continuation_in_A(A, flow, f, flow.grid(), w, {}, false);
        }
        Json out = Json::array();
        for (const auto& e : c.entries) {
          out.push_back(Json{{"A", e.A}, {"c_star", e.c_star}, {"gamma_A", e.gamma_A}, {"identities", to_json(e.identities)}});
        }
        return dump(Json{{"entries", out}, {"truncated", c.truncated}, {"failure", c.failure}});
      },
      py::arg("A_list"), py::arg("flow"), py::arg("reaction"), py::arg("window") = WindowOptions{});

  m.def(
      "gamma_star_by_viscosity_json",
      [](const FlowProfile& flow, const Reaction& f, const std::vector<double>& A, const WindowOptions& w) {
        py::gil_scoped_release release;
        return dump(to_json(gamma_star_by_viscosity(flow, f, flow.grid(), A, w).estimate));
      },
      py::arg("flow"), py::arg("reaction"), py::arg("A_schedule"), py::arg("window") = WindowOptions{});

  m.def(
      "config_json", [](const std::string& path) { return dump(load_config(path).canonical); }, py::arg("path"));
  m.def(
      "run_experiment_json",
      [](const std::string& text, bool toml, const std::string& mode, const std::string& out_dir, bool no_cache,
         int threads, int grid_refine, bool write_files) {
        const auto cfg = parse_config(config_document(text, toml));
        RunOptions o;
        if (mode == "run") o.mode = RunMode::run;
        else if (mode == "speeds") o.mode = RunMode::speeds;
        else if (mode == "gammastar") o.mode = RunMode::gammastar;
        else throw InputError("mode must be run, speeds or gammastar");
        o.out_dir = out_dir;
        o.no_cache = no_cache;
        o.threads = threads;
        o.grid_refine = grid_refine;
        o.write_files = write_files;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, o);
        }
        return py::make_tuple(dump(r.report), r.exit_code, r.solver_calls, r.cache_hits);
      },
      py::arg("text"), py::arg("toml"), py::arg("mode"), py::arg("out_dir"), py::arg("no_cache"), py::arg("threads"),
      py::arg("grid_refine"), py::arg("write_files"));
  m.def(
      "check_report_json",
      [](const std::string& text) {
        std::vector<std::string> msgs;
        const int code = check_report(Json::parse(text), msgs);
        return py::make_tuple(code, msgs);
      },
      py::arg("text"));
}
