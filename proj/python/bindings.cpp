#include "fsmhd/config.hpp"
#include "fsmhd/errors.hpp"
#include "fsmhd/invlimit.hpp"
#include "fsmhd/layer.hpp"
#include "fsmhd/run.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fsmhd;

namespace {

// run one command on a JSON config string; returns (exit code, summary JSON string)
std::pair<int, std::string> run_json(const std::string& verb, const std::string& config) {
    RunConfig cfg = RunConfig::from_json(nlohmann::json::parse(config));
    apply_env_overrides(cfg);
    CommandResult r;
    {
        py::gil_scoped_release release;
        if (verb == "simulate")
            r = cmd_simulate(cfg);
        else if (verb == "sweep")
            r = cmd_sweep(cfg);
        else if (verb == "layer")
            r = cmd_layer(cfg);
        else if (verb == "check-algebra")
            r = cmd_check_algebra(cfg);
        else
            fail(ErrorCode::ConfigError, "unknown verb " + verb);
    }
    return {r.exit_code, r.summary.dump()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Free-surface MHD inviscid-limit toolkit";
    m.attr("__version__") = fsmhd_version;
    m.attr("config_schema_version") = config_schema_version;

    py::register_exception<Error>(m, "FsmhdError");

    m.def("run_json", &run_json, py::arg("verb"), py::arg("config"),
          "Run simulate, sweep, layer or check-algebra on a JSON config string.");

    py::class_<HalfSpaceGrid, std::shared_ptr<HalfSpaceGrid>>(m, "Grid")
        .def(py::init<int, int, int, double>(), py::arg("d_h"), py::arg("Ny"), py::arg("Nz"), py::arg("L"))
        .def_property_readonly("d_h", &HalfSpaceGrid::d_h)
        .def_property_readonly("Ny", &HalfSpaceGrid::Ny)
        .def_property_readonly("Nz", &HalfSpaceGrid::Nz)
        .def_property_readonly("L", &HalfSpaceGrid::L)
        .def_property_readonly("z_nodes", [](const HalfSpaceGrid& g) { return Eigen::ArrayXd(g.z_nodes()); });

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("slope", &FitResult::slope)
        .def_readonly("intercept", &FitResult::intercept)
        .def_readonly("residual", &FitResult::residual)
        .def_readonly("used", &FitResult::used)
        .def_readonly("excluded", &FitResult::excluded);
    m.def("fit_rate", &fit_rate, py::arg("eps"), py::arg("err"), "Least-squares slope of log err against log eps.");

    py::class_<LayerCoefficients>(m, "LayerCoefficients")
        .def(py::init([](double a0, double b0, double f7v, double f7b, double gamma) {
                 LayerCoefficients c;
                 c.ma.a0 = a0;
                 c.mb.a0 = b0;
                 c.f7v = f7v;
                 c.f7b = f7b;
                 c.gamma = gamma;
                 return c;
             }),
             py::arg("a0") = 1.0, py::arg("b0") = 1.0, py::arg("f7v") = 0.0, py::arg("f7b") = 0.0, py::arg("gamma") = 1.0)
        .def_readwrite("f7v", &LayerCoefficients::f7v)
        .def_readwrite("f7b", &LayerCoefficients::f7b)
        .def_readwrite("gamma", &LayerCoefficients::gamma);

    py::class_<Symbols>(m, "Symbols")
        .def_readonly("Av0", &Symbols::Av0)
        .def_readonly("Av1", &Symbols::Av1)
        .def_readonly("Av2", &Symbols::Av2)
        .def_readonly("Ab0", &Symbols::Ab0)
        .def_readonly("Ab1", &Symbols::Ab1)
        .def_readonly("Ab2", &Symbols::Ab2);
    m.def("layer_symbols", &layer_symbols, py::arg("eps"), py::arg("xi1"), py::arg("xi2"), py::arg("tau"),
          py::arg("coefficients"));
    m.def("decay_rate", &decay_rate, py::arg("A1"), py::arg("A0"));

    py::class_<LayerProfile>(m, "LayerProfile")
        .def_readonly("eps", &LayerProfile::eps)
        .def_readonly("z", &LayerProfile::z)
        .def_readonly("Wp", &LayerProfile::Wp)
        .def_readonly("Wm", &LayerProfile::Wm)
        .def_readonly("picard_iterations", &LayerProfile::picard_iterations)
        .def_readonly("contraction", &LayerProfile::contraction)
        .def_readonly("discrepancy", &LayerProfile::discrepancy)
        .def("plus_at", &LayerProfile::plus_at)
        .def("minus_at", &LayerProfile::minus_at);
    m.def(
        "layer_profile", [](const Symbols& s, cplx wp, cplx wm, double eps) { return layer_profile(s, wp, wm, eps); },
        py::arg("symbols"), py::arg("Wp0"), py::arg("Wm0"), py::arg("eps"));

    py::class_<ScanRow>(m, "ScanRow")
        .def_readonly("eps", &ScanRow::eps)
        .def_readonly("inner_plus", &ScanRow::inner_plus)
        .def_readonly("inner_minus", &ScanRow::inner_minus)
        .def_readonly("outer_plus", &ScanRow::outer_plus)
        .def_readonly("outer_minus", &ScanRow::outer_minus);
    py::class_<ScanTable>(m, "ScanTable")
        .def_readonly("delta_z", &ScanTable::delta_z)
        .def_readonly("rows", &ScanTable::rows)
        .def_readonly("inner_increasing", &ScanTable::inner_increasing)
        .def_readonly("outer_decreasing", &ScanTable::outer_decreasing);
    m.def(
        "scaling_scan",
        [](const std::vector<double>& ladder, double delta_z, const LayerCoefficients& c, double xi1, double xi2,
           double tau) { return scaling_scan(ladder, delta_z, c, xi1, xi2, tau); },
        py::arg("ladder"), py::arg("delta_z"), py::arg("coefficients"), py::arg("xi1") = 0.0, py::arg("xi2") = 0.0,
        py::arg("tau") = 0.0);

    m.def(
        "classify_layer",
        [](double initial, double strain) { return to_string(classify_layer(initial, strain, ClassifierThresholds{})); },
        py::arg("initial_discrepancy"), py::arg("boundary_strain"));
}
