#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ghostsim/oracle.hpp"
#include "ghostsim/scenarios.hpp"

namespace py = pybind11;
using namespace ghostsim;

namespace {

py::array_t<cplx> field_values(const ComplexField& f) {
    py::array_t<cplx> a({f.grid.ny, f.grid.nx});
    std::copy(f.values.begin(), f.values.end(), a.mutable_data());
    return a;
}

py::array_t<double> frame_values(const IntensityFrame& f) {
    py::array_t<double> a({f.grid.ny, f.grid.nx});
    std::copy(f.values.begin(), f.values.end(), a.mutable_data());
    return a;
}

ComplexField field_from_array(const GridSpec& g, py::array_t<cplx, py::array::c_style> values) {
    if (values.ndim() != 2 || values.shape(0) != g.ny || values.shape(1) != g.nx)
        throw ConfigError("array shape must be (ny, nx) of the grid");
    ComplexField f(g);
    std::copy(values.data(), values.data() + g.count(), f.values.begin());
    return f;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "speckle-field two-arm correlation simulator";
    m.attr("__version__") = kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<int, int, double>(), py::arg("nx"), py::arg("ny"), py::arg("pitch_um"))
        .def_readwrite("nx", &GridSpec::nx)
        .def_readwrite("ny", &GridSpec::ny)
        .def_readwrite("pitch_x_um", &GridSpec::pitch_x_um)
        .def_readwrite("pitch_y_um", &GridSpec::pitch_y_um)
        .def("x_um", &GridSpec::x_um)
        .def("y_um", &GridSpec::y_um)
        .def("__repr__", [](const GridSpec& g) {
            return "GridSpec(" + std::to_string(g.nx) + ", " + std::to_string(g.ny) + ", " +
                   std::to_string(g.pitch_x_um) + ")";
        });

    py::class_<ComplexField>(m, "ComplexField")
        .def(py::init(&field_from_array), py::arg("grid"), py::arg("values"))
        .def_readonly("grid", &ComplexField::grid)
        .def_property_readonly("values", &field_values);

    py::class_<IntensityFrame>(m, "IntensityFrame")
        .def_readonly("grid", &IntensityFrame::grid)
        .def_property_readonly("values", &frame_values);

    m.def("intensity", &intensity);
    py::enum_<FftDirection>(m, "FftDirection")
        .value("Forward", FftDirection::Forward)
        .value("Inverse", FftDirection::Inverse);
    m.def("dft_unitary", &dft_unitary);
    m.def("total_energy", &total_energy);

    py::enum_<SourceMode>(m, "SourceMode")
        .value("Physical", SourceMode::Physical)
        .value("Spectral", SourceMode::Spectral);
    py::class_<SourceSpec>(m, "SourceSpec")
        .def(py::init<>())
        .def_readwrite("lambda_um", &SourceSpec::lambda_um)
        .def_readwrite("d0_um", &SourceSpec::d0_um)
        .def_readwrite("z0_um", &SourceSpec::z0_um)
        .def_readwrite("pinhole_d_um", &SourceSpec::pinhole_d_um)
        .def_readwrite("z_pinhole_um", &SourceSpec::z_pinhole_um)
        .def_readwrite("mean_intensity", &SourceSpec::mean_intensity)
        .def_readwrite("mode", &SourceSpec::mode)
        .def("speckle_size_near_um", &SourceSpec::speckle_size_near_um);
    m.def("sample_frame", &sample_frame, py::arg("spec"), py::arg("grid"), py::arg("seed"));

    m.def("fresnel_propagate", &fresnel_propagate);
    m.def("apply_lens", &apply_lens);
    m.def("apply_aperture", &apply_aperture);
    m.def("two_f_system", &two_f_system);
    m.def("imaging_system", &imaging_system);

    py::class_<ObjectMask>(m, "ObjectMask")
        .def_static("uniform", &ObjectMask::uniform, py::arg("grid"), py::arg("t") = 1.0)
        .def_static("needle_in_slit", &ObjectMask::needle_in_slit)
        .def_static("double_slit", &ObjectMask::double_slit);
    m.def("apply_object", &apply_object);

    py::class_<BeamSplitter>(m, "BeamSplitter")
        .def(py::init<>())
        .def_readwrite("t", &BeamSplitter::t)
        .def_readwrite("r", &BeamSplitter::r);
    m.def("split", &split);

    py::class_<GaussianFitResult>(m, "GaussianFitResult")
        .def_readonly("amplitude", &GaussianFitResult::amplitude)
        .def_readonly("center_um", &GaussianFitResult::center_um)
        .def_readonly("sigma_um", &GaussianFitResult::sigma_um)
        .def_readonly("baseline", &GaussianFitResult::baseline)
        .def_readonly("converged", &GaussianFitResult::converged)
        .def_readonly("iterations", &GaussianFitResult::iterations);
    m.def(
        "fit_gaussian_peak",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            return fit_gaussian_peak(x, y);
        },
        py::arg("x_um"), py::arg("y"));

    py::class_<CoherenceReport>(m, "CoherenceReport")
        .def_readonly("sigma_n_um", &CoherenceReport::sigma_n_um)
        .def_readonly("sigma_f_um", &CoherenceReport::sigma_f_um)
        .def_readonly("delta_x_n_um", &CoherenceReport::delta_x_n_um)
        .def_readonly("delta_x_f_um", &CoherenceReport::delta_x_f_um)
        .def_readonly("delta_q_per_um", &CoherenceReport::delta_q_per_um)
        .def_readonly("product", &CoherenceReport::product);
    m.def("coherence_report", &coherence_report, py::arg("near_fit"), py::arg("far_fit"),
          py::arg("lambda_um"), py::arg("f_um"), py::arg("magnification"));
    m.def("predict_speckle_sizes", &predict_speckle_sizes);

    m.def(
        "analytic_diffraction",
        [](const std::string& kind, double needle_d, double slit_w, double lambda_um, double f_um,
           const std::vector<double>& x_um) {
            const AnalyticMaskKind k = kind == "single_slit" ? AnalyticMaskKind::SingleSlit
                                                             : AnalyticMaskKind::NeedleInSlit;
            return analytic_diffraction(k, needle_d, slit_w, lambda_um, f_um, x_um);
        },
        py::arg("kind"), py::arg("needle_d_um"), py::arg("slit_w_um"), py::arg("lambda_um"),
        py::arg("f_um"), py::arg("x_um"));

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("frames", &ScenarioConfig::frames)
        .def_readwrite("threads", &ScenarioConfig::threads)
        .def_readwrite("grid", &ScenarioConfig::grid)
        .def_readwrite("source", &ScenarioConfig::source);
    m.def("default_scenario",
          [](const std::string& name) { return default_scenario(scenario_from_name(name)); });
    m.def("scenario_names", [] {
        std::vector<std::string> names;
        for (Scenario s : all_scenarios()) names.push_back(scenario_name(s));
        return names;
    });
    m.def("set_scenario_option", &apply_override, py::arg("config"), py::arg("key"),
          py::arg("value"));
    m.def(
        "run_scenario",
        [](const ScenarioConfig& cfg, const std::filesystem::path& outdir) {
            const RunSummary s = run_scenario(cfg, outdir);
            py::dict d;
            d["outdir"] = s.outdir.string();
            d["ok"] = s.ok;
            py::dict man;
            for (const auto& e : s.manifest.entries) man[py::str(e.first)] = e.second;
            d["manifest"] = man;
            return d;
        },
        py::arg("config"), py::arg("outdir"));
}
