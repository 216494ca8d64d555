#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ndeflaw/baselines.hpp"
#include "ndeflaw/decision.hpp"
#include "ndeflaw/filter.hpp"
#include "ndeflaw/nim.hpp"
#include "ndeflaw/simkit.hpp"

namespace py = pybind11;
using namespace nde;

namespace {

ImageGrid grid_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw error("expected a 2-D array");
    const int n2 = static_cast<int>(arr.shape(0));
    const int n1 = static_cast<int>(arr.shape(1));
    std::vector<double> data(arr.data(), arr.data() + static_cast<std::size_t>(n1) * n2);
    return ImageGrid(n1, n2, std::move(data));
}

py::array_t<double> grid_to_array(const ImageGrid& img) {
    py::array_t<double> out({img.n2(), img.n1()});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Automated flaw detection in NDE images";

    py::register_exception<error>(m, "NdeError");

    py::enum_<Shape>(m, "Shape")
        .value("ELLIPSE", Shape::Ellipse)
        .value("RECTANGLE", Shape::Rectangle);

    py::class_<Region>(m, "Region")
        .def(py::init([](Shape shape, double cu, double cv, double a, double b, double theta) {
                 Region r{shape, cu, cv, a, b, theta};
                 return r;
             }),
             py::arg("shape") = Shape::Ellipse, py::arg("cu") = 0.0, py::arg("cv") = 0.0,
             py::arg("a") = 1.0, py::arg("b") = 1.0, py::arg("theta") = 0.0)
        .def_readwrite("shape", &Region::shape)
        .def_readwrite("cu", &Region::cu)
        .def_readwrite("cv", &Region::cv)
        .def_readwrite("a", &Region::a)
        .def_readwrite("b", &Region::b)
        .def_readwrite("theta", &Region::theta)
        .def("canonical", &Region::canonical)
        .def("contains", &Region::contains)
        .def("__repr__", &region_to_json);

    py::class_<RegionPair>(m, "RegionPair")
        .def_readwrite("inner", &RegionPair::inner)
        .def_readwrite("outer", &RegionPair::outer)
        .def_readwrite("delta", &RegionPair::delta);

    py::class_<VolumeConfig>(m, "VolumeConfig")
        .def(py::init<>())
        .def_readwrite("lambda_", &VolumeConfig::lambda)
        .def_readwrite("a_min", &VolumeConfig::a_min)
        .def_readwrite("a_max", &VolumeConfig::a_max)
        .def_readwrite("grid_points", &VolumeConfig::grid_points)
        .def_readwrite("short_runs", &VolumeConfig::short_runs)
        .def_readwrite("short_iterations", &VolumeConfig::short_iterations)
        .def_readwrite("tolerance", &VolumeConfig::tolerance)
        .def_readwrite("max_iterations", &VolumeConfig::max_iterations)
        .def_readwrite("axis_aligned", &VolumeConfig::axis_aligned);

    py::class_<Indication>(m, "Indication")
        .def_readonly("pair", &Indication::pair)
        .def_readonly("signal_peak", &Indication::signal_peak)
        .def_readonly("noise_peak", &Indication::noise_peak)
        .def_readonly("noise_avg", &Indication::noise_avg)
        .def_readonly("snr", &Indication::snr)
        .def_readonly("scaled_amplitude", &Indication::scaled_amplitude)
        .def_readonly("volume", &Indication::volume)
        .def("__repr__", &indication_to_json);

    py::class_<Decision>(m, "Decision")
        .def_readonly("d_metric", &Decision::d_metric)
        .def_readonly("e_th", &Decision::e_th)
        .def_readonly("detected", &Decision::detected)
        .def_readonly("log_domain", &Decision::log_domain);

    py::class_<NimParams>(m, "NimParams")
        .def(py::init<>())
        .def_readwrite("beta0", &NimParams::beta0)
        .def_readwrite("beta1", &NimParams::beta1)
        .def_readwrite("mu_n", &NimParams::mu_n)
        .def_readwrite("sigma_s", &NimParams::sigma_s)
        .def_readwrite("sigma_n", &NimParams::sigma_n);

    py::class_<PeakAmpParams>(m, "PeakAmpParams")
        .def(py::init<>())
        .def_readwrite("gamma0", &PeakAmpParams::gamma0)
        .def_readwrite("gamma1", &PeakAmpParams::gamma1)
        .def_readwrite("kappa_s", &PeakAmpParams::kappa_s)
        .def_readwrite("nu_n", &PeakAmpParams::nu_n)
        .def_readwrite("kappa_n", &PeakAmpParams::kappa_n)
        .def_readwrite("z_th", &PeakAmpParams::z_th);

    m.def("load_image", [](const std::string& path) { return grid_to_array(load_image(path)); });
    m.def("save_image", [](const py::array_t<double>& a, const std::string& path) {
        save_image(grid_from_array(a), path);
    });
    m.def("estimate_bias", [](const py::array_t<double>& a, const Region* exclude) {
        return estimate_bias(grid_from_array(a), exclude);
    }, py::arg("img"), py::arg("exclude") = nullptr);

    m.def("matched_filter", [](const py::array_t<double>& a, double fwhm) {
        return grid_to_array(matched_filter(grid_from_array(a), make_kernel(fwhm)));
    }, py::arg("img"), py::arg("fwhm") = 4.71);

    m.def("equal_area_delta", &equal_area_delta);
    m.def("make_outer", &make_outer);
    m.def("lambda_xi", &lambda_xi);
    m.def("volume", [](const py::array_t<double>& a, const Region& inner, double lambda) {
        return volume(grid_from_array(a), inner, lambda);
    });
    m.def("expected_volume", [](const py::array_t<double>& tau, double sigma, double lambda,
                                const Region& inner) {
        return expected_volume(grid_from_array(tau), sigma, lambda, inner);
    });

    m.def("optimize_ellipse", [](const py::array_t<double>& a, int u, int v, const VolumeConfig& cfg) {
        return optimize_ellipse(grid_from_array(a), Pixel{u, v}, cfg);
    }, py::arg("img"), py::arg("u"), py::arg("v"), py::arg("config") = VolumeConfig{});
    m.def("optimize_rectangle", [](const py::array_t<double>& a, int u, int v, const VolumeConfig& cfg) {
        return optimize_rectangle(grid_from_array(a), Pixel{u, v}, cfg);
    }, py::arg("img"), py::arg("u"), py::arg("v"), py::arg("config") = VolumeConfig{});

    m.def("extract_features", [](const py::array_t<double>& a, const RegionPair& pair) {
        return extract_features(grid_from_array(a), pair);
    });
    m.def("detect_indications", [](const py::array_t<double>& a, const VolumeConfig& cfg,
                                   double rho, Shape shape) {
        return detect_indications(grid_from_array(a), cfg, rho, shape);
    }, py::arg("img"), py::arg("config") = VolumeConfig{}, py::arg("rho") = 0.9,
       py::arg("shape") = Shape::Ellipse);
    m.def("merge_pairs", [](const py::array_t<double>& a, std::vector<Indication> inds,
                            double closeness, double snr_threshold, const VolumeConfig& cfg,
                            Shape shape) {
        return merge_pairs(grid_from_array(a), std::move(inds), closeness, snr_threshold, cfg, shape);
    }, py::arg("img"), py::arg("indications"), py::arg("closeness") = 10.0,
       py::arg("snr_threshold") = 2.5, py::arg("config") = VolumeConfig{},
       py::arg("shape") = Shape::Ellipse);

    m.def("calibrate_alpha", &calibrate_alpha);
    m.def("calibrate_zth", &calibrate_zth);
    m.def("decide", &decide);
    m.def("peak_amplitude", [](const py::array_t<double>& a) {
        return peak_amplitude(grid_from_array(a));
    });

    m.def("nim_loglik", [](const NimParams& p, const std::vector<std::pair<double, double>>& flawed,
                           const std::vector<double>& noise) {
        std::vector<FlawObs> obs;
        for (auto [d, s] : flawed) obs.push_back({d, s});
        return nim_loglik(p, obs, noise);
    }, py::arg("params"), py::arg("flawed"), py::arg("noise"),
       "flawed entries are (response, size) pairs");
    m.def("fit_nim", [](const std::vector<std::pair<double, double>>& flawed,
                        const std::vector<double>& noise) {
        std::vector<FlawObs> obs;
        for (auto [d, s] : flawed) obs.push_back({d, s});
        const auto fit = fit_nim(obs, noise);
        return py::make_tuple(fit.params, fit.loglik);
    });
    m.def("pod", &pod);
    m.def("pod_peakamp", &pod_peakamp);
    m.def("a90", [](const std::function<double(double)>& pod_fn, double lo, double hi) {
        return a90(pod_fn, lo, hi);
    }, py::arg("pod_fn"), py::arg("lo") = 1.0, py::arg("hi") = 1e4);

    m.def("wilcoxon_signed_rank", [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto r = wilcoxon_signed_rank(x, y);
        return py::make_tuple(r.statistic, r.p_value);
    });

    m.def("run_comparison", [](const std::string& config_json) {
        const SimConfig cfg = config_json.empty() ? SimConfig::defaults()
                                                  : SimConfig::from_json(config_json);
        return run_comparison(cfg).to_json();
    }, py::arg("config_json") = std::string(),
       "Runs the full seeded comparison; returns the report as a JSON string");
}
