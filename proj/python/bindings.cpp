// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/error.hpp"
#include "isptune/tuner.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace isptune;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (C, H, W) or (H, W) arrays.
PlanarImage to_image(const Array& a, ColorDomain domain) {
    if (a.ndim() == 2) {
        PlanarImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 1, ColorDomain::Plane);
        std::memcpy(img.data().data(), a.data(), img.size() * sizeof(double));
        return img;
    }
    if (a.ndim() != 3) throw py::value_error("expected a 2-D or 3-D array");
    if (a.shape(0) == 1) domain = ColorDomain::Plane;
    if (a.shape(0) == 3 && domain == ColorDomain::Plane) domain = ColorDomain::LinearRGB;
    PlanarImage img(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), domain);
    std::memcpy(img.data().data(), a.data(), img.size() * sizeof(double));
    return img;
}

Array from_image(const PlanarImage& img) {
    Array out(img.channels() == 1 ? std::vector<py::ssize_t>{img.height(), img.width()}
                                  : std::vector<py::ssize_t>{img.channels(), img.height(), img.width()});
    std::memcpy(out.mutable_data(), img.data().data(), img.size() * sizeof(double));
    return out;
}

BayerMosaic to_mosaic(const Array& a, const std::string& pattern) {
    if (a.ndim() != 2) throw py::value_error("a mosaic is a 2-D array");
    return BayerMosaic::from_plane(to_image(a, ColorDomain::Plane), parse_cfa_pattern(pattern));
}

Array from_mosaic(const BayerMosaic& m) { return from_image(m.as_plane()); }

Array mask_array(const std::vector<bool>& mask, int width, int height) {
    Array out({height, width});
    double* p = out.mutable_data();
    for (std::size_t i = 0; i < mask.size(); ++i) p[i] = mask[i] ? 1.0 : 0.0;
    return out;
}

std::vector<bool> to_mask(const Array& a) {
    std::vector<bool> m(static_cast<std::size_t>(a.size()));
    const double* p = a.data();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = p[i] != 0.0;
    return m;
}

Burst to_burst(const Array& frames, const std::string& pattern) {
    if (frames.ndim() != 3) throw py::value_error("a burst is an (N, H, W) array");
    Burst b;
    const auto h = frames.shape(1);
    const auto w = frames.shape(2);
    for (py::ssize_t k = 0; k < frames.shape(0); ++k) {
        BayerMosaic m(static_cast<int>(w), static_cast<int>(h), parse_cfa_pattern(pattern));
        std::memcpy(m.data().data(), frames.data(k, 0, 0), static_cast<std::size_t>(w * h) * sizeof(double));
        b.frames.push_back(std::move(m));
    }
    return b;
}

Array from_burst(const Burst& b) {
    const auto& f0 = b.frames.front();
    Array out({static_cast<py::ssize_t>(b.size()), static_cast<py::ssize_t>(f0.height()), static_cast<py::ssize_t>(f0.width())});
    for (std::size_t k = 0; k < b.size(); ++k)
        std::memcpy(out.mutable_data(static_cast<py::ssize_t>(k), 0, 0), b.frames[k].data().data(), f0.size() * sizeof(double));
    return out;
}

SessionConfig config_from(const std::string& json_text) {
    SessionConfig c = session_config_from_json(Json::parse(json_text));
    c.validate();
    return c;
}

py::dict optim_result(const OptimResult& r) {
    py::dict d;
    d["best"] = r.best;
    d["best_f"] = r.best_f;
    d["evals_used"] = r.evals_used;
    std::vector<std::pair<long, double>> trace;
    for (const auto& t : r.trace) trace.emplace_back(t.eval, t.best_f);
    d["trace"] = trace;
    return d;
}

OptimConfig optim_config(int population, long total_evals, double stage_split, const std::string& local_method,
                         std::uint64_t seed) {
    OptimConfig c;
    c.abc.population = population;
    c.abc.max_evals = total_evals;
    c.local.max_evals = total_evals;
    c.total_evals = total_evals;
    c.stage_split = stage_split;
    c.seed = seed;
    if (local_method == "nelder_mead") {
        c.local.method = LocalMethod::NelderMead;
    } else if (local_method != "subplex") {
        throw py::value_error("local_method must be 'subplex' or 'nelder_mead'");
    }
    return c;
}

Objective::Function wrap(const py::function& f) {
    return [f](std::span<const double> x) {
        py::gil_scoped_acquire gil;
        return f(std::vector<double>(x.begin(), x.end())).cast<double>();
    };
}

std::string dump(const Json& j) { return j.dump(); }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of isptune.";

    py::register_exception<Error>(m, "IsptuneError", PyExc_RuntimeError);

    // Images and metrics
    m.def("rgb_to_yuv", [](const Array& a) { return from_image(rgb_to_yuv(to_image(a, ColorDomain::LinearRGB))); });
    m.def("yuv_to_rgb", [](const Array& a) { return from_image(yuv_to_rgb(to_image(a, ColorDomain::YUV))); });
    m.def("bayer_subsample", [](const Array& rgb, const std::string& pattern) {
        return from_mosaic(bayer_subsample(to_image(rgb, ColorDomain::LinearRGB), parse_cfa_pattern(pattern)));
    }, py::arg("rgb"), py::arg("pattern") = "RGGB");
    m.def("sad", [](const Array& a, const Array& b) { return sad(to_image(a, ColorDomain::Plane), to_image(b, ColorDomain::Plane)); });
    m.def("mad_8bit", [](const Array& a, const Array& b) {
        return mad_8bit(to_image(a, ColorDomain::Plane), to_image(b, ColorDomain::Plane));
    });
    m.def("ssim", [](const Array& a, const Array& b) {
        return ssim(to_image(a, ColorDomain::LinearRGB), to_image(b, ColorDomain::LinearRGB));
    });
    m.def("ms_ssim", [](const Array& a, const Array& b) {
        return ms_ssim(to_image(a, ColorDomain::LinearRGB), to_image(b, ColorDomain::LinearRGB));
    });

    // Scene, capture and references
    m.def("synthesize_scene", [](const std::string& spec_json, std::uint64_t seed) {
        const SceneSpec spec = spec_json.empty() ? SceneSpec::default_chart() : scene_spec_from_json(Json::parse(spec_json));
        const Scene s = synthesize_scene(spec, seed);
        return py::make_tuple(from_image(s.rgb), mask_array(s.flat_mask, s.rgb.width(), s.rgb.height()));
    }, py::arg("spec_json") = "", py::arg("seed") = 0);
    m.def("default_scene_spec", [](int w, int h) { return dump(scene_spec_to_json(SceneSpec::default_chart(w, h))); },
          py::arg("width") = 128, py::arg("height") = 128);
    m.def("simulate_capture", [](const Array& rgb, double a, double b, double gain, const std::string& pattern, int n,
                                 std::uint64_t seed) {
        return from_burst(simulate_capture(to_image(rgb, ColorDomain::LinearRGB), NoiseModel{a, b, gain},
                                           parse_cfa_pattern(pattern), n, seed));
    }, py::arg("rgb"), py::arg("a"), py::arg("b"), py::arg("gain") = 1.0, py::arg("pattern") = "RGGB",
          py::arg("n_frames") = 10, py::arg("seed") = 0);
    m.def("temporal_fusion", [](const Array& frames, const std::string& pattern) {
        return from_mosaic(temporal_fusion(to_burst(frames, pattern)));
    }, py::arg("frames"), py::arg("pattern") = "RGGB");
    m.def("calibrate_noise_model", [](const std::vector<std::pair<Array, double>>& flats, const std::string& pattern) {
        std::vector<FlatCapture> caps;
        for (const auto& [frames, level] : flats) caps.push_back(FlatCapture{to_burst(frames, pattern), level});
        const NoiseModel nm = calibrate_noise_model(caps);
        return py::make_tuple(nm.a, nm.b);
    }, py::arg("flats"), py::arg("pattern") = "RGGB");
    m.def("sharpening_reference", [](const Array& y, const Array& flat_mask, double alpha) {
        SharpenRefConfig cfg;
        cfg.alpha = alpha;
        return from_image(sharpening_reference(to_image(y, ColorDomain::Plane), cfg, to_mask(flat_mask)));
    }, py::arg("y"), py::arg("flat_mask"), py::arg("alpha") = 1.0);

    // Pipeline
    m.def("run_pipeline", [](const Array& mosaic, const std::string& tuning_json, double a, double b, double gain,
                             const std::string& pattern) {
        const PipelineTuning t = tuning_from_json(Json::parse(tuning_json));
        const PipelineTaps taps = run_pipeline(to_mosaic(mosaic, pattern), t, NoiseModel{a, b, gain});
        py::dict d;
        d["BayerNR"] = from_mosaic(*taps.bayer_nr);
        d["Demosaic"] = from_image(*taps.demosaic);
        d["YuvNR"] = from_image(*taps.yuv_nr);
        d["Sharpen"] = from_image(*taps.sharpen);
        d["rgb"] = from_image(*taps.output);
        return d;
    }, py::arg("mosaic"), py::arg("tuning_json"), py::arg("a"), py::arg("b"), py::arg("gain") = 1.0,
          py::arg("pattern") = "RGGB");
    m.def("hand_proxy_tuning", [] { return dump(tuning_to_json(hand_proxy_tuning())); });
    m.def("passthrough_tuning", [] { return dump(tuning_to_json(PipelineTuning::passthrough())); });

    // Optimizers over [0,1]^d
    m.def("abc_optimize", [](const py::function& f, int d, int population, long evals, std::uint64_t seed) {
        Objective obj(wrap(f));
        return optim_result(abc_optimize(obj, d, optim_config(population, evals, 0.6, "subplex", seed), seed));
    }, py::arg("f"), py::arg("d"), py::arg("population") = 40, py::arg("max_evals") = 20000, py::arg("seed") = 0);
    m.def("two_stage", [](const py::function& f, int d, int population, long evals, double split, const std::string& local,
                          std::uint64_t seed) {
        Objective obj(wrap(f));
        return optim_result(two_stage(obj, d, optim_config(population, evals, split, local, seed)));
    }, py::arg("f"), py::arg("d"), py::arg("population") = 40, py::arg("total_evals") = 4000,
          py::arg("stage_split") = 0.6, py::arg("local_method") = "subplex", py::arg("seed") = 0);
    m.def("local_optimize", [](const py::function& f, const std::vector<double>& x0, long evals, const std::string& local) {
        Objective obj(wrap(f));
        return optim_result(local_optimize(obj, x0, optim_config(4, evals, 0.6, local, 0)));
    }, py::arg("f"), py::arg("x0"), py::arg("max_evals") = 4000, py::arg("local_method") = "subplex");

    // Sessions (JSON in, JSON out)
    m.def("default_config", [] { return dump(to_json(SessionConfig::defaults())); });
    m.def("tune_pipeline", [](const std::string& cfg, std::size_t gain_index) {
        const SessionConfig c = config_from(cfg);
        py::gil_scoped_release nogil;
        const GainTuning g = tune_pipeline(c, gain_index);
        TuningLadder l;
        l.seed = c.seed;
        l.gains.push_back(g);
        return dump(ladder_to_json(l)["gains"][0]);
    }, py::arg("config_json"), py::arg("gain_index"));
    m.def("tune_ladder", [](const std::string& cfg) {
        const SessionConfig c = config_from(cfg);
        py::gil_scoped_release nogil;
        return dump(ladder_to_json(tune_ladder(c)));
    }, py::arg("config_json"));
    m.def("transition_smoothness_csv", [](const std::string& ladder_json) {
        return smoothness_csv(transition_smoothness(ladder_from_json(Json::parse(ladder_json))));
    }, py::arg("ladder_json"));
    m.def("repeatability_csv", [](const std::string& cfg, int runs) {
        const SessionConfig c = config_from(cfg);
        py::gil_scoped_release nogil;
        return repeat_csv(repeatability_experiment(c, runs));
    }, py::arg("config_json"), py::arg("runs") = 10);
    m.def("evaluation_csv", [](const std::string& cfg, std::size_t gain_index, const std::string& tuning_json) {
        const SessionConfig c = config_from(cfg);
        const PipelineTuning t = tuning_from_json(Json::parse(tuning_json));
        py::gil_scoped_release nogil;
        return evaluation_csv(evaluate_tuning(c, gain_index, t));
    }, py::arg("config_json"), py::arg("gain_index"), py::arg("tuning_json"));
}
