// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings. Videos cross the boundary as float64 arrays of shape
// (F, C, H, W), masks as (F, H, W), flows as (P, 2, H, W).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "mvoc/empirical_denoiser.hpp"
#include "mvoc/error.hpp"
#include "mvoc/guidance.hpp"
#include "mvoc/metrics.hpp"
#include "mvoc/pipeline.hpp"
#include "mvoc/sampler.hpp"
#include "mvoc/schedule.hpp"
#include "mvoc/synthdata.hpp"
#include "mvoc/vten.hpp"

namespace py = pybind11;
using namespace mvoc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

VideoTensor to_video(const Array& a) {
    if (a.ndim() != 4) {
        throw Error(ErrorKind::Shape, "expected a 4-d (F, C, H, W) array, got " + std::to_string(a.ndim()) + "-d");
    }
    const Shape4 s{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                   static_cast<std::size_t>(a.shape(2)), static_cast<std::size_t>(a.shape(3))};
    return VideoTensor(s, std::vector<double>(a.data(), a.data() + a.size()));
}

Mask to_mask(const Array& a) {
    if (a.ndim() != 3) {
        throw Error(ErrorKind::Shape, "expected a 3-d (F, H, W) mask, got " + std::to_string(a.ndim()) + "-d");
    }
    const Shape3 s{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                   static_cast<std::size_t>(a.shape(2))};
    return Mask(s, std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_video(const VideoTensor& v) {
    const auto& s = v.shape();
    Array out({s.frames, s.channels, s.height, s.width});
    std::copy(v.data().begin(), v.data().end(), out.mutable_data());
    return out;
}

Array from_mask(const Mask& m) {
    const auto& s = m.shape();
    Array out({s.frames, s.height, s.width});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

std::vector<VideoTensor> to_videos(const std::vector<Array>& xs) {
    std::vector<VideoTensor> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
        out.push_back(to_video(x));
    }
    return out;
}

py::dict result_dict(const CompositionResult& r) {
    py::dict d;
    d["video"] = from_video(r.video);
    d["cut_paste"] = from_video(r.cut_paste);
    py::dict warping;
    for (const auto& [g, e] : r.warping) {
        warping[py::int_(g)] = e;
    }
    d["warping"] = warping;
    d["object_psnr"] = r.object_psnr;
    d["cut_paste_psnr"] = r.cut_paste_psnr;
    return d;
}

}  // namespace

PYBIND11_MODULE(_mvoc, m) {
    m.doc() = "Layered video object composition with diffusion guidance";

    static py::exception<Error> error_type(m, "MvocError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            err.attr("kind") = error_kind_name(e.kind());
            err.attr("exit_code") = exit_code_for(e.kind());
            PyErr_SetObject(error_type.ptr(), err.ptr());
        }
    });

    // I/O
    m.def("load_video", [](const std::filesystem::path& p) { return from_video(load_video(p)); }, py::arg("path"));
    m.def("save_video", [](const std::filesystem::path& p, const Array& a) { save_video(p, to_video(a)); },
          py::arg("path"), py::arg("video"));
    m.def("load_mask", [](const std::filesystem::path& p) { return from_mask(load_mask(p)); }, py::arg("path"));
    m.def("save_mask", [](const std::filesystem::path& p, const Array& a) { save_mask(p, to_mask(a)); },
          py::arg("path"), py::arg("mask"));

    // schedule and sampler
    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_property_readonly("steps", &NoiseSchedule::steps)
        .def("beta", &NoiseSchedule::beta, py::arg("t"))
        .def("alpha", &NoiseSchedule::alpha, py::arg("t"))
        .def("alpha_bar", &NoiseSchedule::alpha_bar, py::arg("t"))
        .def("sigma", &NoiseSchedule::sigma, py::arg("t"));
    m.def("build_schedule", &build_schedule, py::arg("steps") = 1000, py::arg("beta_start") = 1e-4,
          py::arg("beta_end") = 0.02);
    m.def("uniform_plan", [](int total, int n) { return uniform_plan(total, n).steps(); }, py::arg("total_steps"),
          py::arg("n_steps"));
    m.def(
        "forward_marginal",
        [](const Array& x0, int t, const Array& noise, const NoiseSchedule& s) {
            return from_video(forward_marginal(to_video(x0), t, to_video(noise), s));
        },
        py::arg("x0"), py::arg("t"), py::arg("noise"), py::arg("schedule"));
    m.def(
        "ddim_step",
        [](const Array& xt, int t, int t_prev, const Array& eps, const NoiseSchedule& s) {
            return from_video(ddim_step(to_video(xt), t, t_prev, to_video(eps), s));
        },
        py::arg("xt"), py::arg("t"), py::arg("t_prev"), py::arg("eps"), py::arg("schedule"));
    m.def(
        "ddim_invert_step",
        [](const Array& x_prev, int t_prev, int t, const Array& eps, const NoiseSchedule& s) {
            return from_video(ddim_invert_step(to_video(x_prev), t_prev, t, to_video(eps), s));
        },
        py::arg("x_prev"), py::arg("t_prev"), py::arg("t"), py::arg("eps"), py::arg("schedule"));
    m.def(
        "predict_x0",
        [](const Array& xt, int t, const Array& eps, const NoiseSchedule& s) {
            return from_video(predict_x0(to_video(xt), t, to_video(eps), s));
        },
        py::arg("xt"), py::arg("t"), py::arg("eps"), py::arg("schedule"));

    // guidance
    m.def("weights_to_omega", [](std::vector<double> w) { return weights_to_omega(GuidanceWeights(std::move(w))); },
          py::arg("w"));
    m.def(
        "compose_eps_chained",
        [](const std::vector<Array>& terms, std::vector<double> w) {
            return from_video(compose_eps_chained(to_videos(terms), GuidanceWeights(std::move(w))));
        },
        py::arg("eps_terms"), py::arg("w"));
    m.def(
        "compose_eps_independent",
        [](const Array& uncond, const std::vector<Array>& single, std::vector<double> w) {
            return from_video(compose_eps_independent(to_video(uncond), to_videos(single), GuidanceWeights(std::move(w))));
        },
        py::arg("eps_uncond"), py::arg("eps_single"), py::arg("w"));
    m.def(
        "cfg", [](const Array& u, const Array& c, double w) { return from_video(cfg(to_video(u), to_video(c), w)); },
        py::arg("eps_uncond"), py::arg("eps_cond"), py::arg("w"));

    // empirical-Bayes denoiser
    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def(
            "add",
            [](Dataset& d, const Array& x, const std::vector<std::string>& labels) {
                d.add(to_video(x), std::set<std::string>(labels.begin(), labels.end()));
            },
            py::arg("sample"), py::arg("labels") = std::vector<std::string>{})
        .def("__len__", &Dataset::size)
        .def("subset", &Dataset::subset, py::arg("condition"))
        .def("save", &Dataset::save, py::arg("dir"))
        .def_static("load", &Dataset::load, py::arg("dir"));
    m.def(
        "posterior_mean",
        [](const Array& xt, int t, const Dataset& d, const NoiseSchedule& s, const ConditionSet& c) {
            return from_video(posterior_mean(to_video(xt), t, d, s, c));
        },
        py::arg("xt"), py::arg("t"), py::arg("dataset"), py::arg("schedule"), py::arg("condition") = ConditionSet{});
    m.def(
        "eps_empirical",
        [](const Array& xt, int t, const Dataset& d, const NoiseSchedule& s, const ConditionSet& c) {
            return from_video(eps_empirical(to_video(xt), t, d, s, c));
        },
        py::arg("xt"), py::arg("t"), py::arg("dataset"), py::arg("schedule"), py::arg("condition") = ConditionSet{});
    m.def(
        "score_from_eps",
        [](const Array& eps, int t, const NoiseSchedule& s) { return from_video(score_from_eps(to_video(eps), t, s)); },
        py::arg("eps"), py::arg("t"), py::arg("schedule"));

    // metrics
    m.def(
        "warping_error",
        [](const Array& v_t, const Array& v_tg, const Array& flow, const Array& mask) {
            return warping_error(to_video(v_t), to_video(v_tg), to_video(flow), to_mask(mask));
        },
        py::arg("frame_t"), py::arg("frame_tg"), py::arg("flow"), py::arg("mask"));
    m.def(
        "sequence_warping_error",
        [](const Array& video, const Array& flow, const Array& mask, std::size_t interval) {
            WarpMetricConfig cfg;
            cfg.interval = interval;
            const auto r = sequence_warping_error(to_video(video), FlowField(to_video(flow), interval), to_mask(mask), cfg);
            return py::make_tuple(r.per_pair, r.mean);
        },
        py::arg("video"), py::arg("flow"), py::arg("mask"), py::arg("interval") = 2);
    m.def(
        "estimate_flow",
        [](const Array& video, std::size_t interval) {
            WarpMetricConfig cfg;
            cfg.interval = interval;
            cfg.source = FlowSource::Estimate;
            const auto est = estimate_flow(to_video(video), cfg);
            return py::make_tuple(from_video(est.flow.field()), from_mask(est.valid));
        },
        py::arg("video"), py::arg("interval") = 2);

    // synthetic scenes
    m.def(
        "render_scene",
        [](const std::string& spec_json) {
            const auto r = render_scene(scene_from_json(spec_json));
            std::vector<Array> masks;
            for (const auto& mk : r.masks) masks.push_back(from_mask(mk));
            return py::make_tuple(from_video(r.video), masks);
        },
        py::arg("spec_json"));
    m.def(
        "ground_truth_flow",
        [](const std::string& spec_json, std::size_t interval) {
            const auto f = ground_truth_flow(scene_from_json(spec_json), interval);
            return py::make_tuple(from_video(f.global.field()), from_mask(f.valid));
        },
        py::arg("spec_json"), py::arg("interval"));

    // pipeline
    m.def("write_demo_job", &write_demo_job, py::arg("dir"), py::arg("seed") = 0);
    m.def(
        "run_job",
        [](const std::filesystem::path& job, const std::filesystem::path& out) {
            CompositionResult r;
            {
                py::gil_scoped_release release;
                r = run_job(load_job(job), out);
            }
            return result_dict(r);
        },
        py::arg("job"), py::arg("out_dir"));
    m.def(
        "invert_video",
        [](const Array& video, const std::string& run_json, const std::filesystem::path& base_dir) {
            const LatentCache c = invert_video(to_video(video), run_config_from_json(run_json, base_dir));
            py::dict d;
            for (const auto& [t, x] : c.entries()) d[py::int_(t)] = from_video(x);
            return d;
        },
        py::arg("video"), py::arg("run_json"), py::arg("base_dir") = std::filesystem::path("."));
}
