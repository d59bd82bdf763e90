// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mvoc/blend.hpp"
#include "mvoc/empirical_denoiser.hpp"
#include "mvoc/error.hpp"
#include "mvoc/metrics.hpp"
#include "mvoc/parallel.hpp"
#include "mvoc/synthdata.hpp"
#include "mvoc/vten.hpp"

namespace mvoc {

using nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text << '\n';
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

ScheduleConfig schedule_of(const json& j) {
    ScheduleConfig s;
    if (j.contains("schedule")) {
        const auto& o = j.at("schedule");
        s.T = o.value("T", s.T);
        s.beta_start = o.value("beta_start", s.beta_start);
        s.beta_end = o.value("beta_end", s.beta_end);
    }
    return s;
}

DenoiserConfig denoiser_of(const json& j, const fs::path& base, std::uint64_t default_seed) {
    DenoiserConfig d;
    d.unet.seed = default_seed;
    if (!j.contains("denoiser")) {
        return d;
    }
    const auto& o = j.at("denoiser");
    d.backend = o.value("backend", d.backend);
    if (d.backend != "unet" && d.backend != "empirical") {
        throw Error(ErrorKind::Config, "unknown denoiser backend '" + d.backend + "'");
    }
    auto& u = d.unet;
    u.in_channels = o.value("in_channels", u.in_channels);
    u.patch = o.value("patch", u.patch);
    u.cond_channels = o.value("cond_channels", u.cond_channels);
    if (o.contains("widths")) {
        const auto w = o.at("widths").get<std::vector<std::size_t>>();
        if (w.size() != 2) {
            throw Error(ErrorKind::Config, "denoiser.widths needs two entries");
        }
        u.widths = {w[0], w[1]};
    }
    u.time_dim = o.value("time_dim", u.time_dim);
    u.seed = o.value("seed", u.seed);
    u.init_scale = o.value("init_scale", u.init_scale);
    u.head_scale = o.value("head_scale", u.head_scale);
    if (o.contains("dataset")) {
        d.dataset = resolve(base, o.at("dataset").get<std::string>());
    }
    return d;
}

ojson schedule_json(const ScheduleConfig& s) {
    return {{"T", s.T}, {"beta_start", s.beta_start}, {"beta_end", s.beta_end}};
}

ojson denoiser_json(const DenoiserConfig& d) {
    const auto& u = d.unet;
    ojson o{{"backend", d.backend},
            {"in_channels", u.in_channels},
            {"patch", u.patch},
            {"cond_channels", u.cond_channels},
            {"widths", {u.widths[0], u.widths[1]}},
            {"time_dim", u.time_dim},
            {"seed", u.seed},
            {"init_scale", u.init_scale},
            {"head_scale", u.head_scale}};
    if (!d.dataset.empty()) {
        o["dataset"] = d.dataset.string();
    }
    return o;
}

AffineTransform transform_of(const json& o) {
    if (o.contains("matrix")) {
        const auto m = o.at("matrix").get<std::vector<double>>();
        if (m.size() != 6) {
            throw Error(ErrorKind::Config, "transform.matrix needs 6 values");
        }
        return AffineTransform({m[0], m[1], m[2], m[3], m[4], m[5]});
    }
    AffineTransform t;
    if (o.contains("scale")) {
        const auto& s = o.at("scale");
        const double sy = s.is_array() ? s.at(0).get<double>() : s.get<double>();
        const double sx = s.is_array() ? s.at(1).get<double>() : s.get<double>();
        t = AffineTransform::scaling(sy, sx);
    }
    if (o.contains("rotate")) {
        GridPoint c{};
        if (o.contains("center")) {
            const auto v = o.at("center").get<std::vector<double>>();
            if (v.size() != 2) {
                throw Error(ErrorKind::Config, "transform.center must be [y, x]");
            }
            c = {v[0], v[1]};
        }
        t = AffineTransform::rotation(o.at("rotate").get<double>(), c).after(t);
    }
    if (o.contains("translate")) {
        const auto v = o.at("translate").get<std::vector<double>>();
        if (v.size() != 2) {
            throw Error(ErrorKind::Config, "transform.translate must be [dy, dx]");
        }
        t = AffineTransform::translation(v[0], v[1]).after(t);
    }
    return t;
}

template <class F>
auto config_guard(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string(what) + ": " + e.what());
    }
}

}  // namespace

void CompositionJob::validate() const {
    if (steps < 1 || steps > schedule.T) {
        throw Error(ErrorKind::Config, "steps must lie in [1, T]");
    }
    if (denoiser.backend != "unet") {
        throw Error(ErrorKind::Config, "composition needs the unet backend (taps are required)");
    }
    if (objects.size() > denoiser.unet.cond_channels) {
        throw Error(ErrorKind::Config, std::to_string(objects.size()) + " objects exceed " +
                                           std::to_string(denoiser.unet.cond_channels) + " condition channels");
    }
    if (!guidance_w.empty() && guidance_w.size() != objects.size()) {
        throw Error(ErrorKind::Config, "guidance_w needs one weight per object");
    }
    std::vector<int> layers;
    for (const auto& o : objects) {
        if (o.layer < 1) {
            throw Error(ErrorKind::Config, "object layers start at 1 (the background is layer 0)");
        }
        layers.push_back(o.layer);
    }
    std::sort(layers.begin(), layers.end());
    if (std::adjacent_find(layers.begin(), layers.end()) != layers.end()) {
        throw Error(ErrorKind::Config, "object layers must be unique");
    }
    try {
        InjectionSchedule s = injection;
        s.n_steps = steps;
        s.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
}

AffineTransform transform_from_json(const std::string& text) {
    return config_guard("transform json", [&] { return transform_of(json::parse(text)); });
}

CompositionJob job_from_json(const std::string& text, const fs::path& base_dir) {
    CompositionJob job = config_guard("job json", [&] {
        const json j = json::parse(text);
        CompositionJob out;
        out.seed = j.value("seed", out.seed);
        out.background = resolve(base_dir, j.at("background").at("video").get<std::string>());
        for (const auto& o : j.value("objects", json::array())) {
            ObjectInput in;
            in.video = resolve(base_dir, o.at("video").get<std::string>());
            in.mask = resolve(base_dir, o.at("mask").get<std::string>());
            if (o.contains("transform")) {
                in.transform = transform_of(o.at("transform"));
            }
            in.layer = o.value("layer", in.layer);
            out.objects.push_back(std::move(in));
        }
        out.schedule = schedule_of(j);
        out.steps = j.value("steps", out.steps);
        if (j.contains("guidance_w")) {
            out.guidance_w = j.at("guidance_w").get<std::vector<double>>();
        }
        if (j.contains("injection")) {
            const auto& r = j.at("injection");
            out.injection.r_fn = r.value("r_fn", out.injection.r_fn);
            out.injection.r_fr = r.value("r_fr", out.injection.r_fr);
            out.injection.r_at = r.value("r_at", out.injection.r_at);
            out.injection.r_as = r.value("r_as", out.injection.r_as);
        }
        out.injection.n_steps = out.steps;
        out.denoiser = denoiser_of(j, base_dir, out.seed);
        if (j.contains("flow_dir")) {
            out.flow_dir = resolve(base_dir, j.at("flow_dir").get<std::string>());
        }
        return out;
    });
    job.validate();
    return job;
}

std::string job_to_json(const CompositionJob& job) {
    ojson j;
    j["background"] = {{"video", job.background.string()}};
    j["objects"] = ojson::array();
    for (const auto& o : job.objects) {
        const auto& m = o.transform.matrix();
        j["objects"].push_back({{"video", o.video.string()},
                                {"mask", o.mask.string()},
                                {"transform", {{"matrix", {m[0], m[1], m[2], m[3], m[4], m[5]}}}},
                                {"layer", o.layer}});
    }
    j["schedule"] = schedule_json(job.schedule);
    j["steps"] = job.steps;
    if (!job.guidance_w.empty()) {
        j["guidance_w"] = job.guidance_w;
    }
    j["injection"] = {{"r_fn", job.injection.r_fn},
                      {"r_fr", job.injection.r_fr},
                      {"r_at", job.injection.r_at},
                      {"r_as", job.injection.r_as}};
    j["denoiser"] = denoiser_json(job.denoiser);
    if (job.flow_dir) {
        j["flow_dir"] = job.flow_dir->string();
    }
    j["seed"] = job.seed;
    return j.dump(2);
}

CompositionJob load_job(const fs::path& path) {
    return job_from_json(read_text(path), path.parent_path());
}

JobInputs load_inputs(const CompositionJob& job) {
    JobInputs in;
    in.background = load_video(job.background);
    const Shape4 shape = in.background.shape();
    if (shape.channels != job.denoiser.unet.in_channels) {
        throw Error(ErrorKind::Config, "background has " + std::to_string(shape.channels) +
                                           " channels, the denoiser expects " +
                                           std::to_string(job.denoiser.unet.in_channels));
    }
    std::vector<std::size_t> order(job.objects.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return job.objects[a].layer < job.objects[b].layer; });
    for (std::size_t k : order) {
        const auto& o = job.objects[k];
        VideoTensor v = load_video(o.video);
        if (v.shape() != shape) {
            throw Error(ErrorKind::Shape, o.video.string() + " is " + v.shape().str() + ", background is " + shape.str());
        }
        Mask m = load_mask(o.mask);
        if (m.shape() != spatial_shape(shape)) {
            throw Error(ErrorKind::Shape, o.mask.string() + " does not match the video dims");
        }
        in.objects.push_back(std::move(v));
        in.masks.push_back(m.binarized(0.5));
        in.transforms.push_back(o.transform);
    }
    return in;
}

PipelineModel build_model(const CompositionJob& job) {
    job.validate();
    NoiseSchedule s = job.schedule.build();
    TimestepPlan plan = uniform_plan(job.schedule.T, job.steps);
    return {std::move(s), std::move(plan), MiniUNet(job.denoiser.unet)};
}

std::vector<LatentCache> preprocess_objects(const JobInputs& inputs, const PipelineModel& model,
                                            const fs::path* cache_dir) {
    std::vector<LatentCache> caches(inputs.objects.size());
    parallel_for(inputs.objects.size(), [&](std::size_t i) {
        model.unet.check_input(inputs.objects[i].shape());
        const std::vector<int> cond{static_cast<int>(i)};
        EpsFn fn = [&](const VideoTensor& x, int t, int) { return model.unet.forward(x, t, cond, model.schedule).eps; };
        const LatentCache raw = invert_loop(inputs.objects[i], model.plan, fn, model.schedule);
        for (const auto& [t, latent] : raw.entries()) {
            caches[i].put(t, quantize_f32(latent));
        }
    });
    if (cache_dir != nullptr) {
        make_dirs(*cache_dir);
        for (std::size_t i = 0; i < caches.size(); ++i) {
            caches[i].save(*cache_dir, static_cast<int>(i));
        }
    }
    return caches;
}

std::vector<LatentCache> load_object_caches(const fs::path& cache_dir, std::size_t objects, const TimestepPlan& plan) {
    std::vector<LatentCache> caches;
    for (std::size_t i = 0; i < objects; ++i) {
        caches.push_back(LatentCache::load(cache_dir, static_cast<int>(i), plan));
    }
    return caches;
}

FirstFrameEdit edit_first_frame(const JobInputs& inputs) {
    const auto& shape = inputs.background.shape();
    const std::size_t H = shape.height;
    const std::size_t W = shape.width;
    FirstFrameEdit edit;
    edit.frame = frame_slice(inputs.background, 0);
    for (std::size_t i = 0; i < inputs.objects.size(); ++i) {
        const Mask placed = affine_apply(inputs.masks[i], inputs.transforms[i], H, W).binarized(0.5);
        const VideoTensor obj = affine_apply(inputs.objects[i], inputs.transforms[i], H, W);
        std::vector<double> shift(shape.channels, 0.0);
        double count = 0.0;
        std::vector<double> mu_obj(shape.channels, 0.0);
        std::vector<double> mu_bg(shape.channels, 0.0);
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                if (placed.at(0, y, x) < 0.5) {
                    continue;
                }
                count += 1.0;
                for (std::size_t c = 0; c < shape.channels; ++c) {
                    mu_obj[c] += obj.at(0, c, y, x);
                    mu_bg[c] += inputs.background.at(0, c, y, x);
                }
            }
        }
        if (count > 0.0) {
            for (std::size_t c = 0; c < shape.channels; ++c) {
                shift[c] = (mu_bg[c] - mu_obj[c]) / count;
            }
        }
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                if (placed.at(0, y, x) < 0.5) {
                    continue;
                }
                for (std::size_t c = 0; c < shape.channels; ++c) {
                    edit.frame.at(0, c, y, x) = obj.at(0, c, y, x) + shift[c];
                }
            }
        }
        edit.color_shift.push_back(std::move(shift));
        edit.placed_masks.push_back(placed);
    }
    return edit;
}

VideoTensor cut_paste_video(const JobInputs& inputs, const FirstFrameEdit& edit) {
    const auto& shape = inputs.background.shape();
    VideoTensor out = inputs.background;
    for (std::size_t i = 0; i < inputs.objects.size(); ++i) {
        const Mask& m = edit.placed_masks[i];
        const VideoTensor obj = affine_apply(inputs.objects[i], inputs.transforms[i], shape.height, shape.width);
        for (std::size_t f = 0; f < shape.frames; ++f) {
            for (std::size_t c = 0; c < shape.channels; ++c) {
                for (std::size_t y = 0; y < shape.height; ++y) {
                    for (std::size_t x = 0; x < shape.width; ++x) {
                        if (m.at(f, y, x) >= 0.5) {
                            out.at(f, c, y, x) = obj.at(f, c, y, x) + edit.color_shift[i][c];
                        }
                    }
                }
            }
        }
    }
    return out;
}

std::optional<double> masked_psnr(const VideoTensor& a, const VideoTensor& b, const Mask& mask) {
    require_same_shape(a, b, "masked_psnr");
    const auto& s = a.shape();
    if (mask.shape() != spatial_shape(s)) {
        throw Error(ErrorKind::Shape, "psnr mask does not match the video");
    }
    double se = 0.0;
    double n = 0.0;
    for (std::size_t f = 0; f < s.frames; ++f) {
        for (std::size_t y = 0; y < s.height; ++y) {
            for (std::size_t x = 0; x < s.width; ++x) {
                const double m = mask.at(f, y, x);
                if (m == 0.0) {
                    continue;
                }
                for (std::size_t c = 0; c < s.channels; ++c) {
                    const double d = a.at(f, c, y, x) - b.at(f, c, y, x);
                    se += m * d * d;
                    n += m;
                }
            }
        }
    }
    if (n == 0.0) {
        return std::nullopt;
    }
    const double mse = se / n;
    return mse == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(mse);
}

CompositionResult compose_video(const CompositionJob& job, const JobInputs& inputs, const PipelineModel& model,
                                const std::vector<LatentCache>& caches) {
    const std::size_t n = inputs.objects.size();
    if (caches.size() != n) {
        throw Error(ErrorKind::CacheMiss, "one latent cache per object required");
    }
    model.unet.check_input(inputs.background.shape());
    CompositionResult result;
    result.edit = edit_first_frame(inputs);
    result.cut_paste = cut_paste_video(inputs, result.edit);

    std::vector<ObjectLayer> layers;
    for (std::size_t i = 0; i < n; ++i) {
        const int id = static_cast<int>(i);
        layers.push_back({id, inputs.masks[i], inputs.transforms[i],
                          std::make_shared<LatentTapCache>(model.unet, model.schedule, caches[i], std::vector<int>{id})});
    }

    GuidedEpsConfig cfg;
    cfg.unet = &model.unet;
    cfg.schedule = &model.schedule;
    cfg.weights = job.guidance_w.empty() ? GuidanceWeights::uniform(n) : GuidanceWeights(job.guidance_w);
    cfg.injection = InjectionSchedule::none(model.plan.size());
    const EpsFn plain = [&](const VideoTensor& x, int t, int k) { return guided_eps(x, t, k, layers, cfg); };
    const VideoTensor x_T = invert_loop(result.cut_paste, model.plan, plain, model.schedule).noisiest();

    GuidedEpsConfig inj = cfg;
    inj.injection = job.injection;
    inj.injection.n_steps = model.plan.size();
    const EpsFn guided = [&](const VideoTensor& x, int t, int k) {
        InjectionStepReport rep;
        VideoTensor e = guided_eps(x, t, k, layers, inj, &rep);
        result.injection.push_back(std::move(rep));
        return e;
    };
    result.video = sample_loop(x_T, model.plan, guided, model.schedule, false).x0;

    const auto& shape = result.video.shape();
    for (std::size_t g : {2u, 4u}) {
        if (g >= shape.frames) {
            continue;
        }
        WarpMetricConfig wc;
        wc.interval = g;
        FlowField flow;
        Mask valid;
        if (job.flow_dir) {
            flow = load_flow(*job.flow_dir / ("flow_g" + std::to_string(g) + ".vten"), g);
            const fs::path vp = *job.flow_dir / ("valid_g" + std::to_string(g) + ".vten");
            valid = fs::exists(vp) ? load_mask(vp) : Mask({shape.frames - g, shape.height, shape.width}, 1.0);
        } else {
            wc.source = FlowSource::Estimate;
            EstimatedFlow est = estimate_flow(result.video, wc);
            flow = std::move(est.flow);
            valid = std::move(est.valid);
        }
        result.warping.emplace_back(g, sequence_warping_error(result.video, flow, valid, wc).mean);
    }

    for (std::size_t i = 0; i < n; ++i) {
        Mask visible = result.edit.placed_masks[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto occ = result.edit.placed_masks[j].data();
            auto v = visible.data();
            for (std::size_t k = 0; k < v.size(); ++k) {
                v[k] *= 1.0 - occ[k];
            }
        }
        const VideoTensor placed = affine_apply(inputs.objects[i], inputs.transforms[i], shape.height, shape.width);
        result.object_psnr.push_back(masked_psnr(result.video, placed, visible));
        result.cut_paste_psnr.push_back(masked_psnr(result.cut_paste, placed, visible));
    }
    return result;
}

namespace {

ojson optional_number(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) {
        return nullptr;
    }
    return *v;
}

}  // namespace

CompositionResult run_job(const CompositionJob& job, const fs::path& out_dir) {
    const JobInputs inputs = load_inputs(job);
    const PipelineModel model = build_model(job);
    make_dirs(out_dir / "frames");
    const fs::path cache_dir = out_dir / "cache";
    preprocess_objects(inputs, model, &cache_dir);
    const auto caches = load_object_caches(cache_dir, inputs.objects.size(), model.plan);
    CompositionResult r = compose_video(job, inputs, model, caches);

    save_video(out_dir / "video.vten", r.video);
    save_video(out_dir / "cut_paste.vten", r.cut_paste);
    const bool color = r.video.shape().channels >= 3;
    write_frame_preview(out_dir / (color ? "first_frame.ppm" : "first_frame.pgm"), r.edit.frame, 0);
    for (std::size_t f = 0; f < r.video.shape().frames; ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.%s", f, color ? "ppm" : "pgm");
        write_frame_preview(out_dir / "frames" / name, r.video, f);
    }
    ojson m;
    m["flow_source"] = job.flow_dir ? "ground_truth" : "estimate";
    for (const auto& [g, e] : r.warping) {
        m["warping_error"]["g" + std::to_string(g)] = e;
    }
    m["object_psnr"] = ojson::array();
    for (const auto& p : r.object_psnr) {
        m["object_psnr"].push_back(optional_number(p));
    }
    m["cut_paste_psnr"] = ojson::array();
    for (const auto& p : r.cut_paste_psnr) {
        m["cut_paste_psnr"].push_back(optional_number(p));
    }
    write_text(out_dir / "metrics.json", m.dump(2));
    InjectionSchedule sched = job.injection;
    sched.n_steps = model.plan.size();
    write_text(out_dir / "injection_report.json", injection_report_json(sched, r.injection));
    write_text(out_dir / "job.json", job_to_json(job));
    return r;
}

RunConfig run_config_from_json(const std::string& text, const fs::path& base_dir) {
    RunConfig cfg = config_guard("run json", [&] {
        const json j = json::parse(text);
        RunConfig out;
        out.schedule = schedule_of(j);
        out.steps = j.value("steps", out.steps);
        out.denoiser = denoiser_of(j, base_dir, j.value("seed", std::uint64_t{0}));
        for (const auto& c : j.value("condition", json::array())) {
            out.condition.push_back(c.is_string() ? c.get<std::string>() : std::to_string(c.get<long>()));
        }
        return out;
    });
    if (cfg.steps < 1 || cfg.steps > cfg.schedule.T) {
        throw Error(ErrorKind::Config, "steps must lie in [1, T]");
    }
    if (cfg.denoiser.backend == "empirical" && cfg.denoiser.dataset.empty()) {
        throw Error(ErrorKind::Config, "the empirical backend needs denoiser.dataset");
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    return run_config_from_json(read_text(path), path.parent_path());
}

LatentCache invert_video(const VideoTensor& video, const RunConfig& cfg) {
    const NoiseSchedule s = cfg.schedule.build();
    const TimestepPlan plan = uniform_plan(cfg.schedule.T, cfg.steps);
    if (cfg.denoiser.backend == "empirical") {
        const Dataset data = Dataset::load(cfg.denoiser.dataset);
        const ConditionSet cond(cfg.condition.begin(), cfg.condition.end());
        const EpsFn fn = [&](const VideoTensor& x, int t, int) { return eps_empirical(x, t, data, s, cond); };
        return invert_loop(video, plan, fn, s);
    }
    std::vector<int> cond;
    for (const auto& c : cfg.condition) {
        try {
            cond.push_back(std::stoi(c));
        } catch (const std::exception&) {
            throw Error(ErrorKind::Config, "unet condition '" + c + "' is not a channel index");
        }
    }
    const MiniUNet unet(cfg.denoiser.unet);
    unet.check_input(video.shape());
    const EpsFn fn = [&](const VideoTensor& x, int t, int) { return unet.forward(x, t, cond, s).eps; };
    return invert_loop(video, plan, fn, s);
}

void write_demo_job(const fs::path& dir, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    auto j = [&](double scale) { return scale * jitter(gen); };

    SceneSpec bg;
    bg.seed = seed;
    bg.background.kind = BackgroundKind::Texture;
    bg.background.color = {0.35 + j(0.05), 0.55 + j(0.05), 0.4 + j(0.05)};
    bg.background.drift = {0.0, 0.25};

    ObjectSpec disc;
    disc.shape = ObjectShape::Disc;
    disc.size = 5.0;
    disc.color = {0.9 + j(0.05), 0.25 + j(0.05), 0.2 + j(0.05)};
    disc.trajectory.start = {11.0 + j(1.0), 9.0 + j(1.0)};
    disc.trajectory.velocity = {0.125, 0.5};
    disc.layer = 1;

    ObjectSpec square;
    square.shape = ObjectShape::Square;
    square.size = 4.0;
    square.color = {0.2 + j(0.05), 0.3 + j(0.05), 0.9 + j(0.05)};
    square.trajectory.kind = Trajectory::Kind::Sinusoidal;
    square.trajectory.start = {17.0 + j(1.0), 17.0 + j(1.0)};
    square.trajectory.amplitude = {1.5, 3.0};
    square.trajectory.period = 16.0;
    square.layer = 2;

    const GridPoint place[2] = {{2.0, 3.0}, {3.0, -1.0}};

    make_dirs(dir / "flows");
    save_video(dir / "background.vten", render_scene(bg).video);
    SceneSpec composite = bg;
    ojson job;
    job["background"] = {{"video", "background.vten"}};
    job["objects"] = ojson::array();
    const ObjectSpec objs[2] = {disc, square};
    for (std::size_t k = 0; k < 2; ++k) {
        SceneSpec s;
        s.seed = seed + k + 1;
        s.background.kind = BackgroundKind::Solid;
        s.background.color = {0.5};
        ObjectSpec o = objs[k];
        o.layer = 1;
        s.objects = {o};
        const RenderedScene r = render_scene(s);
        const std::string stem = "object_" + std::to_string(k + 1);
        save_video(dir / (stem + ".vten"), r.video);
        save_mask(dir / (stem + "_mask.vten"), r.masks[0]);
        ObjectSpec placed = objs[k];
        placed.trajectory.start.y += place[k].y;
        placed.trajectory.start.x += place[k].x;
        composite.objects.push_back(placed);
        job["objects"].push_back({{"video", stem + ".vten"},
                                  {"mask", stem + "_mask.vten"},
                                  {"transform", {{"translate", {place[k].y, place[k].x}}}},
                                  {"layer", objs[k].layer}});
    }
    for (std::size_t g : {2u, 4u}) {
        const SceneFlow fl = ground_truth_flow(composite, g);
        save_flow(dir / "flows" / ("flow_g" + std::to_string(g) + ".vten"), fl.global);
        save_mask(dir / "flows" / ("valid_g" + std::to_string(g) + ".vten"), fl.valid);
    }
    write_text(dir / "composite_scene.json", scene_to_json(composite));
    job["schedule"] = schedule_json({});
    job["steps"] = 50;
    job["guidance_w"] = {1.0, 1.0};
    job["injection"] = {{"r_fn", 0.02}, {"r_fr", 0.1}, {"r_at", 1.0}, {"r_as", 1.0}};
    job["denoiser"] = {{"backend", "unet"}, {"seed", seed}};
    job["flow_dir"] = "flows";
    job["seed"] = seed;
    write_text(dir / "job.json", job.dump(2));
}

}  // namespace mvoc
