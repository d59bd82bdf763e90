// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvoc/affine.hpp"
#include "mvoc/injection.hpp"
#include "mvoc/sampler.hpp"
#include "mvoc/schedule.hpp"
#include "mvoc/tensor.hpp"
#include "mvoc/unet.hpp"

namespace mvoc {

struct ScheduleConfig {
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    NoiseSchedule build() const { return build_schedule(T, beta_start, beta_end); }
    bool operator==(const ScheduleConfig&) const = default;
};

struct DenoiserConfig {
    /// "unet" or "empirical".
    std::string backend = "unet";
    UNetConfig unet;
    /// Support set directory for the empirical backend.
    std::filesystem::path dataset;
};

struct ObjectInput {
    std::filesystem::path video;
    std::filesystem::path mask;
    /// Object pixel grid -> composite pixel grid.
    AffineTransform transform;
    /// Stacking order, >= 1; larger is nearer.
    int layer = 1;
};

struct CompositionJob {
    std::filesystem::path background;
    std::vector<ObjectInput> objects;
    ScheduleConfig schedule;
    int steps = 50;
    /// w_1..w_N; empty means all ones.
    std::vector<double> guidance_w;
    InjectionSchedule injection;
    DenoiserConfig denoiser;
    /// Holds flow_g<G>.vten and valid_g<G>.vten for the composite; estimated when absent.
    std::optional<std::filesystem::path> flow_dir;
    std::uint64_t seed = 0;

    /// Throws Config on inconsistent settings.
    void validate() const;
};

/// Relative paths resolve against `base_dir`. Unknown backends, bad
/// fractions and malformed transforms raise Config.
CompositionJob job_from_json(const std::string& text, const std::filesystem::path& base_dir);
std::string job_to_json(const CompositionJob& job);
CompositionJob load_job(const std::filesystem::path& path);

/// Transform JSON: {"matrix": [6 values]} or any of {"translate": [dy, dx],
/// "scale": s | [sy, sx], "rotate": radians, "center": [y, x]} applied as
/// translate o rotate(center) o scale.
AffineTransform transform_from_json(const std::string& text);

/// Job inputs read from disk, objects sorted by layer (farthest first).
struct JobInputs {
    VideoTensor background;
    std::vector<VideoTensor> objects;
    /// Binarized at 0.5, on each object's pixel grid.
    std::vector<Mask> masks;
    std::vector<AffineTransform> transforms;
};

JobInputs load_inputs(const CompositionJob& job);

/// Noise schedule, plan and mini-UNet of a job.
struct PipelineModel {
    NoiseSchedule schedule;
    TimestepPlan plan;
    MiniUNet unet;
};

PipelineModel build_model(const CompositionJob& job);

/// Stage 1: DDIM inversion of every object under its own condition channel.
/// Latents are float32-quantized so the in-memory cache equals the persisted one.
/// Caches are written to `cache_dir` when given.
std::vector<LatentCache> preprocess_objects(const JobInputs& inputs, const PipelineModel& model,
                                            const std::filesystem::path* cache_dir = nullptr);

std::vector<LatentCache> load_object_caches(const std::filesystem::path& cache_dir, std::size_t objects,
                                            const TimestepPlan& plan);

struct FirstFrameEdit {
    VideoTensor frame;  // 1 x C x H x W
    /// Per object, the per-channel offset moving its placed mean color onto the
    /// mean of the background it covers.
    std::vector<std::vector<double>> color_shift;
    /// Placed binary masks on the composite grid, per object.
    std::vector<Mask> placed_masks;
};

/// Cut-paste of the transformed, color-matched objects onto background frame 1.
FirstFrameEdit edit_first_frame(const JobInputs& inputs);

/// The same cut-paste (with the frame-1 color shifts) applied to every frame.
VideoTensor cut_paste_video(const JobInputs& inputs, const FirstFrameEdit& edit);

struct CompositionResult {
    VideoTensor video;
    VideoTensor cut_paste;
    FirstFrameEdit edit;
    /// interval -> sequence warping error.
    std::vector<std::pair<std::size_t, double>> warping;
    /// Per object: PSNR of the output against the placed source object on its visible placed mask.
    std::vector<std::optional<double>> object_psnr;
    /// Same measure for the cut-paste input.
    std::vector<std::optional<double>> cut_paste_psnr;
    std::vector<InjectionStepReport> injection;
};

/// Stage 2: x_T by inversion of the cut-paste video under the guided eps with
/// injection off, then guided sampling with the job's injection schedule.
CompositionResult compose_video(const CompositionJob& job, const JobInputs& inputs, const PipelineModel& model,
                                const std::vector<LatentCache>& caches);

/// PSNR (peak 1) over the masked pixels of every channel; nullopt for an empty mask.
std::optional<double> masked_psnr(const VideoTensor& a, const VideoTensor& b, const Mask& mask);

/// Stage 1 (caches under out_dir/cache, reloaded from disk) then stage 2,
/// writing video.vten, cut_paste.vten, first_frame and frame previews,
/// metrics.json, injection_report.json and job.json.
CompositionResult run_job(const CompositionJob& job, const std::filesystem::path& out_dir);

/// Settings of a single-video inversion (`mvoc invert`).
struct RunConfig {
    ScheduleConfig schedule;
    int steps = 50;
    DenoiserConfig denoiser;
    /// Condition ids: dataset labels (empirical) or channel indices (unet).
    std::vector<std::string> condition;
};

RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// DDIM inversion of one video with the configured backend.
LatentCache invert_video(const VideoTensor& video, const RunConfig& cfg);

/// Self-contained two-object demo: background, objects, masks, composite flows and job.json.
void write_demo_job(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace mvoc
