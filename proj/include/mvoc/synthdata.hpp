// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvoc/affine.hpp"
#include "mvoc/empirical_denoiser.hpp"
#include "mvoc/tensor.hpp"

namespace mvoc {

enum class ObjectShape { Disc, Square, Triangle };
enum class BackgroundKind { Solid, Gradient, Texture };

struct BackgroundSpec {
    BackgroundKind kind = BackgroundKind::Solid;
    /// Per-channel color (a single value broadcasts). Gradient runs color -> color2
    /// from the top-left to the bottom-right corner.
    std::vector<double> color{0.2};
    std::vector<double> color2{0.8};
    /// Pixels per frame the whole background pattern moves by.
    GridPoint drift{};
};

struct Trajectory {
    enum class Kind { Linear, Sinusoidal };
    Kind kind = Kind::Linear;
    /// Linear: start + velocity * f. Sinusoidal: start + amplitude * sin(2 pi f / period + phase).
    GridPoint start{};
    GridPoint velocity{};
    GridPoint amplitude{};
    double period = 16.0;
    double phase = 0.0;

    GridPoint center(double frame) const noexcept;
};

struct ObjectSpec {
    ObjectShape shape = ObjectShape::Disc;
    /// Radius (disc), half side (square) or circumradius (triangle), in pixels.
    double size = 4.0;
    std::vector<double> color{1.0};
    Trajectory trajectory;
    /// Larger is nearer the camera; unique within a scene.
    int layer = 1;
};

struct SceneSpec {
    std::size_t frames = 16;
    std::size_t channels = 3;
    std::size_t height = 32;
    std::size_t width = 32;
    BackgroundSpec background;
    std::vector<ObjectSpec> objects;
    std::uint64_t seed = 0;

    /// Throws Spec on bad dims, colors, duplicate layers or centers leaving the canvas.
    void validate() const;
};

SceneSpec scene_from_json(const std::string& text);
std::string scene_to_json(const SceneSpec& spec);
SceneSpec load_scene(const std::filesystem::path& path);

struct RenderedScene {
    VideoTensor video;
    /// Per object, in spec order: pixels it owns (largest visible coverage, at
    /// least half, ties to the nearer layer). Masks never overlap.
    std::vector<Mask> masks;
};

/// 4x4 supersampled rasterization, quantized to float32.
RenderedScene render_scene(const SceneSpec& spec);

struct SceneFlow {
    /// Displacement of the visible surface at each pixel from t to t + G.
    FlowField global;
    /// Per object: its displacement inside its visible mask at t, zero elsewhere.
    std::vector<FlowField> objects;
    /// 1 where the surface visible at p in frame t is still visible at p + flow in frame t + G.
    Mask valid;
};

SceneFlow ground_truth_flow(const SceneSpec& spec, std::size_t interval);

/// One sample per spec, labeled with the matching label set.
Dataset build_dataset(std::span<const SceneSpec> specs, std::span<const std::vector<std::string>> labels);

/// 8-bit previews: values clamped to [0,1] then scaled. PGM for one channel, PPM for three.
void write_frame_preview(const std::filesystem::path& path, const VideoTensor& video, std::size_t frame);
void write_mask_preview(const std::filesystem::path& path, const Mask& mask, std::size_t frame);

/// video.vten, mask_<k>.vten, flow_g<G>.vten / valid_g<G>.vten for G in {2, 4}
/// (when the clip is long enough), scene.json and previews/.
void write_scene(const std::filesystem::path& dir, const SceneSpec& spec);

}  // namespace mvoc
