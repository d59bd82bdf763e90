// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <memory>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvoc/schedule.hpp"
#include "mvoc/tensor.hpp"

namespace mvoc {

struct UNetConfig {
    std::size_t in_channels = 3;
    /// Pixel-unshuffle factor of the stem (the latent grid is H/patch x W/patch).
    std::size_t patch = 2;
    /// One-hot condition channels broadcast into the stem.
    std::size_t cond_channels = 4;
    /// widths[0] > in_channels * patch^2 (the content lane), widths[1] >= it.
    std::array<std::size_t, 2> widths{16, 32};
    std::size_t time_dim = 16;
    std::uint64_t seed = 0;
    double init_scale = 0.02;
    /// Output head scale; eps is this small perturbation plus the lane residual.
    double head_scale = 1e-3;

    bool operator==(const UNetConfig&) const = default;
};

/// Post-softmax attention: `batch` independent row-stochastic matrices of
/// queries x keys, stored row-major. Spatial maps batch over frames with
/// tokens on a grid_h x grid_w grid; temporal maps batch over grid positions
/// with frame tokens.
struct AttentionMap {
    enum class Kind { Spatial, Temporal };

    Kind kind = Kind::Spatial;
    std::size_t batch = 0;
    std::size_t tokens = 0;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
    std::vector<float> data;

    std::span<float> row(std::size_t b, std::size_t q) { return {data.data() + (b * tokens + q) * tokens, tokens}; }
    std::span<const float> row(std::size_t b, std::size_t q) const {
        return {data.data() + (b * tokens + q) * tokens, tokens};
    }
    bool same_geometry(const AttentionMap& o) const noexcept {
        return kind == o.kind && batch == o.batch && tokens == o.tokens && grid_h == o.grid_h && grid_w == o.grid_w;
    }
    bool operator==(const AttentionMap&) const = default;
};

/// Every injection site of one forward pass.
///   feature_in  F_n: stem output, before the UNet body
///   residual    F_r: outputs of the residual blocks (down1, down2, mid, up2, up1)
///   spatial     A_s: spatial self-attention maps (down1, down2, up2, up1)
///   temporal    A_t: temporal self-attention maps (same sites)
struct UNetTapSet {
    VideoTensor feature_in;
    std::vector<VideoTensor> residual;
    std::vector<AttentionMap> spatial;
    std::vector<AttentionMap> temporal;

    bool operator==(const UNetTapSet&) const = default;
};

/// Replacement values for a forward pass; absent entries are computed normally.
struct TapOverrides {
    std::optional<VideoTensor> feature_in;
    std::vector<std::optional<VideoTensor>> residual;
    std::vector<std::optional<AttentionMap>> spatial;
    std::vector<std::optional<AttentionMap>> temporal;

    bool empty() const noexcept;
    /// Overrides every site with the given taps.
    static TapOverrides all_of(const UNetTapSet& taps);
};

struct UNetOutput {
    VideoTensor eps;
    UNetTapSet taps;
};

/// Deterministic mini video UNet with seeded, never-trained weights:
///
///   stem (unshuffle + 3x3 conv)                               -> F_n
///   down1: res(w0) -> spatial attn -> temporal attn           (latent grid)
///   down2: pool -> res(w0->w1) -> spatial attn -> temporal attn
///   mid:   res(w1)
///   up2:   res([skip2, mid] -> w1) -> spatial attn -> temporal attn -> upsample
///   up1:   res([skip1, up] -> w0) -> spatial attn -> temporal attn
///   head:  eps = (x_t - lane) / sqrt(1 - abar_t) - conv(up1)
///
/// The leading in_channels * patch^2 channels form a content lane: the stem
/// writes the unshuffled x_t there and no residual or attention update touches
/// it, so without overrides the lane term vanishes and eps is the small head
/// output. Feature injection that rewrites the lane moves the implied x0
/// estimate toward the injected content.
class MiniUNet {
public:
    static constexpr std::size_t kResidualSites = 5;
    static constexpr std::size_t kAttentionSites = 4;

    explicit MiniUNet(UNetConfig config);
    ~MiniUNet();
    MiniUNet(MiniUNet&&) noexcept;
    MiniUNet& operator=(MiniUNet&&) noexcept;
    MiniUNet(const MiniUNet&) = delete;
    MiniUNet& operator=(const MiniUNet&) = delete;

    const UNetConfig& config() const noexcept { return config_; }

    /// `cond` lists condition channels in [0, cond_channels), multi-hot
    /// encoded; empty is the null condition.
    UNetOutput forward(const VideoTensor& xt, int t, std::span<const int> cond, const NoiseSchedule& s,
                       const TapOverrides* overrides = nullptr, bool record = false) const;

    /// Throws Shape when the video cannot be fed to this network.
    void check_input(const Shape4& shape) const;

private:
    struct Weights;

    UNetConfig config_;
    std::unique_ptr<Weights> weights_;
};

}  // namespace mvoc
