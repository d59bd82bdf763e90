// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mvoc/tensor.hpp"

namespace mvoc {

enum class FlowSource { GroundTruth, Estimate };

struct WarpMetricConfig {
    /// Interval G between compared frames.
    std::size_t interval = 2;
    /// Forward-backward residual (pixels) above which a pixel counts as occluded.
    double occlusion_threshold = 1.0;
    /// Mean squared 3x3 patch difference above which an estimated match counts as occluded.
    double match_residual = 0.01;
    FlowSource source = FlowSource::GroundTruth;

    /// Throws Parameter unless 1 <= interval < frames and the threshold is positive.
    void validate(std::size_t frames) const;
};

struct WarpedFrame {
    VideoTensor image;  // 1 x C x H x W
    Mask in_bounds;     // 1 x H x W, zero where the sample left the grid
};

/// Frame f of a video as a 1 x C x H x W tensor.
VideoTensor frame_slice(const VideoTensor& video, std::size_t f);
/// Pair p of a flow field as a 1 x 2 x H x W tensor.
VideoTensor flow_slice(const FlowField& flow, std::size_t p);

/// Backward warp: out(p) = frame(p + flow(p)), bilinear. Samples outside the
/// grid are zero and flagged in `in_bounds`.
WarpedFrame warp_frame(const VideoTensor& frame, const VideoTensor& flow);

/// (1 / sum M) * sum M * ||v_t - warp(v_tg, flow)||^2, the squared norm summed
/// over channels. M is `mask` restricted to in-bounds samples. Throws
/// UndefinedMetric when that mask is empty.
double warping_error(const VideoTensor& v_t, const VideoTensor& v_tg, const VideoTensor& flow, const Mask& mask);

struct SequenceWarpResult {
    std::vector<double> per_pair;  // t = 1 .. F - G
    double mean = 0.0;
};

/// Averages warping_error over the F - G pairs (t, t + G). `masks` holds one
/// frame per pair.
SequenceWarpResult sequence_warping_error(const VideoTensor& video, const FlowField& flows, const Mask& masks,
                                          const WarpMetricConfig& cfg);

struct EstimatedFlow {
    FlowField flow;
    Mask valid;  // forward-backward consistent pixels
};

/// Integer block-matching flow from frame `from` to frame `to` (search radius
/// in pixels, 3x3 patches). One pair, shaped 1 x 2 x H x W.
/// `residual`, when given, receives the mean squared patch difference of each best match (1 x 1 x H x W).
VideoTensor block_match_flow(const VideoTensor& from, const VideoTensor& to, int radius,
                             VideoTensor* residual = nullptr);

/// Occlusion by forward-backward consistency: valid where
/// ||fw(p) + bw(p + fw(p))|| <= threshold and p + fw(p) stays in the grid.
Mask forward_backward_valid(const VideoTensor& fw, const VideoTensor& bw, double threshold);

/// Block-matching flow for every pair (t, t + G); valid where forward-backward
/// consistent and the forward match residual is at most cfg.match_residual.
EstimatedFlow estimate_flow(const VideoTensor& video, const WarpMetricConfig& cfg, int radius = 3);

/// "t,error" rows for each pair (1-based t) and a final "mean,<value>" row.
std::string warp_report_csv(const SequenceWarpResult& r);

}  // namespace mvoc
