// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "mvoc/schedule.hpp"
#include "mvoc/tensor.hpp"

namespace mvoc {

/// Strictly decreasing sampling timesteps drawn from [1, T]. Sampling walks
/// steps[0] -> steps[1] -> ... -> steps.back() -> 0.
class TimestepPlan {
public:
    explicit TimestepPlan(std::vector<int> steps);

    const std::vector<int>& steps() const noexcept { return steps_; }
    int size() const noexcept { return static_cast<int>(steps_.size()); }
    int first() const noexcept { return steps_.front(); }
    /// Timestep reached after 1-based step `index`; 0 after the last one.
    int next(int index) const;
    /// Timestep at which 1-based step `index` starts.
    int at(int index) const;
    void check_within(const NoiseSchedule& s) const;

private:
    std::vector<int> steps_;
};

/// n evenly strided timesteps: T, T - T/n, ..., T/n (rounded).
TimestepPlan uniform_plan(int total_steps, int n_steps);

/// eps prediction for latent x at timestep t. `step_index` is the 1-based
/// sampling step (counted from the noisiest end) the evaluation belongs to.
using EpsFn = std::function<VideoTensor(const VideoTensor& x, int t, int step_index)>;

/// Deterministic DDIM update (sigma = 0).
VideoTensor ddim_step(const VideoTensor& xt, int t, int t_prev, const VideoTensor& eps_pred, const NoiseSchedule& s);
/// General DDIM update with a noise term scaled by sigma_t.
VideoTensor ddim_step(const VideoTensor& xt, int t, int t_prev, const VideoTensor& eps_pred, const NoiseSchedule& s,
                      double sigma_t, const VideoTensor& noise);

/// Clean-data estimate (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t).
VideoTensor predict_x0(const VideoTensor& xt, int t, const VideoTensor& eps_pred, const NoiseSchedule& s);

/// DDIM inversion x_{t_prev} -> x_t with a fixed eps.
VideoTensor ddim_invert_step(const VideoTensor& x_prev, int t_prev, int t, const VideoTensor& eps_pred,
                             const NoiseSchedule& s);
/// Adjacent-timestep form, t_prev = t - 1.
VideoTensor ddim_invert_step(const VideoTensor& x_prev, int t, const VideoTensor& eps_pred, const NoiseSchedule& s);

struct SampleResult {
    VideoTensor x0;
    /// x_{steps[0]}, ..., x_{steps.back()}, x_0 when recorded.
    std::vector<VideoTensor> trajectory;
};

SampleResult sample_loop(const VideoTensor& x_T, const TimestepPlan& plan, const EpsFn& eps_fn, const NoiseSchedule& s,
                         bool record_trajectory = true);

/// Inverted latents keyed by plan timestep.
class LatentCache {
public:
    void put(int t, VideoTensor latent);
    /// Throws CacheMiss.
    const VideoTensor& at(int t) const;
    bool contains(int t) const noexcept { return latents_.count(t) != 0; }
    std::size_t size() const noexcept { return latents_.size(); }
    const std::map<int, VideoTensor>& entries() const noexcept { return latents_; }
    /// Latent at the noisiest cached timestep.
    const VideoTensor& noisiest() const;

    /// Writes y{object}_t{timestep}.vten files.
    void save(const std::filesystem::path& dir, int object) const;
    /// Loads every plan timestep; a missing file raises CacheMiss.
    static LatentCache load(const std::filesystem::path& dir, int object, const TimestepPlan& plan);
    static std::filesystem::path file_name(int object, int t);

private:
    std::map<int, VideoTensor> latents_;
};

/// DDIM inversion along the mirrored plan. The eps for the step
/// t_prev -> t is evaluated at (x_{t_prev}, t_prev); at t_prev = 0 it falls
/// back to (x_0, t).
LatentCache invert_loop(const VideoTensor& x0, const TimestepPlan& plan, const EpsFn& eps_fn, const NoiseSchedule& s);

}  // namespace mvoc
