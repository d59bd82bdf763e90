// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/sampler.hpp"

#include <cmath>
#include <string>

#include "mvoc/error.hpp"
#include "mvoc/vten.hpp"

namespace mvoc {

TimestepPlan::TimestepPlan(std::vector<int> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) {
        throw Error(ErrorKind::Parameter, "timestep plan needs at least one step");
    }
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i] < 1) {
            throw Error(ErrorKind::Parameter, "plan timesteps must be >= 1");
        }
        if (i > 0 && steps_[i] >= steps_[i - 1]) {
            throw Error(ErrorKind::Parameter, "plan timesteps must be strictly decreasing");
        }
    }
}

int TimestepPlan::at(int index) const {
    if (index < 1 || index > size()) {
        throw Error(ErrorKind::Range, "step index " + std::to_string(index) + " outside plan");
    }
    return steps_[static_cast<std::size_t>(index - 1)];
}

int TimestepPlan::next(int index) const {
    if (index < 1 || index > size()) {
        throw Error(ErrorKind::Range, "step index " + std::to_string(index) + " outside plan");
    }
    return index == size() ? 0 : steps_[static_cast<std::size_t>(index)];
}

void TimestepPlan::check_within(const NoiseSchedule& s) const {
    if (steps_.front() > s.steps()) {
        throw Error(ErrorKind::Range, "plan starts at " + std::to_string(steps_.front()) + " beyond T=" +
                                          std::to_string(s.steps()));
    }
}

TimestepPlan uniform_plan(int total_steps, int n_steps) {
    if (n_steps < 1 || n_steps > total_steps) {
        throw Error(ErrorKind::Parameter, "need 1 <= N_steps <= T");
    }
    std::vector<int> steps;
    steps.reserve(static_cast<std::size_t>(n_steps));
    for (int k = n_steps; k >= 1; --k) {
        steps.push_back(static_cast<int>(std::lround(static_cast<double>(k) * total_steps / n_steps)));
    }
    return TimestepPlan(std::move(steps));
}

VideoTensor predict_x0(const VideoTensor& xt, int t, const VideoTensor& eps_pred, const NoiseSchedule& s) {
    const double ab = s.alpha_bar(t);
    return lincomb(1.0 / std::sqrt(ab), xt, -std::sqrt(1.0 - ab) / std::sqrt(ab), eps_pred);
}

VideoTensor ddim_step(const VideoTensor& xt, int t, int t_prev, const VideoTensor& eps_pred, const NoiseSchedule& s,
                      double sigma_t, const VideoTensor& noise) {
    require_same_shape(xt, eps_pred, "ddim_step");
    if (!(t > t_prev && t_prev >= 0)) {
        throw Error(ErrorKind::Range, "ddim_step needs t > t_prev >= 0");
    }
    if (!(sigma_t >= 0.0)) {
        throw Error(ErrorKind::InvalidSigma, "sigma_t must be non-negative");
    }
    const double ab = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(t_prev);
    const double dir2 = 1.0 - ab_prev - sigma_t * sigma_t;
    if (dir2 < 0.0) {
        throw Error(ErrorKind::InvalidSigma, "1 - alpha_bar(t_prev) - sigma^2 < 0");
    }
    // x_prev = sqrt(ab_prev) * x0_hat + sqrt(dir2) * eps + sigma * noise
    const double c_x = std::sqrt(ab_prev) / std::sqrt(ab);
    const double c_eps = std::sqrt(dir2) - std::sqrt(ab_prev) * std::sqrt(1.0 - ab) / std::sqrt(ab);
    VideoTensor out = lincomb(c_x, xt, c_eps, eps_pred);
    if (sigma_t > 0.0) {
        require_same_shape(xt, noise, "ddim_step noise");
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.data()[i] += sigma_t * noise.data()[i];
        }
    }
    return out;
}

VideoTensor ddim_step(const VideoTensor& xt, int t, int t_prev, const VideoTensor& eps_pred, const NoiseSchedule& s) {
    return ddim_step(xt, t, t_prev, eps_pred, s, 0.0, VideoTensor{});
}

VideoTensor ddim_invert_step(const VideoTensor& x_prev, int t_prev, int t, const VideoTensor& eps_pred,
                             const NoiseSchedule& s) {
    require_same_shape(x_prev, eps_pred, "ddim_invert_step");
    if (!(t > t_prev && t_prev >= 0)) {
        throw Error(ErrorKind::Range, "ddim_invert_step needs t > t_prev >= 0");
    }
    const double ab = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(t_prev);
    const double c_x = std::sqrt(ab / ab_prev);
    const double c_eps = std::sqrt(ab) * (std::sqrt(1.0 / ab - 1.0) - std::sqrt(1.0 / ab_prev - 1.0));
    return lincomb(c_x, x_prev, c_eps, eps_pred);
}

VideoTensor ddim_invert_step(const VideoTensor& x_prev, int t, const VideoTensor& eps_pred, const NoiseSchedule& s) {
    return ddim_invert_step(x_prev, t - 1, t, eps_pred, s);
}

SampleResult sample_loop(const VideoTensor& x_T, const TimestepPlan& plan, const EpsFn& eps_fn, const NoiseSchedule& s,
                         bool record_trajectory) {
    plan.check_within(s);
    SampleResult result;
    VideoTensor x = x_T;
    if (record_trajectory) {
        result.trajectory.reserve(static_cast<std::size_t>(plan.size()) + 1);
        result.trajectory.push_back(x);
    }
    for (int k = 1; k <= plan.size(); ++k) {
        const int t = plan.at(k);
        const VideoTensor eps = eps_fn(x, t, k);
        require_same_shape(x, eps, "sample_loop eps");
        x = ddim_step(x, t, plan.next(k), eps, s);
        if (record_trajectory) {
            result.trajectory.push_back(x);
        }
    }
    result.x0 = std::move(x);
    return result;
}

void LatentCache::put(int t, VideoTensor latent) { latents_[t] = std::move(latent); }

const VideoTensor& LatentCache::at(int t) const {
    auto it = latents_.find(t);
    if (it == latents_.end()) {
        throw Error(ErrorKind::CacheMiss, "no cached latent at t=" + std::to_string(t));
    }
    return it->second;
}

const VideoTensor& LatentCache::noisiest() const {
    if (latents_.empty()) {
        throw Error(ErrorKind::CacheMiss, "latent cache is empty");
    }
    return latents_.rbegin()->second;
}

std::filesystem::path LatentCache::file_name(int object, int t) {
    return "y" + std::to_string(object) + "_t" + std::to_string(t) + ".vten";
}

void LatentCache::save(const std::filesystem::path& dir, int object) const {
    for (const auto& [t, latent] : latents_) {
        save_video(dir / file_name(object, t), latent);
    }
}

LatentCache LatentCache::load(const std::filesystem::path& dir, int object, const TimestepPlan& plan) {
    LatentCache cache;
    for (int t : plan.steps()) {
        const auto path = dir / file_name(object, t);
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorKind::CacheMiss, "missing " + path.string());
        }
        cache.put(t, load_video(path));
    }
    return cache;
}

LatentCache invert_loop(const VideoTensor& x0, const TimestepPlan& plan, const EpsFn& eps_fn, const NoiseSchedule& s) {
    plan.check_within(s);
    LatentCache cache;
    VideoTensor x = x0;
    int t_prev = 0;
    for (int k = plan.size(); k >= 1; --k) {
        const int t = plan.at(k);
        const VideoTensor eps = t_prev == 0 ? eps_fn(x, t, k) : eps_fn(x, t_prev, k);
        require_same_shape(x, eps, "invert_loop eps");
        x = ddim_invert_step(x, t_prev, t, eps, s);
        cache.put(t, x);
        t_prev = t;
    }
    return cache;
}

}  // namespace mvoc
