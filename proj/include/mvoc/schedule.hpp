// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mvoc/tensor.hpp"

namespace mvoc {

/// Per-timestep coefficients of the forward/reverse processes. Timesteps are
/// 1-based; t = 0 denotes clean data with alpha_bar(0) = 1.
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    int steps() const noexcept { return static_cast<int>(beta_.size()) - 1; }
    double beta_start() const noexcept { return beta_start_; }
    double beta_end() const noexcept { return beta_end_; }

    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;
    double sigma(int t) const;

    /// sigma defaults to 0 everywhere (deterministic DDIM regime).
    NoiseSchedule with_sigma(std::vector<double> sigma_1_to_T) const;

    bool operator==(const NoiseSchedule&) const = default;

private:
    friend NoiseSchedule build_schedule(int, double, double);
    void check(int t, int lo) const;

    double beta_start_ = 0.0;
    double beta_end_ = 0.0;
    // index 0 holds the t = 0 convention values
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    std::vector<double> sigma_;
};

/// Linear beta from beta_start to beta_end over T steps.
NoiseSchedule build_schedule(int steps, double beta_start, double beta_end);
NoiseSchedule default_schedule();

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise. t = 0 returns x0.
VideoTensor forward_marginal(const VideoTensor& x0, int t, const VideoTensor& noise, const NoiseSchedule& s);

/// Stochastic reverse step; the noise term is scaled by sigma(t).
VideoTensor ddpm_step(const VideoTensor& xt, int t, const VideoTensor& eps_pred, const VideoTensor& noise,
                      const NoiseSchedule& s);

}  // namespace mvoc
