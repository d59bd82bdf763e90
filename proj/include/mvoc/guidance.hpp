// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "mvoc/tensor.hpp"

namespace mvoc {

/// Dependency strengths w_1..w_N with the implicit w_0 = 1 and w_{N+1} = 0.
/// omega_i = w_i - w_{i+1} for i = 0..N is kept in sync with w.
class GuidanceWeights {
public:
    GuidanceWeights() : omega_{1.0} {}
    explicit GuidanceWeights(std::vector<double> w);

    /// Uniform weights of the given value.
    static GuidanceWeights uniform(std::size_t n, double value = 1.0);

    std::size_t count() const noexcept { return w_.size(); }
    const std::vector<double>& w() const noexcept { return w_; }
    /// w_i for i in [0, N+1].
    double w_at(std::size_t i) const;
    const std::vector<double>& omega() const noexcept { return omega_; }

    void set(std::size_t i, double value);

private:
    void refresh();

    std::vector<double> w_;
    std::vector<double> omega_;
};

/// omega_i = w_i - w_{i+1}, i = 0..N. Sums to 1 by telescoping.
std::vector<double> weights_to_omega(const GuidanceWeights& w);

/// eps_0 + sum_i w_i (eps_i - eps_{i-1}); terms[i] is conditioned on the first i objects.
VideoTensor compose_eps_chained(std::span<const VideoTensor> eps_terms, const GuidanceWeights& w);

/// eps_0 + sum_i w_i (eps(.|y_i) - eps_0) for independent objects.
VideoTensor compose_eps_independent(const VideoTensor& eps_uncond, std::span<const VideoTensor> eps_single,
                                    const GuidanceWeights& w);

/// Classifier-free guidance eps_0 + w (eps_c - eps_0).
VideoTensor cfg(const VideoTensor& eps_uncond, const VideoTensor& eps_cond, double w);

/// sum_i omega_i eps_i. Negative omegas are allowed.
VideoTensor compose_eps_omega(std::span<const VideoTensor> eps_terms, std::span<const double> omega);

}  // namespace mvoc
