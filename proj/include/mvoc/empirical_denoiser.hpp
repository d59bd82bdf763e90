// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mvoc/schedule.hpp"
#include "mvoc/tensor.hpp"

namespace mvoc {

/// Ordered object ids y_1..y_i; empty is the null condition.
using ConditionSet = std::vector<std::string>;

/// Support set of the closed-form denoiser: clean samples with label sets.
class Dataset {
public:
    Dataset() = default;

    void add(VideoTensor sample, std::set<std::string> labels);

    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const Shape4& shape() const;
    const VideoTensor& sample(std::size_t k) const { return samples_.at(k); }
    const std::set<std::string>& labels(std::size_t k) const { return labels_.at(k); }

    /// A sample matches when it carries every id of the condition.
    bool matches(std::size_t k, const ConditionSet& cond) const;
    /// Indices of matching samples; throws UnknownCondition when none match.
    std::vector<std::size_t> subset(const ConditionSet& cond) const;

    /// Directory of .vten files plus a labels.json sidecar.
    void save(const std::filesystem::path& dir) const;
    static Dataset load(const std::filesystem::path& dir);

private:
    std::vector<VideoTensor> samples_;
    std::vector<std::set<std::string>> labels_;
};

/// Posterior weights over the matching subset (stable shifted softmax).
std::vector<double> posterior_weights(const VideoTensor& xt, int t, const Dataset& data, const NoiseSchedule& s,
                                      const std::vector<std::size_t>& subset);

/// E[x0 | x_t] under the Gaussian forward marginal with an empirical prior.
VideoTensor posterior_mean(const VideoTensor& xt, int t, const Dataset& data, const NoiseSchedule& s,
                           const ConditionSet& cond = {});

/// (x_t - sqrt(abar_t) E[x0|x_t]) / sqrt(1 - abar_t).
VideoTensor eps_empirical(const VideoTensor& xt, int t, const Dataset& data, const NoiseSchedule& s,
                          const ConditionSet& cond = {});

/// grad log p(x_t) = -eps / sqrt(1 - abar_t).
VideoTensor score_from_eps(const VideoTensor& eps, int t, const NoiseSchedule& s);

}  // namespace mvoc
