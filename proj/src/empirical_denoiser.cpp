// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/empirical_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "mvoc/error.hpp"
#include "mvoc/vten.hpp"

namespace mvoc {

void Dataset::add(VideoTensor sample, std::set<std::string> labels) {
    if (!samples_.empty() && sample.shape() != samples_.front().shape()) {
        throw Error(ErrorKind::Shape, "dataset samples must share dims: " + sample.shape().str() + " vs " +
                                          samples_.front().shape().str());
    }
    samples_.push_back(std::move(sample));
    labels_.push_back(std::move(labels));
}

const Shape4& Dataset::shape() const {
    if (samples_.empty()) {
        throw Error(ErrorKind::Parameter, "empty dataset has no shape");
    }
    return samples_.front().shape();
}

bool Dataset::matches(std::size_t k, const ConditionSet& cond) const {
    const auto& l = labels_.at(k);
    return std::all_of(cond.begin(), cond.end(), [&](const std::string& id) { return l.count(id) != 0; });
}

std::vector<std::size_t> Dataset::subset(const ConditionSet& cond) const {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        if (matches(k, cond)) {
            idx.push_back(k);
        }
    }
    if (idx.empty()) {
        std::string ids;
        for (const auto& c : cond) {
            ids += (ids.empty() ? "" : ",") + c;
        }
        throw Error(ErrorKind::UnknownCondition, "no dataset sample matches {" + ids + "}");
    }
    return idx;
}

void Dataset::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["samples"] = nlohmann::json::array();
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const std::string file = "sample_" + std::to_string(k) + ".vten";
        save_video(dir / file, samples_[k]);
        j["samples"].push_back({{"file", file}, {"labels", labels_[k]}});
    }
    std::ofstream os(dir / "labels.json");
    if (!os) {
        throw Error(ErrorKind::Io, "cannot write " + (dir / "labels.json").string());
    }
    os << j.dump(2) << '\n';
}

Dataset Dataset::load(const std::filesystem::path& dir) {
    std::ifstream is(dir / "labels.json");
    if (!is) {
        throw Error(ErrorKind::Io, "cannot open " + (dir / "labels.json").string());
    }
    Dataset data;
    try {
        const auto j = nlohmann::json::parse(is);
        for (const auto& entry : j.at("samples")) {
            data.add(load_video(dir / entry.at("file").get<std::string>()),
                     entry.value("labels", std::set<std::string>{}));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, "labels.json: " + std::string(e.what()));
    }
    return data;
}

std::vector<double> posterior_weights(const VideoTensor& xt, int t, const Dataset& data, const NoiseSchedule& s,
                                      const std::vector<std::size_t>& subset) {
    if (t < 1) {
        throw Error(ErrorKind::Range, "posterior needs t >= 1");
    }
    if (xt.shape() != data.shape()) {
        throw Error(ErrorKind::Shape, "x_t " + xt.shape().str() + " vs dataset " + data.shape().str());
    }
    const double ab = s.alpha_bar(t);
    const double root = std::sqrt(ab);
    const double denom = 2.0 * (1.0 - ab);
    std::vector<double> logw(subset.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const auto d = data.sample(subset[i]).data();
        double dist = 0.0;
        for (std::size_t p = 0; p < d.size(); ++p) {
            const double r = xt.data()[p] - root * d[p];
            dist += r * r;
        }
        logw[i] = -dist / denom;
        best = std::max(best, logw[i]);
    }
    double total = 0.0;
    for (double& lw : logw) {
        lw = std::exp(lw - best);
        total += lw;
    }
    for (double& lw : logw) {
        lw /= total;
    }
    return logw;
}

VideoTensor posterior_mean(const VideoTensor& xt, int t, const Dataset& data, const NoiseSchedule& s,
                           const ConditionSet& cond) {
    const auto idx = data.subset(cond);
    const auto w = posterior_weights(xt, t, data, s, idx);
    VideoTensor mean(xt.shape());
    auto m = mean.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (w[i] == 0.0) {
            continue;
        }
        const auto d = data.sample(idx[i]).data();
        for (std::size_t p = 0; p < m.size(); ++p) {
            m[p] += w[i] * d[p];
        }
    }
    return mean;
}

VideoTensor eps_empirical(const VideoTensor& xt, int t, const Dataset& data, const NoiseSchedule& s,
                          const ConditionSet& cond) {
    const VideoTensor mean = posterior_mean(xt, t, data, s, cond);
    const double ab = s.alpha_bar(t);
    const double inv = 1.0 / std::sqrt(1.0 - ab);
    return lincomb(inv, xt, -std::sqrt(ab) * inv, mean);
}

VideoTensor score_from_eps(const VideoTensor& eps, int t, const NoiseSchedule& s) {
    const double ab = s.alpha_bar(t);
    if (t < 1) {
        throw Error(ErrorKind::Range, "score undefined at t = 0");
    }
    return eps * (-1.0 / std::sqrt(1.0 - ab));
}

}  // namespace mvoc
