// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/guidance.hpp"

#include <cmath>
#include <string>

#include "mvoc/error.hpp"

namespace mvoc {

namespace {

void require_terms(std::span<const VideoTensor> terms, std::size_t expected, const char* what) {
    if (terms.size() != expected) {
        throw Error(ErrorKind::Arity, std::string(what) + ": expected " + std::to_string(expected) + " terms, got " +
                                          std::to_string(terms.size()));
    }
    for (const auto& t : terms) {
        require_same_shape(terms.front(), t, what);
    }
}

}  // namespace

GuidanceWeights::GuidanceWeights(std::vector<double> w) : w_(std::move(w)) {
    for (double v : w_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Parameter, "guidance weights must be finite");
        }
    }
    refresh();
}

GuidanceWeights GuidanceWeights::uniform(std::size_t n, double value) {
    return GuidanceWeights(std::vector<double>(n, value));
}

double GuidanceWeights::w_at(std::size_t i) const {
    if (i == 0) {
        return 1.0;
    }
    if (i == w_.size() + 1) {
        return 0.0;
    }
    if (i > w_.size() + 1) {
        throw Error(ErrorKind::Range, "guidance weight index out of range");
    }
    return w_[i - 1];
}

void GuidanceWeights::set(std::size_t i, double value) {
    if (i < 1 || i > w_.size()) {
        throw Error(ErrorKind::Range, "only w_1..w_N are settable");
    }
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::Parameter, "guidance weights must be finite");
    }
    w_[i - 1] = value;
    refresh();
}

void GuidanceWeights::refresh() {
    omega_.resize(w_.size() + 1);
    for (std::size_t i = 0; i <= w_.size(); ++i) {
        omega_[i] = w_at(i) - w_at(i + 1);
    }
}

std::vector<double> weights_to_omega(const GuidanceWeights& w) { return w.omega(); }

VideoTensor compose_eps_chained(std::span<const VideoTensor> eps_terms, const GuidanceWeights& w) {
    require_terms(eps_terms, w.count() + 1, "compose_eps_chained");
    VideoTensor out = eps_terms[0];
    auto o = out.data();
    for (std::size_t i = 1; i < eps_terms.size(); ++i) {
        const double wi = w.w()[i - 1];
        auto cur = eps_terms[i].data();
        auto prev = eps_terms[i - 1].data();
        for (std::size_t k = 0; k < o.size(); ++k) {
            o[k] += wi * (cur[k] - prev[k]);
        }
    }
    return out;
}

VideoTensor compose_eps_independent(const VideoTensor& eps_uncond, std::span<const VideoTensor> eps_single,
                                    const GuidanceWeights& w) {
    if (eps_single.size() != w.count()) {
        throw Error(ErrorKind::Arity, "compose_eps_independent: " + std::to_string(eps_single.size()) +
                                          " terms for " + std::to_string(w.count()) + " weights");
    }
    VideoTensor out = eps_uncond;
    auto o = out.data();
    auto base = eps_uncond.data();
    for (std::size_t i = 0; i < eps_single.size(); ++i) {
        require_same_shape(eps_uncond, eps_single[i], "compose_eps_independent");
        const double wi = w.w()[i];
        auto cur = eps_single[i].data();
        for (std::size_t k = 0; k < o.size(); ++k) {
            o[k] += wi * (cur[k] - base[k]);
        }
    }
    return out;
}

VideoTensor cfg(const VideoTensor& eps_uncond, const VideoTensor& eps_cond, double w) {
    require_same_shape(eps_uncond, eps_cond, "cfg");
    VideoTensor out = eps_uncond;
    auto o = out.data();
    auto c = eps_cond.data();
    auto u = eps_uncond.data();
    for (std::size_t k = 0; k < o.size(); ++k) {
        o[k] = u[k] + w * (c[k] - u[k]);
    }
    return out;
}

VideoTensor compose_eps_omega(std::span<const VideoTensor> eps_terms, std::span<const double> omega) {
    require_terms(eps_terms, omega.size(), "compose_eps_omega");
    if (eps_terms.empty()) {
        throw Error(ErrorKind::Arity, "compose_eps_omega: no terms");
    }
    VideoTensor out(eps_terms[0].shape());
    auto o = out.data();
    for (std::size_t i = 0; i < eps_terms.size(); ++i) {
        if (omega[i] == 0.0) {
            continue;
        }
        auto e = eps_terms[i].data();
        for (std::size_t k = 0; k < o.size(); ++k) {
            o[k] += omega[i] * e[k];
        }
    }
    return out;
}

}  // namespace mvoc
