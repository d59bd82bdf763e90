// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/schedule.hpp"

#include <cmath>
#include <string>

#include "mvoc/error.hpp"

namespace mvoc {

void NoiseSchedule::check(int t, int lo) const {
    if (t < lo || t > steps()) {
        throw Error(ErrorKind::Range, "timestep " + std::to_string(t) + " outside [" + std::to_string(lo) + "," +
                                          std::to_string(steps()) + "]");
    }
}

double NoiseSchedule::beta(int t) const {
    check(t, 1);
    return beta_[t];
}

double NoiseSchedule::alpha(int t) const {
    check(t, 1);
    return alpha_[t];
}

double NoiseSchedule::alpha_bar(int t) const {
    check(t, 0);
    return alpha_bar_[t];
}

double NoiseSchedule::sigma(int t) const {
    check(t, 1);
    return sigma_[t];
}

NoiseSchedule NoiseSchedule::with_sigma(std::vector<double> sigma_1_to_T) const {
    if (sigma_1_to_T.size() != static_cast<std::size_t>(steps())) {
        throw Error(ErrorKind::Parameter, "sigma needs one value per timestep");
    }
    NoiseSchedule out = *this;
    for (std::size_t i = 0; i < sigma_1_to_T.size(); ++i) {
        if (!(sigma_1_to_T[i] >= 0.0) || !std::isfinite(sigma_1_to_T[i])) {
            throw Error(ErrorKind::Parameter, "sigma must be finite and non-negative");
        }
        out.sigma_[i + 1] = sigma_1_to_T[i];
    }
    return out;
}

NoiseSchedule build_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) {
        throw Error(ErrorKind::Parameter, "schedule needs T >= 1");
    }
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw Error(ErrorKind::Parameter, "need 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.beta_start_ = beta_start;
    s.beta_end_ = beta_end;
    const auto n = static_cast<std::size_t>(steps) + 1;
    s.beta_.assign(n, 0.0);
    s.alpha_.assign(n, 1.0);
    s.alpha_bar_.assign(n, 1.0);
    s.sigma_.assign(n, 0.0);
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
        s.beta_[t] = beta_start + frac * (beta_end - beta_start);
        s.alpha_[t] = 1.0 - s.beta_[t];
        s.alpha_bar_[t] = s.alpha_bar_[t - 1] * s.alpha_[t];
    }
    return s;
}

NoiseSchedule default_schedule() { return build_schedule(1000, 1e-4, 0.02); }

VideoTensor forward_marginal(const VideoTensor& x0, int t, const VideoTensor& noise, const NoiseSchedule& s) {
    require_same_shape(x0, noise, "forward_marginal");
    const double ab = s.alpha_bar(t);
    return lincomb(std::sqrt(ab), x0, std::sqrt(1.0 - ab), noise);
}

VideoTensor ddpm_step(const VideoTensor& xt, int t, const VideoTensor& eps_pred, const VideoTensor& noise,
                      const NoiseSchedule& s) {
    require_same_shape(xt, eps_pred, "ddpm_step");
    require_same_shape(xt, noise, "ddpm_step");
    const double a = s.alpha(t);
    const double ab = s.alpha_bar(t);
    const double sig = s.sigma(t);
    const double inv = 1.0 / std::sqrt(a);
    const double coef = (1.0 - a) / std::sqrt(1.0 - ab);
    VideoTensor out(xt.shape());
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = inv * (xt.data()[i] - coef * eps_pred.data()[i]);
        if (sig != 0.0) {
            o[i] += sig * noise.data()[i];
        }
    }
    return out;
}

}  // namespace mvoc
