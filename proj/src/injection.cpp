// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/injection.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "json.hpp"
#include "mvoc/blend.hpp"
#include "mvoc/error.hpp"
#include "mvoc/parallel.hpp"

namespace mvoc {

const char* category_name(TapCategory c) noexcept {
    switch (c) {
        case TapCategory::FeatureIn: return "F_n";
        case TapCategory::Residual: return "F_r";
        case TapCategory::TemporalAttention: return "A_t";
        case TapCategory::SpatialAttention: return "A_s";
    }
    return "?";
}

double InjectionSchedule::fraction(TapCategory c) const noexcept {
    switch (c) {
        case TapCategory::FeatureIn: return r_fn;
        case TapCategory::Residual: return r_fr;
        case TapCategory::TemporalAttention: return r_at;
        case TapCategory::SpatialAttention: return r_as;
    }
    return 0.0;
}

int InjectionSchedule::active_steps(TapCategory c) const noexcept {
    return static_cast<int>(std::lround(fraction(c) * n_steps));
}

void InjectionSchedule::validate() const {
    for (auto c : {TapCategory::FeatureIn, TapCategory::Residual, TapCategory::TemporalAttention,
                   TapCategory::SpatialAttention}) {
        const double r = fraction(c);
        if (!(r >= 0.0 && r <= 1.0)) {
            throw Error(ErrorKind::Parameter, std::string("injection fraction ") + category_name(c) + " = " +
                                                  std::to_string(r) + " outside [0,1]");
        }
    }
    if (n_steps < 1) {
        throw Error(ErrorKind::Parameter, "injection schedule needs n_steps >= 1");
    }
}

InjectionSchedule InjectionSchedule::none(int n_steps) {
    return {0.0, 0.0, 0.0, 0.0, n_steps};
}

bool injection_active(const InjectionSchedule& sched, int step_index, TapCategory c) {
    if (step_index < 1 || step_index > sched.n_steps) {
        throw Error(ErrorKind::Range,
                    "step " + std::to_string(step_index) + " outside [1, " + std::to_string(sched.n_steps) + "]");
    }
    return step_index <= sched.active_steps(c);
}

ActiveCategories active_categories(const InjectionSchedule& sched, int step_index) {
    return {injection_active(sched, step_index, TapCategory::FeatureIn),
            injection_active(sched, step_index, TapCategory::Residual),
            injection_active(sched, step_index, TapCategory::TemporalAttention),
            injection_active(sched, step_index, TapCategory::SpatialAttention)};
}

ActiveCategories all_categories() noexcept { return {true, true, true, true}; }

void StoredTapCache::put(int t, UNetTapSet taps) { taps_[t] = std::move(taps); }

UNetTapSet StoredTapCache::taps_at(int t) const {
    auto it = taps_.find(t);
    if (it == taps_.end()) {
        throw Error(ErrorKind::CacheMiss, "no taps cached at t=" + std::to_string(t));
    }
    return it->second;
}

LatentTapCache::LatentTapCache(const MiniUNet& unet, const NoiseSchedule& schedule, LatentCache latents,
                               std::vector<int> condition)
    : unet_(unet), schedule_(schedule), latents_(std::move(latents)), condition_(std::move(condition)) {}

UNetTapSet LatentTapCache::taps_at(int t) const {
    return unet_.forward(latents_.at(t), t, condition_, schedule_, nullptr, true).taps;
}

Mask ObjectLayer::placed_mask() const {
    return affine_apply(mask, transform, mask.shape().height, mask.shape().width);
}

namespace {

struct LayerGeometry {
    Mask placed;  // composite pixel grid
    std::map<std::pair<std::size_t, std::size_t>, Mask> at_res;

    const Mask& mask_at(std::size_t h, std::size_t w) {
        auto key = std::make_pair(h, w);
        auto it = at_res.find(key);
        if (it == at_res.end()) {
            it = at_res.emplace(key, mask_resample(placed, h, w, 0.5)).first;
        }
        return it->second;
    }
};

AffineTransform on_grid(const AffineTransform& t, const Shape3& pixels, std::size_t h, std::size_t w) {
    return t.rescaled(static_cast<double>(h) / static_cast<double>(pixels.height),
                      static_cast<double>(w) / static_cast<double>(pixels.width));
}

void blend_feature(VideoTensor& acc, const VideoTensor& obj, const AffineTransform& t, const Shape3& pixels,
                   LayerGeometry& geo, const char* site) {
    if (acc.shape() != obj.shape()) {
        throw Error(ErrorKind::Shape,
                    std::string(site) + " tap " + obj.shape().str() + " does not match base " + acc.shape().str());
    }
    const auto& s = acc.shape();
    const Mask& m = geo.mask_at(s.height, s.width);
    if (m.shape().frames != s.frames) {
        throw Error(ErrorKind::Shape, std::string(site) + " mask frames do not match tap frames");
    }
    const VideoTensor placed = affine_apply(obj, on_grid(t, pixels, s.height, s.width), s.height, s.width);
    acc = hadamard_blend(acc, placed, m);
}

long nearest_in(double v, std::size_t n) {
    const long r = std::lround(v);
    return (r < 0 || r >= static_cast<long>(n)) ? -1 : r;
}

long nearest_clamped(double v, std::size_t n) {
    return std::clamp<long>(std::lround(v), 0, static_cast<long>(n) - 1);
}

struct TokenTransport {
    std::vector<long> source;  // composite token -> object token, -1 when outside
    std::vector<long> dest;    // object token -> composite token, clamped

    TokenTransport(const AffineTransform& t, std::size_t gh, std::size_t gw)
        : source(gh * gw), dest(gh * gw) {
        const AffineTransform inv = t.inverse();
        for (std::size_t i = 0; i < gh; ++i) {
            for (std::size_t j = 0; j < gw; ++j) {
                const GridPoint p{static_cast<double>(i), static_cast<double>(j)};
                const GridPoint s = inv.apply(p);
                const long si = nearest_in(s.y, gh);
                const long sj = nearest_in(s.x, gw);
                source[i * gw + j] = (si < 0 || sj < 0) ? -1 : si * static_cast<long>(gw) + sj;
                const GridPoint d = t.apply(p);
                dest[i * gw + j] = nearest_clamped(d.y, gh) * static_cast<long>(gw) + nearest_clamped(d.x, gw);
            }
        }
    }
};

void check_map(const AttentionMap& acc, const AttentionMap& obj, const char* site) {
    if (!acc.same_geometry(obj) || acc.data.size() != obj.data.size()) {
        throw Error(ErrorKind::Shape, std::string(site) + " attention tap geometry does not match base");
    }
}

void blend_spatial(AttentionMap& acc, const AttentionMap& obj, const AffineTransform& t, const Shape3& pixels,
                   LayerGeometry& geo) {
    check_map(acc, obj, "spatial");
    const Mask& m = geo.mask_at(acc.grid_h, acc.grid_w);
    if (m.shape().frames != acc.batch) {
        throw Error(ErrorKind::Shape, "spatial mask frames do not match attention batch");
    }
    const TokenTransport tr(on_grid(t, pixels, acc.grid_h, acc.grid_w), acc.grid_h, acc.grid_w);
    const auto md = m.data();
    for (std::size_t b = 0; b < acc.batch; ++b) {
        for (std::size_t q = 0; q < acc.tokens; ++q) {
            if (md[b * acc.tokens + q] < 0.5 || tr.source[q] < 0) {
                continue;
            }
            auto dst = acc.row(b, q);
            const auto src = obj.row(b, static_cast<std::size_t>(tr.source[q]));
            std::fill(dst.begin(), dst.end(), 0.0f);
            for (std::size_t k = 0; k < acc.tokens; ++k) {
                dst[static_cast<std::size_t>(tr.dest[k])] += src[k];
            }
        }
    }
}

void blend_temporal(AttentionMap& acc, const AttentionMap& obj, const AffineTransform& t, const Shape3& pixels,
                    LayerGeometry& geo) {
    check_map(acc, obj, "temporal");
    const Mask& m = geo.mask_at(acc.grid_h, acc.grid_w);
    const std::size_t positions = acc.grid_h * acc.grid_w;
    if (m.shape().frames != acc.tokens || acc.batch != positions) {
        throw Error(ErrorKind::Shape, "temporal mask does not match attention geometry");
    }
    const TokenTransport tr(on_grid(t, pixels, acc.grid_h, acc.grid_w), acc.grid_h, acc.grid_w);
    const auto md = m.data();
    for (std::size_t p = 0; p < positions; ++p) {
        if (tr.source[p] < 0) {
            continue;
        }
        for (std::size_t f = 0; f < acc.tokens; ++f) {
            if (md[f * positions + p] < 0.5) {
                continue;
            }
            const auto src = obj.row(static_cast<std::size_t>(tr.source[p]), f);
            std::copy(src.begin(), src.end(), acc.row(p, f).begin());
        }
    }
}

void check_site_counts(const UNetTapSet& a, const UNetTapSet& b) {
    if (a.residual.size() != b.residual.size() || a.spatial.size() != b.spatial.size() ||
        a.temporal.size() != b.temporal.size()) {
        throw Error(ErrorKind::Shape, "tap sets have different site counts");
    }
}

}  // namespace

UNetTapSet compose_layers(const UNetTapSet& base, std::span<const ObjectLayer> layers,
                          std::span<const UNetTapSet> layer_taps) {
    if (layer_taps.size() != layers.size()) {
        throw Error(ErrorKind::Arity, "compose_layers: one tap set per layer required");
    }
    UNetTapSet out = base;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const ObjectLayer& layer = layers[i];
        const UNetTapSet& obj = layer_taps[i];
        check_site_counts(out, obj);
        const Shape3 pixels = layer.mask.shape();
        LayerGeometry geo{layer.placed_mask(), {}};
        blend_feature(out.feature_in, obj.feature_in, layer.transform, pixels, geo, "feature_in");
        for (std::size_t k = 0; k < out.residual.size(); ++k) {
            blend_feature(out.residual[k], obj.residual[k], layer.transform, pixels, geo, "residual");
        }
        for (std::size_t k = 0; k < out.spatial.size(); ++k) {
            blend_spatial(out.spatial[k], obj.spatial[k], layer.transform, pixels, geo);
        }
        for (std::size_t k = 0; k < out.temporal.size(); ++k) {
            blend_temporal(out.temporal[k], obj.temporal[k], layer.transform, pixels, geo);
        }
    }
    return out;
}

UNetTapSet compose_layers(const UNetTapSet& base, std::span<const ObjectLayer> layers, int t) {
    std::vector<UNetTapSet> taps;
    taps.reserve(layers.size());
    for (const auto& layer : layers) {
        if (!layer.taps) {
            throw Error(ErrorKind::CacheMiss, "layer " + std::to_string(layer.id) + " has no tap cache");
        }
        taps.push_back(layer.taps->taps_at(t));
    }
    return compose_layers(base, layers, taps);
}

TapOverrides gated_overrides(const UNetTapSet& composed, const ActiveCategories& active) {
    TapOverrides o;
    if (active.feature_in) {
        o.feature_in = composed.feature_in;
    }
    if (active.residual) {
        o.residual.assign(composed.residual.begin(), composed.residual.end());
    }
    if (active.spatial) {
        o.spatial.assign(composed.spatial.begin(), composed.spatial.end());
    }
    if (active.temporal) {
        o.temporal.assign(composed.temporal.begin(), composed.temporal.end());
    }
    return o;
}

VideoTensor guided_eps(const VideoTensor& xt, int t, int step_index, std::span<const ObjectLayer> layers,
                       const GuidedEpsConfig& cfg, InjectionStepReport* report) {
    if (cfg.unet == nullptr || cfg.schedule == nullptr) {
        throw Error(ErrorKind::Config, "guided_eps needs a unet and a schedule");
    }
    const std::size_t n = layers.size();
    if (cfg.weights.count() != n) {
        throw Error(ErrorKind::Arity, "guided_eps: " + std::to_string(cfg.weights.count()) + " weights for " +
                                          std::to_string(n) + " layers");
    }
    const auto& omega = cfg.weights.omega();
    const ActiveCategories active = active_categories(cfg.injection, step_index);
    std::vector<std::size_t> terms;
    for (std::size_t i = 1; i <= n; ++i) {
        if (omega[i] != 0.0) {
            terms.push_back(i);
        }
    }
    const bool inject = active.any() && !terms.empty();
    // the unconditional pass doubles as the i = 0 term and the tap base
    const bool need_base = inject || omega[0] != 0.0;

    std::vector<std::vector<int>> conditions(n + 1, cfg.base_condition);
    for (std::size_t i = 1; i <= n; ++i) {
        conditions[i] = conditions[i - 1];
        conditions[i].push_back(layers[i - 1].id);
    }

    // base pass (shared i = 0 term) and object taps are independent
    UNetOutput base;
    std::vector<UNetTapSet> layer_taps(inject ? n : 0);
    parallel_for(1 + layer_taps.size(), [&](std::size_t j) {
        if (j == 0) {
            if (need_base) {
                base = cfg.unet->forward(xt, t, conditions[0], *cfg.schedule, nullptr, inject);
            }
        } else {
            const ObjectLayer& layer = layers[j - 1];
            if (!layer.taps) {
                throw Error(ErrorKind::CacheMiss, "layer " + std::to_string(layer.id) + " has no tap cache");
            }
            layer_taps[j - 1] = layer.taps->taps_at(t);
        }
    });

    std::vector<TapOverrides> overrides;
    if (inject) {
        overrides.resize(n + 1);
        UNetTapSet composed = base.taps;
        for (std::size_t i = 1; i <= n; ++i) {
            composed = compose_layers(composed, layers.subspan(i - 1, 1),
                                      std::span<const UNetTapSet>(layer_taps).subspan(i - 1, 1));
            if (omega[i] != 0.0) {
                overrides[i] = gated_overrides(composed, active);
            }
        }
    }

    std::vector<VideoTensor> eps(n + 1, VideoTensor(xt.shape()));
    if (need_base) {
        eps[0] = std::move(base.eps);
    }
    parallel_for(terms.size(), [&](std::size_t j) {
        const std::size_t i = terms[j];
        eps[i] = cfg.unet->forward(xt, t, conditions[i], *cfg.schedule, inject ? &overrides[i] : nullptr, false).eps;
    });

    if (report != nullptr) {
        report->step = step_index;
        report->t = t;
        report->active = active;
        report->terms.clear();
        if (omega[0] != 0.0) {
            report->terms.push_back(0);
        }
        report->terms.insert(report->terms.end(), terms.begin(), terms.end());
    }
    return compose_eps_omega(eps, omega);
}

std::string injection_report_json(const InjectionSchedule& sched, std::span<const InjectionStepReport> steps) {
    nlohmann::ordered_json j;
    j["schedule"] = {{"r_fn", sched.r_fn}, {"r_fr", sched.r_fr}, {"r_at", sched.r_at}, {"r_as", sched.r_as},
                     {"n_steps", sched.n_steps}};
    auto& arr = j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : steps) {
        arr.push_back({{"step", s.step},
                       {"t", s.t},
                       {"F_n", s.active.feature_in},
                       {"F_r", s.active.residual},
                       {"A_t", s.active.temporal},
                       {"A_s", s.active.spatial},
                       {"terms", s.terms}});
    }
    return j.dump(2);
}

}  // namespace mvoc
