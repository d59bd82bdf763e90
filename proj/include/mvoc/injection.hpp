// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mvoc/affine.hpp"
#include "mvoc/guidance.hpp"
#include "mvoc/sampler.hpp"
#include "mvoc/tensor.hpp"
#include "mvoc/unet.hpp"

namespace mvoc {

enum class TapCategory { FeatureIn, Residual, TemporalAttention, SpatialAttention };

/// "F_n", "F_r", "A_t", "A_s".
const char* category_name(TapCategory c) noexcept;

/// Fraction of sampling steps, counted from the noisiest one, during which
/// each tap category is overridden.
struct InjectionSchedule {
    double r_fn = 0.02;
    double r_fr = 0.1;
    double r_at = 1.0;
    double r_as = 1.0;
    int n_steps = 50;

    double fraction(TapCategory c) const noexcept;
    /// round(r * n_steps).
    int active_steps(TapCategory c) const noexcept;
    /// Throws Parameter for fractions outside [0,1] or n_steps < 1.
    void validate() const;

    /// Every fraction zero.
    static InjectionSchedule none(int n_steps);
    bool operator==(const InjectionSchedule&) const = default;
};

/// True iff 1 <= step_index <= round(r * n_steps). Throws Range for a step
/// outside [1, n_steps].
bool injection_active(const InjectionSchedule& sched, int step_index, TapCategory c);

struct ActiveCategories {
    bool feature_in = false;
    bool residual = false;
    bool temporal = false;
    bool spatial = false;

    bool any() const noexcept { return feature_in || residual || temporal || spatial; }
    bool operator==(const ActiveCategories&) const = default;
};

ActiveCategories active_categories(const InjectionSchedule& sched, int step_index);
ActiveCategories all_categories() noexcept;

/// Per-timestep taps of one object's inversion trajectory.
class TapCache {
public:
    virtual ~TapCache() = default;
    /// Throws CacheMiss when no entry exists for t.
    virtual UNetTapSet taps_at(int t) const = 0;
};

/// Explicitly stored tap sets.
class StoredTapCache final : public TapCache {
public:
    void put(int t, UNetTapSet taps);
    UNetTapSet taps_at(int t) const override;

private:
    std::map<int, UNetTapSet> taps_;
};

/// Taps recomputed on demand by a recording forward pass over cached latents.
/// Holds references to `unet` and `schedule`; both must outlive the cache.
class LatentTapCache final : public TapCache {
public:
    LatentTapCache(const MiniUNet& unet, const NoiseSchedule& schedule, LatentCache latents, std::vector<int> condition);
    UNetTapSet taps_at(int t) const override;
    const LatentCache& latents() const noexcept { return latents_; }

private:
    const MiniUNet& unet_;
    const NoiseSchedule& schedule_;
    LatentCache latents_;
    std::vector<int> condition_;
};

/// One foreground object. `mask` lives on the object's pixel grid; `transform`
/// places object pixels on the composite grid. Later layers sit nearer the camera.
struct ObjectLayer {
    int id = 0;
    Mask mask;
    AffineTransform transform;
    std::shared_ptr<const TapCache> taps;

    /// Mask carried to the composite grid (not binarized).
    Mask placed_mask() const;
};

/// Iterates F_i = F_{i-1} * (1 - M_i) + T_i(F(y_i)) * M_i over the layers for
/// every tap site. Masks are resampled (threshold 0.5) to each tap grid and
/// transforms rescaled to it. Attention maps are gated per query row; T moves
/// query and key tokens by nearest-neighbour transport, so rows stay stochastic.
UNetTapSet compose_layers(const UNetTapSet& base, std::span<const ObjectLayer> layers, int t);

/// Same recurrence with the object taps already fetched (one per layer).
UNetTapSet compose_layers(const UNetTapSet& base, std::span<const ObjectLayer> layers,
                          std::span<const UNetTapSet> layer_taps);

/// Overrides for the active categories only.
TapOverrides gated_overrides(const UNetTapSet& composed, const ActiveCategories& active);

struct GuidedEpsConfig {
    const MiniUNet* unet = nullptr;
    const NoiseSchedule* schedule = nullptr;
    InjectionSchedule injection;
    /// w_1..w_N, one per layer.
    GuidanceWeights weights;
    /// Condition of the i = 0 term; prefix i adds the ids of the first i layers.
    std::vector<int> base_condition;
};

struct InjectionStepReport {
    int step = 0;
    int t = 0;
    ActiveCategories active;
    /// Prefix terms with omega_i != 0 (each one forward pass).
    std::vector<std::size_t> terms;
};

/// sum_i omega_i * eps(x_t, t | {F_i, A_i}) where term i is a forward pass
/// conditioned on the first i layers with the composed taps of those layers
/// injected for the active categories. Terms with omega_i = 0 are skipped.
VideoTensor guided_eps(const VideoTensor& xt, int t, int step_index, std::span<const ObjectLayer> layers,
                       const GuidedEpsConfig& cfg, InjectionStepReport* report = nullptr);

/// {"schedule": {...}, "steps": [{"step", "t", "F_n", "F_r", "A_t", "A_s", "terms"}]}.
std::string injection_report_json(const InjectionSchedule& sched, std::span<const InjectionStepReport> steps);

}  // namespace mvoc
