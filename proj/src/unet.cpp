// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/unet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "mvoc/error.hpp"

namespace mvoc {

namespace {

using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorF = Eigen::VectorXf;

// Activation laid out (frame, channel, position); a frame maps to a P x C column-major matrix.
struct Act {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t h = 0;
    std::size_t w = 0;
    std::vector<float> data;

    Act() = default;
    Act(std::size_t f, std::size_t c, std::size_t hh, std::size_t ww)
        : frames(f), channels(c), h(hh), w(ww), data(f * c * hh * ww, 0.0f) {}

    std::size_t positions() const { return h * w; }
    Eigen::Map<MatrixF> mat(std::size_t f) {
        return {data.data() + f * channels * positions(), static_cast<Eigen::Index>(positions()),
                static_cast<Eigen::Index>(channels)};
    }
    Eigen::Map<const MatrixF> mat(std::size_t f) const {
        return {data.data() + f * channels * positions(), static_cast<Eigen::Index>(positions()),
                static_cast<Eigen::Index>(channels)};
    }
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    MatrixF gaussian(std::size_t rows, std::size_t cols, double scale) {
        std::normal_distribution<double> dist(0.0, scale);
        MatrixF m(rows, cols);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                m(r, c) = static_cast<float>(dist(gen_));
            }
        }
        return m;
    }

private:
    std::mt19937_64 gen_;
};

struct Conv3x3 {
    std::size_t cin = 0;
    std::size_t cout = 0;
    MatrixF weight;  // (9 cin) x cout
    VectorF bias;

    Conv3x3() = default;
    Conv3x3(std::size_t in, std::size_t out, Rng& rng, double scale)
        : cin(in), cout(out), weight(rng.gaussian(9 * in, out, scale)), bias(VectorF::Zero(out)) {}

    Act operator()(const Act& x) const {
        Act out(x.frames, cout, x.h, x.w);
        const auto P = static_cast<Eigen::Index>(x.positions());
        MatrixF col(P, static_cast<Eigen::Index>(9 * cin));
        const auto H = static_cast<long>(x.h);
        const auto W = static_cast<long>(x.w);
        for (std::size_t f = 0; f < x.frames; ++f) {
            const float* src = x.data.data() + f * cin * x.positions();
            for (std::size_t c = 0; c < cin; ++c) {
                const float* plane = src + c * x.positions();
                for (int k = 0; k < 9; ++k) {
                    const long dy = k / 3 - 1;
                    const long dx = k % 3 - 1;
                    float* dst = col.data() + static_cast<Eigen::Index>(c * 9 + static_cast<std::size_t>(k)) * P;
                    for (long i = 0; i < H; ++i) {
                        const long si = i + dy;
                        for (long j = 0; j < W; ++j) {
                            const long sj = j + dx;
                            dst[i * W + j] = (si >= 0 && si < H && sj >= 0 && sj < W) ? plane[si * W + sj] : 0.0f;
                        }
                    }
                }
            }
            auto o = out.mat(f);
            o.noalias() = col * weight;
            o.rowwise() += bias.transpose();
        }
        return out;
    }
};

struct ResBlock {
    Conv3x3 conv1;
    Conv3x3 conv2;
    MatrixF time_proj;  // time_dim x cout

    ResBlock() = default;
    ResBlock(std::size_t cin, std::size_t cout, std::size_t time_dim, Rng& rng, double scale)
        : conv1(cin, cout, rng, scale), conv2(cout, cout, rng, scale), time_proj(rng.gaussian(time_dim, cout, scale)) {}

    // the first `lane` channels pass through untouched
    Act operator()(const Act& x, const VectorF& temb, std::size_t lane) const {
        Act h = conv1(silu(x));
        const VectorF tb = time_proj.transpose() * temb;
        for (std::size_t f = 0; f < h.frames; ++f) {
            h.mat(f).rowwise() += tb.transpose();
        }
        h = conv2(silu(h));
        // skip keeps the leading channels (truncate or zero-pad)
        const std::size_t keep = std::min(x.channels, h.channels);
        for (std::size_t f = 0; f < h.frames; ++f) {
            h.mat(f).leftCols(static_cast<Eigen::Index>(lane)).setZero();
            h.mat(f).leftCols(static_cast<Eigen::Index>(keep)) += x.mat(f).leftCols(static_cast<Eigen::Index>(keep));
        }
        return h;
    }

    static Act silu(const Act& x) {
        Act y = x;
        for (float& v : y.data) {
            v = v / (1.0f + std::exp(-v));
        }
        return y;
    }
};

struct AttentionBlock {
    MatrixF wq, wk, wv, wo;  // C x C

    AttentionBlock() = default;
    AttentionBlock(std::size_t c, Rng& rng, double scale)
        : wq(rng.gaussian(c, c, scale)),
          wk(rng.gaussian(c, c, scale)),
          wv(rng.gaussian(c, c, scale)),
          wo(rng.gaussian(c, c, scale)) {}
};

void softmax_rows(RowMatrixF& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        auto row = s.row(r);
        const float m = row.maxCoeff();
        row = (row.array() - m).exp();
        row /= row.sum();
    }
}

void check_attention_override(const AttentionMap& o, const AttentionMap& expected, const char* site) {
    if (!o.same_geometry(expected) || o.data.size() != expected.data.size()) {
        throw Error(ErrorKind::InjectionShape, std::string(site) + " attention override geometry mismatch");
    }
}

Act spatial_attention(const Act& x, const AttentionBlock& blk, std::size_t lane,
                      const std::optional<AttentionMap>* override_map, AttentionMap* record) {
    const auto P = static_cast<Eigen::Index>(x.positions());
    const float scale = 1.0f / std::sqrt(static_cast<float>(x.channels));
    AttentionMap geometry{AttentionMap::Kind::Spatial, x.frames, x.positions(), x.h, x.w, {}};
    geometry.data.resize(x.frames * x.positions() * x.positions());
    const AttentionMap* replacement = nullptr;
    if (override_map != nullptr && override_map->has_value()) {
        check_attention_override(**override_map, geometry, "spatial");
        replacement = &**override_map;
    }
    Act out = x;
    RowMatrixF a(P, P);
    for (std::size_t f = 0; f < x.frames; ++f) {
        const auto z = x.mat(f);
        const MatrixF v = z * blk.wv;
        if (replacement != nullptr) {
            a = Eigen::Map<const RowMatrixF>(replacement->data.data() + f * x.positions() * x.positions(), P, P);
        } else {
            const MatrixF q = z * blk.wq;
            const MatrixF k = z * blk.wk;
            a.noalias() = (q * k.transpose()) * scale;
            softmax_rows(a);
        }
        if (record != nullptr) {
            std::copy(a.data(), a.data() + P * P, geometry.data.data() + f * x.positions() * x.positions());
        }
        MatrixF upd = (a * v) * blk.wo;
        upd.leftCols(static_cast<Eigen::Index>(lane)).setZero();
        out.mat(f) += upd;
    }
    if (record != nullptr) {
        *record = std::move(geometry);
    }
    return out;
}

Act temporal_attention(const Act& x, const AttentionBlock& blk, std::size_t lane,
                       const std::optional<AttentionMap>* override_map, AttentionMap* record) {
    const std::size_t F = x.frames;
    const std::size_t P = x.positions();
    const std::size_t C = x.channels;
    const float scale = 1.0f / std::sqrt(static_cast<float>(C));
    AttentionMap geometry{AttentionMap::Kind::Temporal, P, F, x.h, x.w, {}};
    geometry.data.resize(P * F * F);
    const AttentionMap* replacement = nullptr;
    if (override_map != nullptr && override_map->has_value()) {
        check_attention_override(**override_map, geometry, "temporal");
        replacement = &**override_map;
    }
    // per-frame projections, then regroup by position
    std::vector<MatrixF> q(F), k(F), v(F);
    for (std::size_t f = 0; f < F; ++f) {
        const auto z = x.mat(f);
        v[f] = z * blk.wv;
        if (replacement == nullptr) {
            q[f] = z * blk.wq;
            k[f] = z * blk.wk;
        }
    }
    const auto Fi = static_cast<Eigen::Index>(F);
    const auto Ci = static_cast<Eigen::Index>(C);
    RowMatrixF a(Fi, Fi);
    MatrixF qp(Fi, Ci), kp(Fi, Ci), vp(Fi, Ci);
    MatrixF mixed(Fi, Ci);
    Act out = x;
    for (std::size_t p = 0; p < P; ++p) {
        const auto pi = static_cast<Eigen::Index>(p);
        for (std::size_t f = 0; f < F; ++f) {
            const auto fi = static_cast<Eigen::Index>(f);
            vp.row(fi) = v[f].row(pi);
            if (replacement == nullptr) {
                qp.row(fi) = q[f].row(pi);
                kp.row(fi) = k[f].row(pi);
            }
        }
        if (replacement != nullptr) {
            a = Eigen::Map<const RowMatrixF>(replacement->data.data() + p * F * F, Fi, Fi);
        } else {
            a.noalias() = (qp * kp.transpose()) * scale;
            softmax_rows(a);
        }
        if (record != nullptr) {
            std::copy(a.data(), a.data() + Fi * Fi, geometry.data.data() + p * F * F);
        }
        mixed.noalias() = (a * vp) * blk.wo;
        mixed.leftCols(static_cast<Eigen::Index>(lane)).setZero();
        for (std::size_t f = 0; f < F; ++f) {
            out.mat(f).row(pi) += mixed.row(static_cast<Eigen::Index>(f));
        }
    }
    if (record != nullptr) {
        *record = std::move(geometry);
    }
    return out;
}

Act avg_pool2(const Act& x) {
    Act out(x.frames, x.channels, x.h / 2, x.w / 2);
    for (std::size_t f = 0; f < x.frames; ++f) {
        for (std::size_t c = 0; c < x.channels; ++c) {
            const float* src = x.data.data() + (f * x.channels + c) * x.positions();
            float* dst = out.data.data() + (f * out.channels + c) * out.positions();
            for (std::size_t i = 0; i < out.h; ++i) {
                for (std::size_t j = 0; j < out.w; ++j) {
                    const std::size_t a = 2 * i * x.w + 2 * j;
                    dst[i * out.w + j] = 0.25f * (src[a] + src[a + 1] + src[a + x.w] + src[a + x.w + 1]);
                }
            }
        }
    }
    return out;
}

Act upsample2(const Act& x) {
    Act out(x.frames, x.channels, x.h * 2, x.w * 2);
    for (std::size_t f = 0; f < x.frames; ++f) {
        for (std::size_t c = 0; c < x.channels; ++c) {
            const float* src = x.data.data() + (f * x.channels + c) * x.positions();
            float* dst = out.data.data() + (f * out.channels + c) * out.positions();
            for (std::size_t i = 0; i < out.h; ++i) {
                for (std::size_t j = 0; j < out.w; ++j) {
                    dst[i * out.w + j] = src[(i / 2) * x.w + j / 2];
                }
            }
        }
    }
    return out;
}

Act concat_channels(const Act& a, const Act& b) {
    Act out(a.frames, a.channels + b.channels, a.h, a.w);
    const std::size_t na = a.channels * a.positions();
    const std::size_t nb = b.channels * b.positions();
    for (std::size_t f = 0; f < a.frames; ++f) {
        std::copy_n(a.data.data() + f * na, na, out.data.data() + f * (na + nb));
        std::copy_n(b.data.data() + f * nb, nb, out.data.data() + f * (na + nb) + na);
    }
    return out;
}

VideoTensor to_video(const Act& a) {
    VideoTensor out({a.frames, a.channels, a.h, a.w});
    std::transform(a.data.begin(), a.data.end(), out.data().begin(), [](float v) { return static_cast<double>(v); });
    return out;
}

void apply_feature_override(Act& a, const std::optional<VideoTensor>& o, const char* site) {
    if (!o.has_value()) {
        return;
    }
    const Shape4 expected{a.frames, a.channels, a.h, a.w};
    if (o->shape() != expected) {
        throw Error(ErrorKind::InjectionShape,
                    std::string(site) + " override " + o->shape().str() + " vs tap " + expected.str());
    }
    std::transform(o->data().begin(), o->data().end(), a.data.begin(), [](double v) { return static_cast<float>(v); });
}

// low-frequency embedding of t / T so untrained weights vary smoothly along a trajectory
VectorF timestep_embedding(int t, int T, std::size_t dim) {
    VectorF e(static_cast<Eigen::Index>(dim));
    const std::size_t half = dim / 2;
    const double tau = static_cast<double>(t) / static_cast<double>(T);
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = 0.5 * std::numbers::pi * static_cast<double>(i + 1);
        e(static_cast<Eigen::Index>(i)) = static_cast<float>(std::sin(tau * freq));
        e(static_cast<Eigen::Index>(i + half)) = static_cast<float>(std::cos(tau * freq));
    }
    if (dim % 2 == 1) {
        e(static_cast<Eigen::Index>(dim - 1)) = 0.0f;
    }
    return e;
}

template <class T>
const std::optional<T>* site_override(const std::vector<std::optional<T>>* v, std::size_t i) {
    return (v != nullptr && i < v->size()) ? &(*v)[i] : nullptr;
}

}  // namespace

bool TapOverrides::empty() const noexcept {
    auto none = [](const auto& v) { return std::none_of(v.begin(), v.end(), [](const auto& o) { return o.has_value(); }); };
    return !feature_in.has_value() && none(residual) && none(spatial) && none(temporal);
}

TapOverrides TapOverrides::all_of(const UNetTapSet& taps) {
    TapOverrides o;
    o.feature_in = taps.feature_in;
    o.residual.assign(taps.residual.begin(), taps.residual.end());
    o.spatial.assign(taps.spatial.begin(), taps.spatial.end());
    o.temporal.assign(taps.temporal.begin(), taps.temporal.end());
    return o;
}

struct MiniUNet::Weights {
    Conv3x3 stem;
    ResBlock res[kResidualSites];
    AttentionBlock spatial[kAttentionSites];
    AttentionBlock temporal[kAttentionSites];
    Conv3x3 head;
};

MiniUNet::MiniUNet(UNetConfig config) : config_(config), weights_(std::make_unique<Weights>()) {
    const std::size_t content = config_.in_channels * config_.patch * config_.patch;
    const std::size_t w0 = config_.widths[0];
    const std::size_t w1 = config_.widths[1];
    if (config_.in_channels == 0 || config_.patch == 0 || w0 == 0 || w1 == 0 || config_.time_dim == 0) {
        throw Error(ErrorKind::Config, "unet dims must be positive");
    }
    // level 1 needs feature channels beside the lane, or nothing but x_t reaches the head
    if (w0 <= content || w1 < content) {
        throw Error(ErrorKind::Config, "widths must exceed (level 1) or hold (level 2) the " +
                                           std::to_string(content) + " content channels");
    }
    if (!(config_.init_scale > 0.0) || !(config_.head_scale >= 0.0)) {
        throw Error(ErrorKind::Config, "init_scale must be positive and head_scale non-negative");
    }
    Rng rng(config_.seed);
    const double s = config_.init_scale;
    auto& wt = *weights_;
    wt.stem = Conv3x3(content + config_.cond_channels, w0, rng, s);
    wt.res[0] = ResBlock(w0, w0, config_.time_dim, rng, s);
    wt.res[1] = ResBlock(w0, w1, config_.time_dim, rng, s);
    wt.res[2] = ResBlock(w1, w1, config_.time_dim, rng, s);
    wt.res[3] = ResBlock(2 * w1, w1, config_.time_dim, rng, s);
    wt.res[4] = ResBlock(w0 + w1, w0, config_.time_dim, rng, s);
    const std::size_t attn_width[kAttentionSites] = {w0, w1, w1, w0};
    for (std::size_t i = 0; i < kAttentionSites; ++i) {
        wt.spatial[i] = AttentionBlock(attn_width[i], rng, s);
        wt.temporal[i] = AttentionBlock(attn_width[i], rng, s);
    }
    wt.head = Conv3x3(w0, content, rng, config_.head_scale);
}

MiniUNet::~MiniUNet() = default;
MiniUNet::MiniUNet(MiniUNet&&) noexcept = default;
MiniUNet& MiniUNet::operator=(MiniUNet&&) noexcept = default;

void MiniUNet::check_input(const Shape4& shape) const {
    const std::size_t cell = 2 * config_.patch;
    if (shape.channels != config_.in_channels || shape.frames == 0 || shape.height == 0 || shape.width == 0 ||
        shape.height % cell != 0 || shape.width % cell != 0) {
        throw Error(ErrorKind::Shape, "unet input " + shape.str() + " needs " + std::to_string(config_.in_channels) +
                                          " channels and H, W divisible by " + std::to_string(cell));
    }
}

UNetOutput MiniUNet::forward(const VideoTensor& xt, int t, std::span<const int> cond, const NoiseSchedule& s,
                             const TapOverrides* overrides, bool record) const {
    check_input(xt.shape());
    if (t < 1) {
        throw Error(ErrorKind::Range, "unet needs t >= 1");
    }
    for (int c : cond) {
        if (c < 0 || c >= static_cast<int>(config_.cond_channels)) {
            throw Error(ErrorKind::Parameter, "condition channel " + std::to_string(c) + " out of range");
        }
    }
    const auto& wt = *weights_;
    const auto& shape = xt.shape();
    const std::size_t p = config_.patch;
    const std::size_t content = shape.channels * p * p;
    const std::size_t lh = shape.height / p;
    const std::size_t lw = shape.width / p;
    const double ab = s.alpha_bar(t);

    // stem input: [unshuffled x_t | one-hot condition]
    Act input(shape.frames, content + config_.cond_channels, lh, lw);
    for (std::size_t f = 0; f < shape.frames; ++f) {
        for (std::size_t c = 0; c < shape.channels; ++c) {
            for (std::size_t dy = 0; dy < p; ++dy) {
                for (std::size_t dx = 0; dx < p; ++dx) {
                    const std::size_t ch = (c * p + dy) * p + dx;
                    float* dst = input.data.data() + (f * input.channels + ch) * input.positions();
                    for (std::size_t i = 0; i < lh; ++i) {
                        for (std::size_t j = 0; j < lw; ++j) {
                            dst[i * lw + j] = static_cast<float>(xt.at(f, c, i * p + dy, j * p + dx));
                        }
                    }
                }
            }
        }
        for (int c : cond) {
            float* dst = input.data.data() + (f * input.channels + content + static_cast<std::size_t>(c)) *
                                                 input.positions();
            std::fill_n(dst, input.positions(), 1.0f);
        }
    }

    UNetOutput result;
    auto& taps = result.taps;
    if (record) {
        taps.residual.resize(kResidualSites);
        taps.spatial.resize(kAttentionSites);
        taps.temporal.resize(kAttentionSites);
    }
    const auto* res_o = overrides != nullptr ? &overrides->residual : nullptr;
    const auto* sp_o = overrides != nullptr ? &overrides->spatial : nullptr;
    const auto* tm_o = overrides != nullptr ? &overrides->temporal : nullptr;

    auto residual_site = [&](Act a, std::size_t i) {
        if (const auto* o = site_override(res_o, i)) {
            apply_feature_override(a, *o, "residual");
        }
        if (record) {
            taps.residual[i] = to_video(a);
        }
        return a;
    };
    auto attention_site = [&](const Act& a, std::size_t i) {
        Act out = spatial_attention(a, wt.spatial[i], content, site_override(sp_o, i),
                                    record ? &taps.spatial[i] : nullptr);
        return temporal_attention(out, wt.temporal[i], content, site_override(tm_o, i),
                                  record ? &taps.temporal[i] : nullptr);
    };

    // content lane carries x_t itself; the conv fills the remaining channels
    Act stem = wt.stem(input);
    for (std::size_t f = 0; f < shape.frames; ++f) {
        stem.mat(f).leftCols(static_cast<Eigen::Index>(content)) =
            input.mat(f).leftCols(static_cast<Eigen::Index>(content));
    }
    if (overrides != nullptr) {
        apply_feature_override(stem, overrides->feature_in, "feature_in");
    }
    if (record) {
        taps.feature_in = to_video(stem);
    }

    const VectorF temb = timestep_embedding(t, s.steps(), config_.time_dim);
    const Act skip1 = attention_site(residual_site(wt.res[0](stem, temb, content), 0), 0);
    const Act skip2 = attention_site(residual_site(wt.res[1](avg_pool2(skip1), temb, content), 1), 1);
    const Act mid = residual_site(wt.res[2](skip2, temb, content), 2);
    const Act up2 = attention_site(residual_site(wt.res[3](concat_channels(skip2, mid), temb, content), 3), 2);
    const Act up1 = attention_site(residual_site(wt.res[4](concat_channels(skip1, upsample2(up2)), temb, content), 4), 3);

    // eps = (x_t - lane) / sqrt(1 - abar) - head(features); the lane equals x_t unless overridden
    const Act head = wt.head(up1);
    const double inv = 1.0 / std::sqrt(1.0 - ab);
    result.eps = VideoTensor(shape);
    for (std::size_t f = 0; f < shape.frames; ++f) {
        for (std::size_t ch = 0; ch < content; ++ch) {
            const std::size_t c = ch / (p * p);
            const std::size_t dy = (ch / p) % p;
            const std::size_t dx = ch % p;
            const float* lane = up1.data.data() + (f * up1.channels + ch) * up1.positions();
            const float* in = input.data.data() + (f * input.channels + ch) * input.positions();
            const float* hd = head.data.data() + (f * head.channels + ch) * head.positions();
            for (std::size_t i = 0; i < lh; ++i) {
                for (std::size_t j = 0; j < lw; ++j) {
                    const std::size_t q = i * lw + j;
                    const double diff = static_cast<double>(in[q]) - static_cast<double>(lane[q]);
                    result.eps.at(f, c, i * p + dy, j * p + dx) = diff * inv - static_cast<double>(hd[q]);
                }
            }
        }
    }
    return result;
}

}  // namespace mvoc
