// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/blend.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mvoc/error.hpp"

namespace mvoc {

namespace {

// Row-normalized overlap weights between `target` equal cells and `source` unit cells.
std::vector<double> area_weights(std::size_t target, std::size_t source) {
    std::vector<double> w(target * source, 0.0);
    const double step = static_cast<double>(source) / static_cast<double>(target);
    for (std::size_t i = 0; i < target; ++i) {
        const double lo = static_cast<double>(i) * step;
        const double hi = static_cast<double>(i + 1) * step;
        double total = 0.0;
        for (std::size_t j = static_cast<std::size_t>(std::floor(lo)); j < source && static_cast<double>(j) < hi; ++j) {
            const double overlap = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
            if (overlap > 0.0) {
                w[i * source + j] = overlap;
                total += overlap;
            }
        }
        for (std::size_t j = 0; j < source; ++j) {
            w[i * source + j] /= total;
        }
    }
    return w;
}

}  // namespace

VideoTensor hadamard_blend(const VideoTensor& base, const VideoTensor& overlay, const Mask& mask) {
    require_same_shape(base, overlay, "hadamard_blend");
    const auto& s = base.shape();
    if (mask.shape() != spatial_shape(s)) {
        throw Error(ErrorKind::Shape, "hadamard_blend mask " + mask.shape().str() + " vs tensor " + s.str());
    }
    VideoTensor out(s);
    const std::size_t plane = s.plane();
    for (std::size_t f = 0; f < s.frames; ++f) {
        const double* m = mask.data().data() + f * plane;
        for (std::size_t c = 0; c < s.channels; ++c) {
            const std::size_t off = (f * s.channels + c) * plane;
            const double* b = base.data().data() + off;
            const double* o = overlay.data().data() + off;
            double* d = out.data().data() + off;
            for (std::size_t p = 0; p < plane; ++p) {
                d[p] = b[p] * (1.0 - m[p]) + o[p] * m[p];
            }
        }
    }
    return out;
}

Mask mask_resample(const Mask& mask, std::size_t target_h, std::size_t target_w, double threshold) {
    if (target_h == 0 || target_w == 0) {
        throw Error(ErrorKind::Shape, "mask_resample target dims must be positive");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(ErrorKind::Parameter, "mask threshold must lie in [0,1]");
    }
    const auto& s = mask.shape();
    if (s.height == target_h && s.width == target_w) {
        return mask;
    }
    std::vector<double> out(s.frames * target_h * target_w, 0.0);
    if (target_h >= s.height && target_w >= s.width) {
        for (std::size_t f = 0; f < s.frames; ++f) {
            for (std::size_t i = 0; i < target_h; ++i) {
                const std::size_t si = std::min(s.height - 1, (2 * i + 1) * s.height / (2 * target_h));
                for (std::size_t j = 0; j < target_w; ++j) {
                    const std::size_t sj = std::min(s.width - 1, (2 * j + 1) * s.width / (2 * target_w));
                    out[(f * target_h + i) * target_w + j] = mask.at(f, si, sj);
                }
            }
        }
        return Mask({s.frames, target_h, target_w}, std::move(out));
    }
    const auto wy = area_weights(target_h, s.height);
    const auto wx = area_weights(target_w, s.width);
    for (std::size_t f = 0; f < s.frames; ++f) {
        for (std::size_t i = 0; i < target_h; ++i) {
            for (std::size_t j = 0; j < target_w; ++j) {
                double acc = 0.0;
                for (std::size_t a = 0; a < s.height; ++a) {
                    const double ya = wy[i * s.height + a];
                    if (ya == 0.0) {
                        continue;
                    }
                    for (std::size_t b = 0; b < s.width; ++b) {
                        acc += ya * wx[j * s.width + b] * mask.at(f, a, b);
                    }
                }
                out[(f * target_h + i) * target_w + j] = acc >= threshold ? 1.0 : 0.0;
            }
        }
    }
    return Mask({s.frames, target_h, target_w}, std::move(out));
}

}  // namespace mvoc
