// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/affine.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mvoc/error.hpp"

namespace mvoc {

namespace {

constexpr double kBoundsEps = 1e-9;

template <class PlaneFn>
void warp_planes(std::size_t planes, std::size_t src_h, std::size_t src_w, std::size_t out_h, std::size_t out_w,
                 const AffineTransform& inv, PlaneFn&& plane_io) {
    for (std::size_t p = 0; p < planes; ++p) {
        auto [src, dst] = plane_io(p);
        for (std::size_t i = 0; i < out_h; ++i) {
            for (std::size_t j = 0; j < out_w; ++j) {
                const GridPoint q = inv.apply({static_cast<double>(i), static_cast<double>(j)});
                double v = 0.0;
                sample_bilinear(src, src_h, src_w, q.y, q.x, v);
                dst[i * out_w + j] = v;
            }
        }
    }
}

}  // namespace

AffineTransform::AffineTransform(const std::array<double, 6>& m) : m_(m) {
    for (double v : m_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Numeric, "non-finite affine coefficient");
        }
    }
    if (std::abs(determinant()) <= 1e-9) {
        throw Error(ErrorKind::SingularTransform, "linear block is not invertible");
    }
}

AffineTransform AffineTransform::translation(double dy, double dx) {
    return AffineTransform({1.0, 0.0, dy, 0.0, 1.0, dx});
}

AffineTransform AffineTransform::scaling(double sy, double sx) {
    return AffineTransform({sy, 0.0, 0.0, 0.0, sx, 0.0});
}

AffineTransform AffineTransform::rotation(double radians, GridPoint center) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    // p' = R (p - center) + center
    return AffineTransform({c, -s, center.y - c * center.y + s * center.x, s, c, center.x - s * center.y - c * center.x});
}

bool AffineTransform::is_identity() const noexcept { return *this == AffineTransform{}; }

GridPoint AffineTransform::apply(GridPoint p) const noexcept {
    return {m_[0] * p.y + m_[1] * p.x + m_[2], m_[3] * p.y + m_[4] * p.x + m_[5]};
}

GridPoint AffineTransform::apply_linear(GridPoint v) const noexcept {
    return {m_[0] * v.y + m_[1] * v.x, m_[3] * v.y + m_[4] * v.x};
}

AffineTransform AffineTransform::inverse() const {
    const double det = determinant();
    if (std::abs(det) <= 1e-9) {
        throw Error(ErrorKind::SingularTransform, "linear block is not invertible");
    }
    const double a = m_[4] / det;
    const double b = -m_[1] / det;
    const double c = -m_[3] / det;
    const double d = m_[0] / det;
    return AffineTransform({a, b, -(a * m_[2] + b * m_[5]), c, d, -(c * m_[2] + d * m_[5])});
}

AffineTransform AffineTransform::after(const AffineTransform& first) const {
    const auto& f = first.m_;
    return AffineTransform({m_[0] * f[0] + m_[1] * f[3], m_[0] * f[1] + m_[1] * f[4], m_[0] * f[2] + m_[1] * f[5] + m_[2],
                            m_[3] * f[0] + m_[4] * f[3], m_[3] * f[1] + m_[4] * f[4],
                            m_[3] * f[2] + m_[4] * f[5] + m_[5]});
}

AffineTransform AffineTransform::rescaled(double scale_y, double scale_x) const {
    if (!(scale_y > 0.0) || !(scale_x > 0.0)) {
        throw Error(ErrorKind::Parameter, "rescale factors must be positive");
    }
    // fine = S^-1 (coarse + 1/2) - 1/2
    const AffineTransform to_fine({1.0 / scale_y, 0.0, 0.5 / scale_y - 0.5, 0.0, 1.0 / scale_x, 0.5 / scale_x - 0.5});
    const AffineTransform to_coarse({scale_y, 0.0, 0.5 * scale_y - 0.5, 0.0, scale_x, 0.5 * scale_x - 0.5});
    return to_coarse.after(after(to_fine));
}

bool sample_bilinear(const double* plane, std::size_t height, std::size_t width, double y, double x,
                     double& out) noexcept {
    out = 0.0;
    if (!(y >= -kBoundsEps && x >= -kBoundsEps && y <= static_cast<double>(height - 1) + kBoundsEps &&
          x <= static_cast<double>(width - 1) + kBoundsEps)) {
        return false;
    }
    const double yc = std::clamp(y, 0.0, static_cast<double>(height - 1));
    const double xc = std::clamp(x, 0.0, static_cast<double>(width - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(yc));
    const auto x0 = static_cast<std::size_t>(std::floor(xc));
    const std::size_t y1 = std::min(y0 + 1, height - 1);
    const std::size_t x1 = std::min(x0 + 1, width - 1);
    const double fy = yc - static_cast<double>(y0);
    const double fx = xc - static_cast<double>(x0);
    if (fy == 0.0 && fx == 0.0) {
        out = plane[y0 * width + x0];
        return true;
    }
    const double top = plane[y0 * width + x0] * (1.0 - fx) + plane[y0 * width + x1] * fx;
    const double bottom = plane[y1 * width + x0] * (1.0 - fx) + plane[y1 * width + x1] * fx;
    out = top * (1.0 - fy) + bottom * fy;
    return true;
}

VideoTensor affine_apply(const VideoTensor& src, const AffineTransform& t, std::size_t out_height,
                         std::size_t out_width) {
    const auto& s = src.shape();
    if (out_height == 0 || out_width == 0) {
        throw Error(ErrorKind::Shape, "affine_apply output dims must be positive");
    }
    if (t.is_identity() && out_height == s.height && out_width == s.width) {
        return src;
    }
    const AffineTransform inv = t.inverse();
    VideoTensor out({s.frames, s.channels, out_height, out_width});
    const std::size_t in_plane = s.plane();
    const std::size_t out_plane = out_height * out_width;
    warp_planes(s.frames * s.channels, s.height, s.width, out_height, out_width, inv, [&](std::size_t p) {
        return std::pair<const double*, double*>{src.data().data() + p * in_plane, out.data().data() + p * out_plane};
    });
    return out;
}

VideoTensor affine_apply(const VideoTensor& src, const AffineTransform& t) {
    return affine_apply(src, t, src.shape().height, src.shape().width);
}

Mask affine_apply(const Mask& src, const AffineTransform& t, std::size_t out_height, std::size_t out_width) {
    const auto& s = src.shape();
    if (out_height == 0 || out_width == 0) {
        throw Error(ErrorKind::Shape, "affine_apply output dims must be positive");
    }
    if (t.is_identity() && out_height == s.height && out_width == s.width) {
        return src;
    }
    const AffineTransform inv = t.inverse();
    std::vector<double> data(s.frames * out_height * out_width, 0.0);
    warp_planes(s.frames, s.height, s.width, out_height, out_width, inv, [&](std::size_t p) {
        return std::pair<const double*, double*>{src.data().data() + p * s.plane(),
                                                 data.data() + p * out_height * out_width};
    });
    return Mask({s.frames, out_height, out_width}, std::move(data));
}

}  // namespace mvoc
