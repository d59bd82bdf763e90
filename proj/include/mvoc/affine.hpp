// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>

#include "mvoc/tensor.hpp"

namespace mvoc {

/// Grid coordinate; pixel centers sit on integers.
struct GridPoint {
    double y = 0.0;
    double x = 0.0;
};

/// 2x3 placement transform acting on (row, col) coordinates:
///   y' = m[0]*y + m[1]*x + m[2]
///   x' = m[3]*y + m[4]*x + m[5]
/// Units are pixels of the grid it is applied on.
class AffineTransform {
public:
    AffineTransform() = default;
    /// Throws SingularTransform when |det| of the linear block is <= 1e-9.
    explicit AffineTransform(const std::array<double, 6>& m);

    static AffineTransform identity() { return {}; }
    static AffineTransform translation(double dy, double dx);
    static AffineTransform scaling(double sy, double sx);
    /// Rotation by `radians` about `center`.
    static AffineTransform rotation(double radians, GridPoint center);

    const std::array<double, 6>& matrix() const noexcept { return m_; }
    double determinant() const noexcept { return m_[0] * m_[4] - m_[1] * m_[3]; }
    bool is_identity() const noexcept;

    GridPoint apply(GridPoint p) const noexcept;
    GridPoint apply_linear(GridPoint v) const noexcept;
    AffineTransform inverse() const;
    /// (*this) after `first`.
    AffineTransform after(const AffineTransform& first) const;

    /// The same placement expressed on a grid resampled by (scale_y, scale_x),
    /// e.g. 0.5 for a 2x average-pooled feature map. Pixel centers stay aligned.
    AffineTransform rescaled(double scale_y, double scale_x) const;

    bool operator==(const AffineTransform&) const = default;

private:
    std::array<double, 6> m_{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
};

/// Inverse-warp resampling: every output pixel p pulls from t^-1(p) in `src`
/// with bilinear interpolation. Samples falling outside the source grid are zero.
VideoTensor affine_apply(const VideoTensor& src, const AffineTransform& t, std::size_t out_height,
                         std::size_t out_width);
VideoTensor affine_apply(const VideoTensor& src, const AffineTransform& t);

/// Same resampling for masks; the result is not re-binarized.
Mask affine_apply(const Mask& src, const AffineTransform& t, std::size_t out_height, std::size_t out_width);

/// Bilinear sample of one plane at a fractional position. Returns false (and
/// leaves `out` at zero) when the position lies outside [0,H-1]x[0,W-1].
bool sample_bilinear(const double* plane, std::size_t height, std::size_t width, double y, double x,
                     double& out) noexcept;

}  // namespace mvoc
