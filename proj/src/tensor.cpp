// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mvoc/error.hpp"

namespace mvoc {

std::string Shape4::str() const {
    return "(" + std::to_string(frames) + "," + std::to_string(channels) + "," + std::to_string(height) + "," +
           std::to_string(width) + ")";
}

std::string Shape3::str() const {
    return "(" + std::to_string(frames) + "," + std::to_string(height) + "," + std::to_string(width) + ")";
}

VideoTensor::VideoTensor(Shape4 shape, double fill) : shape_(shape), data_(shape.size(), fill) {
    if (!std::isfinite(fill)) {
        throw Error(ErrorKind::Numeric, "non-finite fill value");
    }
}

VideoTensor::VideoTensor(Shape4 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw Error(ErrorKind::Shape, "data length " + std::to_string(data_.size()) + " does not match " + shape_.str());
    }
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Numeric, "non-finite value in tensor " + shape_.str());
        }
    }
}

std::span<double> VideoTensor::frame(std::size_t f) noexcept {
    const std::size_t n = shape_.channels * shape_.plane();
    return std::span<double>(data_).subspan(f * n, n);
}

std::span<const double> VideoTensor::frame(std::size_t f) const noexcept {
    const std::size_t n = shape_.channels * shape_.plane();
    return std::span<const double>(data_).subspan(f * n, n);
}

void require_same_shape(const VideoTensor& a, const VideoTensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw Error(ErrorKind::Shape, std::string(what) + ": " + a.shape().str() + " vs " + b.shape().str());
    }
}

VideoTensor& VideoTensor::operator+=(const VideoTensor& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

VideoTensor& VideoTensor::operator-=(const VideoTensor& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

VideoTensor& VideoTensor::operator*=(double s) noexcept {
    for (double& v : data_) {
        v *= s;
    }
    return *this;
}

VideoTensor operator+(VideoTensor a, const VideoTensor& b) { return a += b; }
VideoTensor operator-(VideoTensor a, const VideoTensor& b) { return a -= b; }
VideoTensor operator*(VideoTensor a, double s) { return a *= s; }
VideoTensor operator*(double s, VideoTensor a) { return a *= s; }

VideoTensor lincomb(double a, const VideoTensor& x, double b, const VideoTensor& y) {
    require_same_shape(x, y, "lincomb");
    VideoTensor out(x.shape());
    auto o = out.data();
    auto xs = x.data();
    auto ys = y.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = a * xs[i] + b * ys[i];
    }
    return out;
}

double l2_norm(const VideoTensor& x) {
    double s = 0.0;
    for (double v : x.data()) {
        s += v * v;
    }
    return std::sqrt(s);
}

double max_abs_diff(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

double relative_l2(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "relative_l2");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        num += d * d;
        den += b.data()[i] * b.data()[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

Mask::Mask(Shape3 shape, double fill) : shape_(shape), data_(shape.size(), std::clamp(fill, 0.0, 1.0)) {}

Mask::Mask(Shape3 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw Error(ErrorKind::Shape, "mask length " + std::to_string(data_.size()) + " does not match " + shape_.str());
    }
    for (double& v : data_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::Numeric, "non-finite value in mask");
        }
        v = std::clamp(v, 0.0, 1.0);
    }
}

Mask Mask::binarized(double threshold) const {
    Mask out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
        out.data_[i] = data_[i] >= threshold ? 1.0 : 0.0;
    }
    return out;
}

bool Mask::is_binary() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

double Mask::sum() const noexcept {
    double s = 0.0;
    for (double v : data_) {
        s += v;
    }
    return s;
}

Shape3 spatial_shape(const Shape4& s) noexcept { return {s.frames, s.height, s.width}; }

FlowField::FlowField(VideoTensor field, std::size_t interval) : field_(std::move(field)), interval_(interval) {
    const auto& s = field_.shape();
    if (s.channels != 2) {
        throw Error(ErrorKind::Shape, "flow field needs 2 channels, got " + s.str());
    }
    if (interval_ < 1) {
        throw Error(ErrorKind::Parameter, "flow interval must be >= 1");
    }
    const double limit = static_cast<double>(std::max(s.height, s.width));
    for (std::size_t t = 0; t < s.frames; ++t) {
        for (std::size_t h = 0; h < s.height; ++h) {
            for (std::size_t w = 0; w < s.width; ++w) {
                if (std::hypot(field_.at(t, 0, h, w), field_.at(t, 1, h, w)) > limit) {
                    throw Error(ErrorKind::Numeric, "flow displacement exceeds frame size");
                }
            }
        }
    }
}

}  // namespace mvoc
