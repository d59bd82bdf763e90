// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mvoc {

/// (frames, channels, height, width), row-major.
struct Shape4 {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const noexcept { return frames * channels * height * width; }
    std::size_t plane() const noexcept { return height * width; }
    bool operator==(const Shape4&) const = default;
    std::string str() const;
};

/// (frames, height, width).
struct Shape3 {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const noexcept { return frames * height * width; }
    std::size_t plane() const noexcept { return height * width; }
    bool operator==(const Shape3&) const = default;
    std::string str() const;
};

/// Dense rank-4 real tensor holding videos, latents, noise and feature maps.
class VideoTensor {
public:
    VideoTensor() = default;
    explicit VideoTensor(Shape4 shape, double fill = 0.0);
    /// Throws on a length mismatch or a non-finite value.
    VideoTensor(Shape4 shape, std::vector<double> data);

    const Shape4& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    std::size_t index(std::size_t f, std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return ((f * shape_.channels + c) * shape_.height + h) * shape_.width + w;
    }
    double& at(std::size_t f, std::size_t c, std::size_t h, std::size_t w) noexcept {
        return data_[index(f, c, h, w)];
    }
    double at(std::size_t f, std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return data_[index(f, c, h, w)];
    }

    /// Contiguous C*H*W slice of one frame.
    std::span<double> frame(std::size_t f) noexcept;
    std::span<const double> frame(std::size_t f) const noexcept;

    VideoTensor& operator+=(const VideoTensor& other);
    VideoTensor& operator-=(const VideoTensor& other);
    VideoTensor& operator*=(double s) noexcept;

    bool operator==(const VideoTensor& other) const = default;

private:
    Shape4 shape_{};
    std::vector<double> data_;
};

VideoTensor operator+(VideoTensor a, const VideoTensor& b);
VideoTensor operator-(VideoTensor a, const VideoTensor& b);
VideoTensor operator*(VideoTensor a, double s);
VideoTensor operator*(double s, VideoTensor a);

/// a*x + b*y, shapes must agree.
VideoTensor lincomb(double a, const VideoTensor& x, double b, const VideoTensor& y);

double l2_norm(const VideoTensor& x);
double max_abs_diff(const VideoTensor& a, const VideoTensor& b);
/// ||a - b|| / ||b||; returns the absolute norm when b is zero.
double relative_l2(const VideoTensor& a, const VideoTensor& b);

void require_same_shape(const VideoTensor& a, const VideoTensor& b, const char* what);

/// Spatial gate in [0,1], broadcast over channels when applied to a VideoTensor.
class Mask {
public:
    Mask() = default;
    explicit Mask(Shape3 shape, double fill = 0.0);
    /// Values are clamped into [0,1]; non-finite values throw.
    Mask(Shape3 shape, std::vector<double> data);

    const Shape3& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    std::size_t index(std::size_t f, std::size_t h, std::size_t w) const noexcept {
        return (f * shape_.height + h) * shape_.width + w;
    }
    double at(std::size_t f, std::size_t h, std::size_t w) const noexcept { return data_[index(f, h, w)]; }
    /// Caller must keep the value in [0,1].
    double& at(std::size_t f, std::size_t h, std::size_t w) noexcept { return data_[index(f, h, w)]; }

    Mask binarized(double threshold = 0.5) const;
    bool is_binary() const noexcept;
    double sum() const noexcept;

    bool operator==(const Mask& other) const = default;

private:
    Shape3 shape_{};
    std::vector<double> data_;
};

Shape3 spatial_shape(const Shape4& s) noexcept;

/// Per-pixel displacement (dy, dx) from frame t to frame t + interval.
/// Stored as (frames - interval, 2, H, W).
class FlowField {
public:
    FlowField() = default;
    FlowField(VideoTensor field, std::size_t interval);

    const VideoTensor& field() const noexcept { return field_; }
    std::size_t interval() const noexcept { return interval_; }
    std::size_t pairs() const noexcept { return field_.shape().frames; }
    std::size_t height() const noexcept { return field_.shape().height; }
    std::size_t width() const noexcept { return field_.shape().width; }
    double dy(std::size_t t, std::size_t h, std::size_t w) const noexcept { return field_.at(t, 0, h, w); }
    double dx(std::size_t t, std::size_t h, std::size_t w) const noexcept { return field_.at(t, 1, h, w); }

private:
    VideoTensor field_;
    std::size_t interval_ = 1;
};

}  // namespace mvoc
