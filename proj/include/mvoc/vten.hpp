// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvoc/tensor.hpp"

namespace mvoc {

// .vten container:
//   "VTEN" | u8 version (0x01) | u8 rank | rank x u32 LE dims | float32 LE row-major payload

inline constexpr std::uint8_t kVtenVersion = 0x01;

struct RawTensor {
    std::vector<std::size_t> dims;
    std::vector<double> values;
};

std::vector<std::uint8_t> encode_vten(std::span<const std::size_t> dims, std::span<const double> values);
RawTensor decode_vten(std::span<const std::uint8_t> bytes);

void write_vten(const std::filesystem::path& path, std::span<const std::size_t> dims, std::span<const double> values);
RawTensor read_vten(const std::filesystem::path& path);

void save_video(const std::filesystem::path& path, const VideoTensor& t);
VideoTensor load_video(const std::filesystem::path& path);

void save_mask(const std::filesystem::path& path, const Mask& m);
/// Accepts rank 3 (F,H,W) or rank 4 with a single channel.
Mask load_mask(const std::filesystem::path& path);

void save_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField load_flow(const std::filesystem::path& path, std::size_t interval);

/// Rounds every value to the nearest float32, i.e. what a .vten round trip keeps.
VideoTensor quantize_f32(const VideoTensor& t);

}  // namespace mvoc
