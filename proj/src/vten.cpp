// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/vten.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mvoc/error.hpp"

namespace mvoc {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
    }
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_vten(std::span<const std::size_t> dims, std::span<const double> values) {
    if (dims.empty() || dims.size() > 255) {
        throw Error(ErrorKind::Shape, "vten rank must be in [1,255]");
    }
    std::size_t count = 1;
    for (std::size_t d : dims) {
        if (d > 0xFFFFFFFFu) {
            throw Error(ErrorKind::Shape, "vten dim exceeds u32");
        }
        count *= d;
    }
    if (count != values.size()) {
        throw Error(ErrorKind::Shape, "vten payload length does not match dims");
    }
    std::vector<std::uint8_t> out;
    out.reserve(6 + 4 * dims.size() + 4 * values.size());
    out.insert(out.end(), {'V', 'T', 'E', 'N', kVtenVersion, static_cast<std::uint8_t>(dims.size())});
    for (std::size_t d : dims) {
        put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (double v : values) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

RawTensor decode_vten(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 6 || std::memcmp(bytes.data(), "VTEN", 4) != 0) {
        throw Error(ErrorKind::Io, "not a vten stream (bad magic)");
    }
    if (bytes[4] != kVtenVersion) {
        throw Error(ErrorKind::Io, "unsupported vten version " + std::to_string(bytes[4]));
    }
    const std::size_t rank = bytes[5];
    if (rank == 0 || bytes.size() < 6 + 4 * rank) {
        throw Error(ErrorKind::Io, "truncated vten header");
    }
    RawTensor raw;
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        raw.dims.push_back(get_u32(bytes, 6 + 4 * i));
        count *= raw.dims.back();
    }
    const std::size_t payload = 6 + 4 * rank;
    if (bytes.size() != payload + 4 * count) {
        throw Error(ErrorKind::Io, "vten payload size mismatch");
    }
    raw.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        raw.values[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, payload + 4 * i)));
    }
    return raw;
}

void write_vten(const std::filesystem::path& path, std::span<const std::size_t> dims, std::span<const double> values) {
    const auto bytes = encode_vten(dims, values);
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw Error(ErrorKind::Io, "failed writing " + path.string());
    }
}

RawTensor read_vten(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    try {
        return decode_vten(bytes);
    } catch (const Error& e) {
        throw Error(ErrorKind::Io, path.string() + ": " + e.what());
    }
}

void save_video(const std::filesystem::path& path, const VideoTensor& t) {
    const auto& s = t.shape();
    const std::size_t dims[] = {s.frames, s.channels, s.height, s.width};
    write_vten(path, dims, t.data());
}

VideoTensor load_video(const std::filesystem::path& path) {
    auto raw = read_vten(path);
    if (raw.dims.size() != 4) {
        throw Error(ErrorKind::Io, path.string() + ": expected rank 4, got " + std::to_string(raw.dims.size()));
    }
    try {
        return VideoTensor({raw.dims[0], raw.dims[1], raw.dims[2], raw.dims[3]}, std::move(raw.values));
    } catch (const Error& e) {
        throw Error(ErrorKind::Io, path.string() + ": " + e.what());
    }
}

void save_mask(const std::filesystem::path& path, const Mask& m) {
    const auto& s = m.shape();
    const std::size_t dims[] = {s.frames, s.height, s.width};
    write_vten(path, dims, m.data());
}

Mask load_mask(const std::filesystem::path& path) {
    auto raw = read_vten(path);
    if (raw.dims.size() == 4 && raw.dims[1] == 1) {
        return Mask({raw.dims[0], raw.dims[2], raw.dims[3]}, std::move(raw.values));
    }
    if (raw.dims.size() != 3) {
        throw Error(ErrorKind::Io, path.string() + ": expected a rank-3 mask");
    }
    return Mask({raw.dims[0], raw.dims[1], raw.dims[2]}, std::move(raw.values));
}

void save_flow(const std::filesystem::path& path, const FlowField& flow) { save_video(path, flow.field()); }

FlowField load_flow(const std::filesystem::path& path, std::size_t interval) {
    return FlowField(load_video(path), interval);
}

VideoTensor quantize_f32(const VideoTensor& t) {
    VideoTensor out = t;
    for (double& v : out.data()) {
        v = static_cast<double>(static_cast<float>(v));
    }
    return out;
}

}  // namespace mvoc
