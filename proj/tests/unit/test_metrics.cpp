// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "mvoc/error.hpp"
#include "mvoc/metrics.hpp"
#include "oracles.hpp"

using namespace mvoc;

namespace {

bool throws_kind(ErrorKind k, auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind() == k;
    }
    return false;
}

VideoTensor constant_flow(std::size_t h, std::size_t w, double dy, double dx) {
    VideoTensor f({1, 2, h, w});
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            f.at(0, 0, i, j) = dy;
            f.at(0, 1, i, j) = dx;
        }
    return f;
}

VideoTensor flip_w(const VideoTensor& v, bool negate_dx) {
    const auto& s = v.shape();
    VideoTensor out(s);
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t i = 0; i < s.height; ++i)
                for (std::size_t j = 0; j < s.width; ++j) {
                    const double x = v.at(f, c, i, s.width - 1 - j);
                    out.at(f, c, i, j) = (negate_dx && c == 1) ? -x : x;
                }
    return out;
}

Mask flip_w(const Mask& m) {
    const auto& s = m.shape();
    Mask out(s);
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t i = 0; i < s.height; ++i)
            for (std::size_t j = 0; j < s.width; ++j) out.at(f, i, j) = m.at(f, i, s.width - 1 - j);
    return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("warp_frame examples") {
    const auto img = oracle::random_video({1, 3, 5, 6}, 1);
    const auto id = warp_frame(img, constant_flow(5, 6, 0, 0));
    CHECK(id.image == img);
    CHECK(id.in_bounds.sum() == 30.0);

    VideoTensor hot({1, 1, 3, 3});
    hot.at(0, 0, 1, 1) = 1.0;
    const auto w = warp_frame(hot, constant_flow(3, 3, 0, 1));
    // out(p) = in(p + flow): the hot pixel shows up one column to the left
    VideoTensor want({1, 1, 3, 3});
    want.at(0, 0, 1, 0) = 1.0;
    CHECK(w.image == want);
    CHECK(w.in_bounds.at(0, 1, 2) == 0.0);
    CHECK(w.in_bounds.sum() == 6.0);

    const VideoTensor c({1, 2, 8, 8}, 0.4);
    const auto there = warp_frame(c, constant_flow(8, 8, 0.3, -0.7)).image;
    const auto back = warp_frame(there, constant_flow(8, 8, -0.3, 0.7)).image;
    for (std::size_t i = 2; i < 6; ++i)
        for (std::size_t j = 2; j < 6; ++j) CHECK(back.at(0, 1, i, j) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(throws_kind(ErrorKind::Shape, [&] { warp_frame(c, constant_flow(8, 7, 0, 0)); }));
}

TEST_CASE("warping_error examples") {
    const auto a = oracle::random_video({1, 3, 6, 6}, 2);
    const Mask full({1, 6, 6}, 1.0);
    CHECK(warping_error(a, a, constant_flow(6, 6, 0, 0), full) == 0.0);

    const auto g = oracle::random_video({1, 1, 6, 6}, 3);
    CHECK(warping_error(g, g + VideoTensor(g.shape(), 0.1), constant_flow(6, 6, 0, 0), full) ==
          doctest::Approx(0.01).epsilon(1e-12));
    // squared norms add over channels
    CHECK(warping_error(a, a + VideoTensor(a.shape(), 0.1), constant_flow(6, 6, 0, 0), full) ==
          doctest::Approx(0.03).epsilon(1e-12));
    CHECK(throws_kind(ErrorKind::UndefinedMetric,
                      [&] { warping_error(a, a, constant_flow(6, 6, 0, 0), Mask({1, 6, 6}, 0.0)); }));
    // every sample leaves the grid
    CHECK(throws_kind(ErrorKind::UndefinedMetric, [&] { warping_error(a, a, constant_flow(6, 6, 9, 0), full); }));
}

TEST_CASE("warping_error matches a per-pixel loop") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t C = 1 + seed % 3;
        const auto a = oracle::random_video({1, C, 8, 8}, 100 + seed);
        const auto b = oracle::random_video({1, C, 8, 8}, 200 + seed);
        const auto flow = oracle::random_video({1, 2, 8, 8}, 300 + seed, -2.0, 2.0);
        const auto m = oracle::random_binary_mask({1, 8, 8}, 400 + seed);
        CHECK(std::abs(warping_error(a, b, flow, m) - oracle::warping_error_loop(a, b, flow, m)) <= 1e-12);
    }
}

TEST_CASE("sequence error over F - G pairs") {
    const auto frame = oracle::random_video({1, 3, 8, 8}, 4);
    VideoTensor video({8, 3, 8, 8});
    for (std::size_t f = 0; f < 8; ++f) std::copy(frame.data().begin(), frame.data().end(), video.frame(f).begin());
    for (std::size_t g : {2u, 4u}) {
        WarpMetricConfig cfg;
        cfg.interval = g;
        const FlowField flow(VideoTensor({8 - g, 2, 8, 8}), g);
        const auto r = sequence_warping_error(video, flow, Mask({8 - g, 8, 8}, 1.0), cfg);
        CHECK(r.per_pair.size() == 8 - g);
        CHECK(r.mean == 0.0);
    }

    const auto noisy = oracle::random_video({6, 1, 5, 5}, 5);
    WarpMetricConfig cfg;
    const FlowField flow(oracle::random_video({4, 2, 5, 5}, 6, -1, 1), 2);
    const auto masks = oracle::random_binary_mask({4, 5, 5}, 7, 0.7);
    const auto r = sequence_warping_error(noisy, flow, masks, cfg);
    double sum = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
        Mask m({1, 5, 5});
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) m.at(0, i, j) = masks.at(t, i, j);
        const double want = oracle::warping_error_loop(frame_slice(noisy, t), frame_slice(noisy, t + 2),
                                                       flow_slice(flow, t), m);
        CHECK(std::abs(r.per_pair[t] - want) <= 1e-12);
        sum += want;
    }
    CHECK(std::abs(r.mean - sum / 4) <= 1e-12);

    cfg.interval = 6;
    CHECK(throws_kind(ErrorKind::Parameter, [&] { cfg.validate(6); }));
    cfg.interval = 0;
    CHECK(throws_kind(ErrorKind::Parameter, [&] { cfg.validate(6); }));
    cfg.interval = 4;
    CHECK(throws_kind(ErrorKind::Shape, [&] { sequence_warping_error(noisy, flow, masks, cfg); }));
}

TEST_CASE("flip symmetry") {
    const auto a = oracle::random_video({1, 2, 8, 8}, 8);
    const auto b = oracle::random_video({1, 2, 8, 8}, 9);
    const auto flow = oracle::random_video({1, 2, 8, 8}, 10, -1.5, 1.5);
    const auto m = oracle::random_binary_mask({1, 8, 8}, 11);
    const double e = warping_error(a, b, flow, m);
    const double ef = warping_error(flip_w(a, false), flip_w(b, false), flip_w(flow, true), flip_w(m));
    CHECK(ef == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("added noise raises the metric by its variance") {
    const double sd = 0.05;
    const auto a = oracle::random_video({1, 1, 64, 64}, 12);
    double acc = 0.0;
    const int trials = 20;
    for (int k = 0; k < trials; ++k) {
        const auto b = a + oracle::gaussian_video(a.shape(), 500 + k, sd);
        acc += warping_error(a, b, constant_flow(64, 64, 0, 0), Mask({1, 64, 64}, 1.0));
    }
    CHECK(std::abs(acc / trials - sd * sd) <= 0.1 * sd * sd);
}

TEST_CASE("mask restricted to agreeing pixels gives zero") {
    auto a = oracle::random_video({1, 1, 6, 6}, 13);
    auto b = oracle::random_video({1, 1, 6, 6}, 14);
    Mask m({1, 6, 6});
    for (std::size_t j = 0; j < 6; ++j) {
        b.at(0, 0, 2, j) = a.at(0, 0, 2, j);
        m.at(0, 2, j) = 1.0;
    }
    CHECK(warping_error(a, b, constant_flow(6, 6, 0, 0), m) == 0.0);
}

TEST_CASE("block matching recovers integer shifts") {
    const auto tex = oracle::random_video({1, 1, 24, 24}, 15);
    VideoTensor video({2, 1, 16, 16});
    // frame 1 content moved by (+2, -1)
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
            video.at(0, 0, i, j) = tex.at(0, 0, i + 4, j + 4);
            video.at(1, 0, i, j) = tex.at(0, 0, i + 2, j + 5);
        }
    const auto fw = block_match_flow(frame_slice(video, 0), frame_slice(video, 1), 3);
    for (std::size_t i = 4; i < 12; ++i)
        for (std::size_t j = 4; j < 12; ++j) {
            CHECK(fw.at(0, 0, i, j) == 2.0);
            CHECK(fw.at(0, 1, i, j) == -1.0);
        }
    const auto bw = block_match_flow(frame_slice(video, 1), frame_slice(video, 0), 3);
    const auto valid = forward_backward_valid(fw, bw, 1.0);
    CHECK(valid.at(0, 8, 8) == 1.0);

    WarpMetricConfig cfg;
    cfg.interval = 1;
    cfg.source = FlowSource::Estimate;
    const auto est = estimate_flow(video, cfg);
    CHECK(est.flow.pairs() == 1);
    // the estimated flow warps frame 2 back onto frame 1 wherever it is consistent
    const auto r = sequence_warping_error(video, est.flow, est.valid, cfg);
    CHECK(r.mean <= 1e-20);
}

TEST_CASE("csv report") {
    SequenceWarpResult r{{0.5, 0.25}, 0.375};
    CHECK(warp_report_csv(r) == "t,error\n1,0.5\n2,0.25\nmean,0.375\n");
}

}  // TEST_SUITE
