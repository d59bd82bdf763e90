// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "mvoc/empirical_denoiser.hpp"
#include "mvoc/error.hpp"
#include "mvoc/guidance.hpp"
#include "oracles.hpp"

using namespace mvoc;

namespace {

VideoTensor scalar(double v) { return VideoTensor({1, 1, 1, 1}, std::vector<double>{v}); }

bool throws_kind(ErrorKind k, auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind() == k;
    }
    return false;
}

std::vector<VideoTensor> random_terms(std::size_t n, std::uint64_t seed) {
    std::vector<VideoTensor> t;
    for (std::size_t i = 0; i <= n; ++i) t.push_back(oracle::gaussian_video({2, 1, 3, 3}, seed * 31 + i));
    return t;
}

}  // namespace

TEST_SUITE("guidance") {

TEST_CASE("weights to omega") {
    CHECK(weights_to_omega(GuidanceWeights{}) == std::vector<double>{1.0});
    CHECK(weights_to_omega(GuidanceWeights::uniform(3)) == std::vector<double>{0.0, 0.0, 0.0, 1.0});
    const auto o = weights_to_omega(GuidanceWeights({2.0, 0.5}));
    CHECK(o == std::vector<double>{-1.0, 1.5, 0.5});

    GuidanceWeights w({1.0, 1.0});
    w.set(2, 3.0);
    CHECK(w.omega() == std::vector<double>{0.0, -2.0, 3.0});
    CHECK(w.w_at(0) == 1.0);
    CHECK(w.w_at(3) == 0.0);
    CHECK(throws_kind(ErrorKind::Range, [&] { w.set(0, 1.0); }));
    CHECK(throws_kind(ErrorKind::Parameter, [] { GuidanceWeights({NAN}); }));
}

TEST_CASE("omega sums to one") {
    std::mt19937_64 g(5);
    std::normal_distribution<double> n(0.0, 3.0);
    for (std::size_t k = 0; k < 50; ++k) {
        std::vector<double> w(k % 6);
        for (auto& v : w) v = n(g);
        double sum = 0.0;
        for (double v : weights_to_omega(GuidanceWeights(w))) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("chained composition examples") {
    const auto terms = random_terms(3, 1);
    CHECK(compose_eps_chained(terms, GuidanceWeights({0.0, 0.0, 0.0})) == terms[0]);
    CHECK(max_abs_diff(compose_eps_chained(terms, GuidanceWeights::uniform(3)), terms[3]) <= 1e-15);
    const std::vector<VideoTensor> s{scalar(1), scalar(3), scalar(7)};
    CHECK(compose_eps_chained(s, GuidanceWeights({2.0, 0.5})).at(0, 0, 0, 0) == doctest::Approx(7.0));
    CHECK(throws_kind(ErrorKind::Arity, [&] { compose_eps_chained(s, GuidanceWeights({1.0})); }));
}

TEST_CASE("cfg and independent reductions") {
    CHECK(cfg(scalar(0), scalar(1), 7.5).at(0, 0, 0, 0) == 7.5);
    const auto t = random_terms(1, 2);
    CHECK(cfg(t[0], t[1], 0.0) == t[0]);
    CHECK(max_abs_diff(cfg(t[0], t[1], 1.0), t[1]) <= 1e-15);
    for (double w : {-0.5, 0.0, 0.3, 2.0, 7.5}) {
        const GuidanceWeights gw({w});
        const std::vector<VideoTensor> single{t[1]};
        CHECK(max_abs_diff(compose_eps_independent(t[0], single, gw), cfg(t[0], t[1], w)) <= 1e-15);
        CHECK(max_abs_diff(compose_eps_chained(t, gw), cfg(t[0], t[1], w)) <= 1e-15);
    }
    const std::vector<VideoTensor> singles{t[1], t[1]};
    CHECK(compose_eps_independent(t[0], singles, GuidanceWeights({0.0, 0.0})) == t[0]);
    CHECK(throws_kind(ErrorKind::Arity, [&] { compose_eps_independent(t[0], singles, GuidanceWeights({1.0})); }));
    CHECK(throws_kind(ErrorKind::Shape, [&] { cfg(t[0], scalar(1), 1.0); }));
}

TEST_CASE("omega form equals chained form") {
    std::mt19937_64 g(9);
    std::normal_distribution<double> n(0.0, 2.0);
    for (std::uint64_t k = 0; k < 100; ++k) {
        const std::size_t N = 1 + k % 5;
        std::vector<double> w(N);
        for (auto& v : w) v = n(g);
        const GuidanceWeights gw(w);
        const auto terms = random_terms(N, k);
        const auto a = compose_eps_chained(terms, gw);
        const auto b = compose_eps_omega(terms, weights_to_omega(gw));
        CHECK(relative_l2(b, a) <= 1e-12);
    }
    const auto t = random_terms(2, 3);
    CHECK(compose_eps_omega(t, std::vector<double>{1.0, 0.0, 0.0}) == t[0]);
    CHECK(compose_eps_omega(t, std::vector<double>{0.0, 0.0, 1.0}) == t[2]);
    CHECK(throws_kind(ErrorKind::Arity, [&] { compose_eps_omega(t, std::vector<double>{1.0}); }));
}

TEST_CASE("composers are linear in their terms") {
    const auto t = random_terms(2, 4);
    std::vector<VideoTensor> t3;
    for (const auto& x : t) t3.push_back(3.0 * x);
    const GuidanceWeights w({1.5, -0.25});
    CHECK(max_abs_diff(compose_eps_chained(t3, w), 3.0 * compose_eps_chained(t, w)) <= 1e-12);
    const std::vector<VideoTensor> single{t[1], t[2]}, single3{t3[1], t3[2]};
    CHECK(max_abs_diff(compose_eps_independent(t3[0], single3, w), 3.0 * compose_eps_independent(t[0], single, w)) <=
          1e-12);
}

// Labels restrict independent coordinates: "a" pins coordinate 0, "b" coordinate 1.
TEST_CASE("chained composite equals the conditional oracle on disjoint conditions") {
    const auto s = default_schedule();
    const std::vector<double> c0{-0.6, 0.5}, c1{0.3, -0.9};
    Dataset d;
    std::vector<std::vector<double>> all, only_a, both;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            std::set<std::string> lab;
            if (i == 0) lab.insert("a");
            if (j == 0) lab.insert("b");
            const std::vector<double> p{c0[i], c1[j]};
            d.add(VideoTensor({1, 1, 1, 2}, p), lab);
            all.push_back(p);
            if (i == 0) only_a.push_back(p);
            if (i == 0 && j == 0) both.push_back(p);
        }
    }
    for (int t : {1, 500, 1000}) {
        const double ab = s.alpha_bar(t);
        for (std::uint64_t k = 0; k < 5; ++k) {
            const auto xt = oracle::gaussian_video({1, 1, 1, 2}, 50 + k, 0.7);
            const std::vector<double> xv{xt.at(0, 0, 0, 0), xt.at(0, 0, 0, 1)};
            const std::vector<VideoTensor> terms{eps_empirical(xt, t, d, s, {}), eps_empirical(xt, t, d, s, {"a"}),
                                                 eps_empirical(xt, t, d, s, {"a", "b"})};
            const auto got = compose_eps_chained(terms, GuidanceWeights::uniform(2));
            const auto want = oracle::eps(both, xv, ab);
            CHECK(std::abs(got.at(0, 0, 0, 0) - want[0]) <= 1e-10);
            CHECK(std::abs(got.at(0, 0, 0, 1) - want[1]) <= 1e-10);

            // disjoint conditions make chained and independent compositions agree
            const std::vector<VideoTensor> single{terms[1], eps_empirical(xt, t, d, s, {"b"})};
            const GuidanceWeights w({1.7, 0.4});
            CHECK(max_abs_diff(compose_eps_chained(terms, w), compose_eps_independent(terms[0], single, w)) <= 1e-10);
        }
    }
}

}  // TEST_SUITE
