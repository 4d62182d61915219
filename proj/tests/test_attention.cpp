// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cwcd/attention.hpp"
#include "cwcd/corpus.hpp"
#include "cwcd/error.hpp"
#include "cwcd/tabular_lm.hpp"
#include "support.hpp"

using namespace cwcd;
using cwcd::testing::OracleAttentionLM;

namespace {

AttentionTensor random_tensor(std::mt19937_64& eng, std::size_t L, std::size_t H, std::size_t N) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AttentionTensor t(L, H, N);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t h = 0; h < H; ++h) {
            double s = 0.0;
            for (std::size_t i = 0; i < N; ++i) s += (t.at(l, h, i) = u(eng));
            for (std::size_t i = 0; i < N; ++i) t.at(l, h, i) /= s;
        }
    }
    return t;
}

VisualContext four_visual() {
    VisualContext v;
    v.tokens.ids = {0, 1, 2, 3};
    v.tokens.positions = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    v.tokens.levels = 8;
    return v;
}

}  // namespace

TEST_CASE("lama_step examples") {
    std::mt19937_64 eng(1);
    const auto t = random_tensor(eng, 3, 4, 7);
    CHECK(std::abs(lama_step(t, PositionSet::range(0, 7)) - 1.0) < 1e-12);
    CHECK(lama_step(t, PositionSet{}) == 0.0);
    CHECK_THROWS_AS(lama_step(t, PositionSet({7})), ValidationError);

    AttentionTensor hand(2, 1, 2);
    hand.at(0, 0, 0) = 0.4;
    hand.at(0, 0, 1) = 0.6;
    hand.at(1, 0, 0) = 0.6;
    hand.at(1, 0, 1) = 0.4;
    CHECK(lama_step(hand, PositionSet({0})) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("lama_step is monotone and permutation invariant") {
    std::mt19937_64 eng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_tensor(eng, 2, 3, 6);
        std::vector<int> members;
        double prev = 0.0;
        for (int i = 0; i < 6; ++i) {
            members.push_back(i);
            const double v = lama_step(t, PositionSet(members));
            CHECK(v >= prev - 1e-15);
            CHECK(v <= 1.0 + 1e-12);
            prev = v;
        }
        AttentionTensor swapped(2, 3, 6);
        for (std::size_t l = 0; l < 2; ++l) {
            for (std::size_t h = 0; h < 3; ++h) {
                for (std::size_t i = 0; i < 6; ++i) swapped.at(1 - l, 2 - h, i) = t.at(l, h, i);
            }
        }
        const PositionSet s({0, 2, 5});
        CHECK(lama_step(swapped, s) == doctest::Approx(lama_step(t, s)).epsilon(1e-14));
    }
}

TEST_CASE("lama_trace on constructed tensors") {
    OracleAttentionLM m(5, [](std::size_t t) { return 0.9 - 0.01 * static_cast<double>(t); });
    const TokenSequence prompt{kBos};
    const auto trace = lama_trace(m, four_visual(), prompt, DecodeConfig{}, "s");
    REQUIRE(trace.steps() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const double v = 0.9 - 0.01 * static_cast<double>(i + 1);
        CHECK(std::abs(trace.visual[i] - v) < 1e-9);
        CHECK(std::abs(trace.text[i] - (1.0 - v / 2)) < 1e-9);
        CHECK(trace.visual[i] >= 0.0);
        CHECK(trace.text[i] <= 1.0);
    }
    OracleAttentionLM single(1, [](std::size_t) { return 0.5; });
    CHECK(lama_trace(single, four_visual(), prompt, DecodeConfig{}).steps() == 1);

    const auto tab = load_tabular(cwcd::testing::fixture("T1.tlm"));
    CHECK_THROWS_AS(lama_trace(tab, VisualContext{}, prompt, DecodeConfig{}), ModelError);
}

TEST_CASE("trace csv") {
    CHECK(format_trace_csv({}) == "sequence_id,step,lama_visual,lama_text\n");
    LamaTrace one{"a", {0.5, 0.25}, {0.5, 0.75}};
    const auto csv = format_trace_csv({one});
    CHECK(csv ==
          "sequence_id,step,lama_visual,lama_text\n"
          "a,1,0.500000000,0.500000000\n"
          "a,2,0.250000000,0.750000000\n"
          "MEAN,1,0.500000000,0.500000000\n"
          "MEAN,2,0.250000000,0.750000000\n");
}

TEST_CASE("trace csv matches the golden file") {
    const TokenSequence prompt{kBos};
    OracleAttentionLM s1(3, [](std::size_t t) { return 0.9 - 0.01 * static_cast<double>(t); });
    OracleAttentionLM s2(2, [](std::size_t t) { return 0.8 - 0.02 * static_cast<double>(t); });
    std::vector<LamaTrace> traces{lama_trace(s1, four_visual(), prompt, DecodeConfig{}, "s1"),
                                  lama_trace(s2, four_visual(), prompt, DecodeConfig{}, "s2")};
    const auto dir = cwcd::testing::scratch_dir("lama");
    emit_trace_csv(traces, dir / "out.csv");
    CHECK(read_file(dir / "out.csv") == read_file(cwcd::testing::fixture("lama_golden.csv")));
}
