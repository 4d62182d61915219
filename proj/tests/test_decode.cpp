// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cwcd/decode.hpp"
#include "cwcd/error.hpp"
#include "cwcd/tabular_lm.hpp"
#include "support.hpp"

using namespace cwcd;
using cwcd::testing::fixture;

namespace {

VisualContext feat(std::string f) { return VisualContext{{}, std::move(f)}; }

std::vector<std::string> words(const TabularLM& m, const TokenSequence& s) {
    std::vector<std::string> out;
    for (auto t : s) out.push_back(m.vocabulary().text(t));
    return out;
}

// Adds a per-call constant to every logit of a wrapped model.
class Shifted final : public ConditionalLM {
public:
    Shifted(const ConditionalLM& inner, double shift) : inner_(inner), shift_(shift) {}
    const Vocabulary& vocabulary() const override { return inner_.vocabulary(); }
    bool exposes_attention() const override { return false; }
    std::size_t max_context() const override { return inner_.max_context(); }
    ModelOutput forward(const VisualContext& v, std::span<const TokenId> p, std::span<const TokenId> x) const override {
        auto out = inner_.forward(v, p, x);
        for (auto& z : out.logits) z += shift_ * static_cast<double>(x.size() + 1);
        return out;
    }

private:
    const ConditionalLM& inner_;
    double shift_;
};

class FailsAt final : public ConditionalLM {
public:
    explicit FailsAt(std::size_t step) : step_(step) { vocab_.add("x"); }
    const Vocabulary& vocabulary() const override { return vocab_; }
    bool exposes_attention() const override { return false; }
    std::size_t max_context() const override { return 100; }
    ModelOutput forward(const VisualContext&, std::span<const TokenId>, std::span<const TokenId> x) const override {
        if (x.size() == step_) throw ModelError("boom");
        return {{0.0, 0.0, 0.0, 1.0}, std::nullopt};
    }

private:
    Vocabulary vocab_;
    std::size_t step_;
};

const TokenSequence kPrompt{kBos};

}  // namespace

TEST_CASE("decode config validation and mode names") {
    DecodeConfig c;
    CHECK(c.alpha == 1.0);
    CHECK(c.beta == 0.5);
    CHECK(c.max_tokens == 128);
    CHECK(c.mode == DecodeMode::Cwcd);
    CHECK(c.vp_mode == VpMode::Category);
    CHECK(c.subselection_enabled);
    CHECK_NOTHROW(c.validate());
    c.beta = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.alpha = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.max_tokens = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    for (auto m : {DecodeMode::Greedy, DecodeMode::Cd, DecodeMode::Cw, DecodeMode::Cwcd}) {
        CHECK(parse_decode_mode(to_string(m)) == m);
    }
    for (auto m : {VpMode::None, VpMode::All, VpMode::Category}) CHECK(parse_vp_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_decode_mode("beam"), ConfigError);
    CHECK_THROWS_AS(parse_vp_mode("some"), ConfigError);
}

TEST_CASE("greedy on T1") {
    const auto t1 = load_tabular(fixture("T1.tlm"));
    DecodeConfig cfg;
    auto r = decode_greedy(t1, feat("A-present"), kPrompt, cfg);
    CHECK(words(t1, r.tokens) == std::vector<std::string>{"a", "<eos>"});
    CHECK(r.trace.steps.size() == 2);
    auto absent = decode_greedy(t1, feat("A-absent"), kPrompt, cfg);
    CHECK(words(t1, absent.tokens) == std::vector<std::string>{"<eos>"});
    CHECK(strip_eos(absent.tokens).empty());

    cfg.max_tokens = 1;
    auto one = decode_greedy(t1, feat("A-present"), kPrompt, cfg);
    CHECK(one.tokens.size() == 1);
}

TEST_CASE("contrastive decoding on T2") {
    const auto t2 = load_tabular(fixture("T2.tlm"));
    DecodeConfig cfg;
    auto g = decode_greedy(t2, feat("full"), kPrompt, cfg);
    CHECK(words(t2, g.tokens) == std::vector<std::string>{"a", "b", "<eos>"});

    auto cat = decode_contrastive(t2, feat("full"), feat("b_masked"), kPrompt, cfg);
    CHECK(words(t2, cat.tokens) == std::vector<std::string>{"a", "<eos>"});

    auto all = decode_contrastive(t2, feat("full"), feat("all_masked"), kPrompt, cfg);
    CHECK(words(t2, all.tokens) == std::vector<std::string>{"a", "b", "<eos>"});

    for (const auto& st : cat.trace.steps) {
        CHECK(st.vsub.contains(st.chosen));
        CHECK(st.vsub_size == st.vsub.size());
        CHECK_FALSE(st.masked_top.empty());
    }
    CHECK(cat.trace.steps[0].vsub_size == 1);
    CHECK(cat.trace.steps[1].vsub_size == 2);
}

TEST_CASE("contrastive reduces to greedy") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto m = cwcd::testing::random_tabular(seed);
        DecodeConfig g;
        g.max_tokens = 12;
        const auto base = feat("f0");
        const auto greedy = decode_greedy(m, base, kPrompt, g);

        DecodeConfig z = g;
        z.alpha = 0.0;
        z.subselection_enabled = false;
        CHECK(decode_contrastive(m, base, feat("f1"), kPrompt, z).tokens == greedy.tokens);

        for (double a : {0.5, 1.0, 2.0}) {
            for (double b : {0.0, 0.5, 1.0}) {
                DecodeConfig c = g;
                c.alpha = a;
                c.beta = b;
                CHECK(decode_contrastive(m, base, base, kPrompt, c).tokens == greedy.tokens);
            }
        }
    }
}

TEST_CASE("decode output is invariant to logit shifts") {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        const auto m = cwcd::testing::random_tabular(seed);
        const Shifted s(m, 123.25);
        DecodeConfig cfg;
        cfg.max_tokens = 10;
        CHECK(decode_greedy(s, feat("f1"), kPrompt, cfg).tokens == decode_greedy(m, feat("f1"), kPrompt, cfg).tokens);
        CHECK(decode_contrastive(s, feat("f1"), feat("f0"), kPrompt, cfg).tokens ==
              decode_contrastive(m, feat("f1"), feat("f0"), kPrompt, cfg).tokens);
    }
}

TEST_CASE("immediate EOS gives an empty body") {
    Vocabulary v;
    v.add("a");
    TabularLM::Table t;
    t[{"*", {}}] = {{kEos, 1.0}};
    TabularLM m(v, 1, 0.0, t);
    auto r = decode_greedy(m, feat("x"), kPrompt, DecodeConfig{});
    CHECK(r.tokens == TokenSequence{kEos});
    CHECK(strip_eos(r.tokens).empty());
}

TEST_CASE("model failures carry the step index") {
    FailsAt m(2);
    try {
        decode_greedy(m, feat(""), kPrompt, DecodeConfig{});
        FAIL("expected a decode error");
    } catch (const DecodeError& e) {
        CHECK(e.step() == 2);
    }
    CHECK_THROWS_AS(decode_contrastive(m, feat(""), feat(""), kPrompt, DecodeConfig{}), DecodeError);
    const TokenSequence bad_prompt{kBos, 99};
    CHECK_THROWS_AS(decode_greedy(m, feat(""), bad_prompt, DecodeConfig{}), ValidationError);
}

TEST_CASE("trace records top entries and the chosen token") {
    const auto m = cwcd::testing::random_tabular(77, 12);
    DecodeConfig cfg;
    cfg.max_tokens = 6;
    auto r = decode_contrastive(m, feat("f0"), feat("f1"), kPrompt, cfg);
    CHECK(r.trace.steps.size() == r.tokens.size());
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
        const auto& st = r.trace.steps[i];
        CHECK(st.chosen == r.tokens[i]);
        CHECK(st.vsub.contains(st.chosen));
        CHECK(st.base_top.size() >= kTraceTopK);
        CHECK(st.base_top.size() <= kTraceTopK + 1);
        bool found = false;
        for (const auto& [id, lp] : st.base_top) found = found || id == st.chosen;
        CHECK(found);
        CHECK(st.chosen_score > 0.0);
    }
}
