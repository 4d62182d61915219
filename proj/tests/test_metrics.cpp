// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "cwcd/error.hpp"
#include "cwcd/metrics.hpp"

using namespace cwcd;

namespace {

WordList w(std::string_view s) { return tokenize_words(s); }

std::vector<IdReport> fixture_refs() {
    return {{"r1", parse_structured("Pleura:\n- No effusion.\n")},
            {"r2", parse_structured("Cardiovascular:\n- Heart is enlarged.\n")},
            {"r3", parse_structured("Pleura:\n- Small effusion.\nOther:\n- Rib fracture.\n")}};
}

std::vector<IdReport> fixture_preds() {
    return {{"r1", parse_structured("Pleura:\n- No effusion.\n")},
            {"r2", parse_structured("Cardiovascular:\n- Heart is normal.\n")},
            {"r3", parse_structured("Pleura:\n- Small effusion.\n")}};
}

}  // namespace

TEST_CASE("tokenizer") {
    CHECK(w("No pleural Effusion.") == WordList{"no", "pleural", "effusion", "."});
    CHECK(w("Lungs and Airways:\n- a,b") == WordList{"lungs", "and", "airways", ":", "-", "a", ",", "b"});
    CHECK(w("   ").empty());
}

TEST_CASE("bleu examples") {
    const auto s = w("the cat sat on the mat");
    for (int n = 1; n <= 4; ++n) CHECK(bleu(s, s, n) == 1.0);
    CHECK(bleu(w("the the the"), w("the cat"), 1) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(bleu(w("a b"), w("b a"), 2) == 0.0);
    CHECK(bleu(w("a b"), w("b a"), 2, true) > 0.0);
    CHECK(bleu({}, w("a"), 1) == 0.0);
    // Brevity: c = 2, r = 4.
    CHECK(bleu(w("a b"), w("a b c d"), 1) == doctest::Approx(std::exp(1.0 - 2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(bleu(s, s, 5), ConfigError);
}

TEST_CASE("corpus bleu pools counts") {
    const std::vector<std::pair<WordList, WordList>> pairs{{w("a b c"), w("a b c")}, {w("x"), w("y")}};
    // 3 + 0 matched unigrams over 4, c = r = 4.
    CHECK(corpus_bleu(pairs, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("rouge examples") {
    const auto a = w("a b c d");
    for (auto r : {rouge_n(a, a, 1), rouge_n(a, a, 2), rouge_l(a, a)}) {
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.f1 == 1.0);
    }
    const auto l = rouge_l(w("a b c d"), w("a c d e"));
    CHECK(l.precision == 0.75);
    CHECK(l.recall == 0.75);
    CHECK(l.f1 == doctest::Approx(0.75).epsilon(1e-15));
    const auto d = rouge_n(w("a b"), w("c d"), 1);
    CHECK(d.precision == 0.0);
    CHECK(d.recall == 0.0);
    CHECK(d.f1 == 0.0);
    const auto e = rouge_l({}, {});
    CHECK(e.f1 == 0.0);
    CHECK(rouge_n(w("a b a"), w("a a"), 1).recall == 1.0);
}

TEST_CASE("rouge_l recall times reference length is the lcs") {
    std::mt19937_64 eng(3);
    const WordList alphabet{"a", "b", "c", "d"};
    for (int trial = 0; trial < 200; ++trial) {
        WordList h, r;
        for (auto n = eng() % 9; n > 0; --n) h.push_back(alphabet[eng() % 4]);
        for (auto n = 1 + eng() % 9; n > 0; --n) r.push_back(alphabet[eng() % 4]);
        const auto lcs = lcs_length(h, r);
        CHECK(std::llround(rouge_l(h, r).recall * static_cast<double>(r.size())) == static_cast<long long>(lcs));
        for (int n = 1; n <= 2; ++n) {
            const auto x = rouge_n(h, r, n);
            CHECK(x.f1 >= 0.0);
            CHECK(x.f1 <= 1.0);
        }
        const double b = bleu(h, r, 2, true);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
    }
}

TEST_CASE("label_prf examples") {
    const std::vector<LabelMultiset> gold{{"A"}, {"A"}, {}, {"A"}, {"B"}, {"B"}};
    const std::vector<LabelMultiset> pred{{"A"}, {"A"}, {"A"}, {}, {"B"}, {}};
    const auto p = label_prf(pred, gold);
    CHECK(p.precision == doctest::Approx(0.8).epsilon(1e-12));
    // Recall: A 2/3, B 1/2 -> (2 + 1) / 5.
    CHECK(p.recall == doctest::Approx(0.6).epsilon(1e-12));
    const double fa = 2.0 / 3, fb = 2.0 * 0.5 / 1.5;
    CHECK(p.f1 == doctest::Approx((3 * fa + 2 * fb) / 5).epsilon(1e-12));
    CHECK(p.f1 >= std::min(fa, fb));
    CHECK(p.f1 <= std::max(fa, fb));

    const auto same = label_prf(gold, gold);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);

    const auto none = label_prf(std::vector<LabelMultiset>(6), gold);
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);

    CHECK_THROWS_AS(label_prf({{}, {}}, {{}, {}}), EvaluationError);
    CHECK_THROWS_AS(label_prf({{"A"}}, {{"A"}, {"A"}}), EvaluationError);
}

TEST_CASE("observation labels") {
    const auto r = parse_structured("Pleura:\n- No   Effusion.\nOther:\n- x\n");
    CHECK(observation_labels(r, std::nullopt) == LabelMultiset{"no effusion.", "x"});
    CHECK(observation_labels(r, Category::Other) == LabelMultiset{"x"});
}

TEST_CASE("evaluate_corpus identity") {
    const auto refs = fixture_refs();
    const auto rep = evaluate_corpus(refs, refs);
    for (double v : rep.overall.bleu) CHECK(v == 1.0);
    CHECK(rep.overall.rouge_1 == 1.0);
    CHECK(rep.overall.rouge_2 == 1.0);
    CHECK(rep.overall.rouge_l == 1.0);
    CHECK(rep.overall.precision == 1.0);
    CHECK(rep.overall.recall == 1.0);
    CHECK(rep.overall.f1 == 1.0);
    CHECK(rep.overall.nlg_pairs == 3);
}

TEST_CASE("evaluate_corpus on a three-report fixture") {
    const auto rep = evaluate_corpus(fixture_preds(), fixture_refs());
    // Matched tokens: 6 + 6 + 6 of 6 + 7 + 6; lengths equal.
    CHECK(std::abs(rep.overall.bleu[0] - 18.0 / 19.0) < 1e-9);
    CHECK(std::abs(rep.overall.rouge_l - (2.0 + 6.0 / 7.0) / 3.0) < 1e-9);
    CHECK(std::abs(rep.overall.precision - 0.5) < 1e-9);
    CHECK(std::abs(rep.overall.recall - 0.5) < 1e-9);
    CHECK(rep.overall.nlg_pairs == 3);

    const auto& other = rep.per_category.at(Category::Other);
    CHECK(other.nlg_pairs == 0);
    CHECK(other.recall == 0.0);
    const auto& pleura = rep.per_category.at(Category::Pleura);
    CHECK(pleura.nlg_pairs == 2);
    CHECK(pleura.f1 == 1.0);
    CHECK(rep.per_category.at(Category::Abdominal).f1 == 0.0);
}

TEST_CASE("evaluate_corpus is order independent and checks ids") {
    auto preds = fixture_preds();
    auto refs = fixture_refs();
    const auto a = evaluate_corpus(preds, refs);
    std::reverse(preds.begin(), preds.end());
    std::rotate(refs.begin(), refs.begin() + 1, refs.end());
    const auto b = evaluate_corpus(preds, refs);
    CHECK(format_metric_kv(a) == format_metric_kv(b));
    CHECK(format_metric_csv(a) == format_metric_csv(b));

    auto missing = fixture_preds();
    missing.pop_back();
    try {
        evaluate_corpus(missing, fixture_refs());
        FAIL("expected id mismatch");
    } catch (const EvaluationError& e) {
        CHECK(std::string(e.what()).find("r3") != std::string::npos);
    }
    auto dup = fixture_preds();
    dup.push_back(dup.front());
    CHECK_THROWS_AS(evaluate_corpus(dup, fixture_refs()), EvaluationError);
}

TEST_CASE("metric output formats") {
    const auto rep = evaluate_corpus(fixture_refs(), fixture_refs());
    const auto kv = format_metric_kv(rep);
    CHECK(kv.rfind("bleu_1=1.000000000\n", 0) == 0);
    CHECK(kv.find("\nf1=1.000000000\n") != std::string::npos);
    CHECK(kv.find("nlg_pairs=3\n") != std::string::npos);
    const auto csv = format_metric_csv(rep);
    CHECK(csv.rfind("category,bleu_1,bleu_2,bleu_3,bleu_4,rouge_1,rouge_2,rouge_l,precision,recall,f1,nlg_pairs\n", 0) ==
          0);
    CHECK(csv.find("\nALL,") != std::string::npos);
    CHECK(csv.find("\nPleura,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 1 + 8);
}

TEST_CASE("pluggable extractor") {
    LabelExtractor first_word = [](const StructuredReport& r, std::optional<Category> c) {
        LabelMultiset out;
        for (const auto& [cat, obs] : r.sections) {
            if (c && cat != *c) continue;
            for (const auto& o : obs) out.push_back(tokenize_words(o).front());
        }
        return out;
    };
    const auto rep = evaluate_corpus(fixture_preds(), fixture_refs(), first_word);
    // Gold labels: no, heart, small, rib; predicted: no, heart, small.
    CHECK(rep.overall.recall == doctest::Approx(0.75));
    CHECK(rep.overall.precision == doctest::Approx(0.75));
}
