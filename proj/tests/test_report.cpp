// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cwcd/category.hpp"
#include "cwcd/error.hpp"
#include "cwcd/report.hpp"

using namespace cwcd;

namespace {

std::string parse_error(std::string_view text) {
    try {
        parse_structured(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

StructuredReport random_report(std::mt19937_64& eng) {
    static const std::vector<std::string> words{"No", "acute", "effusion.", "Mild", "cardiomegaly.", "Stable",
                                                "tube", "in", "place.", "None.", "x:", "-", "a-b"};
    StructuredReport r;
    for (Category c : kAllCategories) {
        if (eng() % 2) continue;
        auto& obs = r.sections[c];
        const auto n = eng() % 4;
        for (std::uint64_t i = 0; i < n; ++i) {
            std::string o = words[eng() % (words.size() - 3)];
            const auto k = eng() % 5;
            for (std::uint64_t j = 0; j < k; ++j) o += " " + words[eng() % words.size()];
            obs.push_back(o);
        }
    }
    return r;
}

TokenSequence encode(Vocabulary& v, const std::vector<std::string>& words) {
    TokenSequence out;
    for (const auto& w : words) out.push_back(v.add(w));
    return out;
}

}  // namespace

TEST_CASE("category order, headers and keys") {
    CHECK(kAllCategories.size() == 8);
    const std::vector<std::string> headers{"Lungs and Airways",
                                           "Pleura",
                                           "Cardiovascular",
                                           "Hila and Mediastinum",
                                           "Tubes, Catheters, and Support Devices",
                                           "Musculoskeletal and Chest Wall",
                                           "Abdominal",
                                           "Other"};
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(header(kAllCategories[i]) == headers[i]);
        CHECK(index(kAllCategories[i]) == i);
        CHECK(category_from_header(headers[i]) == kAllCategories[i]);
        CHECK(category_from_key(key(kAllCategories[i])) == kAllCategories[i]);
    }
    CHECK(category_from_header("Abdomen") == Category::Abdominal);
    CHECK_FALSE(category_from_header("Heart").has_value());
}

TEST_CASE("parse_structured examples") {
    const auto r = parse_structured("Pleura:\n- No pleural effusion.");
    CHECK(r.sections.size() == 1);
    CHECK(r.present(Category::Pleura));
    CHECK(r.sections.at(Category::Pleura) == std::vector<std::string>{"No pleural effusion."});

    const auto e = parse_error("Heart:\n- Normal.");
    CHECK(e.find("line 1") != std::string::npos);
    CHECK(parse_error("Pleura:\n- a\nPleura:\n").find("line 3") != std::string::npos);
    CHECK(parse_error("- a\nPleura:\n").find("line 1") != std::string::npos);
    CHECK(parse_error("Pleura:\n-\n").find("line 2") != std::string::npos);
    CHECK(parse_error("Pleura:\n-   \n").find("line 2") != std::string::npos);
    CHECK(parse_error("Pleura:\nfree text\n").find("line 2") != std::string::npos);

    const auto alias = parse_structured("Abdomen:\n- Unremarkable.\n");
    CHECK(alias.present(Category::Abdominal));
    CHECK(serialize_structured(alias) == "Abdominal:\n- Unremarkable.\n");

    const auto empty_section = parse_structured("Other:\n");
    CHECK(empty_section.present(Category::Other));
    CHECK(empty_section.observation_count() == 0);
}

TEST_CASE("serialize_structured canonical form") {
    CHECK(serialize_structured(StructuredReport{}).empty());
    StructuredReport r;
    r.sections[Category::Pleura] = {"No pleural effusion."};
    CHECK(serialize_structured(r) == "Pleura:\n- No pleural effusion.\n");
    const auto reordered = parse_structured("Other:\n- x\n\nLungs and Airways:\n- y\n");
    CHECK(serialize_structured(reordered) == "Lungs and Airways:\n- y\nOther:\n- x\n");
}

TEST_CASE("parse and serialize round-trip") {
    std::mt19937_64 eng(4);
    for (int i = 0; i < 300; ++i) {
        const auto r = random_report(eng);
        const auto text = serialize_structured(r);
        CHECK(parse_structured(text) == r);
        CHECK(serialize_structured(parse_structured(text)) == text);
    }
}

TEST_CASE("split_by_category counting") {
    StructuredReport r;
    r.sections[Category::Pleura] = {"No effusion."};
    r.sections[Category::Cardiovascular] = {"Normal heart.", "Calcified aorta."};
    r.sections[Category::Other] = {"Nothing else."};
    auto s = split_by_category({{"img1", r}});
    std::size_t records = 0, observations = 0;
    for (const auto& [c, recs] : s) {
        records += recs.size();
        for (const auto& rec : recs) observations += rec.observations.size();
    }
    CHECK(records == 3);
    CHECK(observations == r.observation_count());
    CHECK(s.at(Category::Cardiovascular).front().prompt == "Describe findings for: Cardiovascular.");
    CHECK(s.at(Category::Cardiovascular).front().image_id == "img1");

    auto neg = split_by_category({{"img1", r}}, true);
    for (Category c : kAllCategories) CHECK(neg.at(c).size() == 1);
    CHECK(neg.at(Category::LungsAndAirways).front().observations.empty());

    CHECK_THROWS_AS(split_by_category({{"", r}}), ValidationError);
}

TEST_CASE("split_by_category on a five-report fixture") {
    const char* texts[] = {
        "Lungs and Airways:\n- Clear.\nPleura:\n- No effusion.\n",
        "Pleura:\n- Small effusion.\nCardiovascular:\n- Enlarged heart.\n",
        "Pleura:\n- No effusion.\nTubes, Catheters, and Support Devices:\n- ET tube in place.\n- NG tube in place.\n",
        "Lungs and Airways:\n- Edema.\nPleura:\n- No effusion.\nCardiovascular:\n- Enlarged heart.\n",
        "Pleura:\n- No pneumothorax.\nOther:\n- Old rib fracture.\n",
    };
    std::vector<std::pair<std::string, StructuredReport>> corpus;
    for (int i = 0; i < 5; ++i) corpus.emplace_back("r" + std::to_string(i), parse_structured(texts[i]));
    const auto s = split_by_category(corpus);
    CHECK(s.at(Category::LungsAndAirways).size() == 2);
    CHECK(s.at(Category::Pleura).size() == 5);
    CHECK(s.at(Category::Cardiovascular).size() == 2);
    CHECK(s.at(Category::TubesCathetersSupportDevices).size() == 1);
    CHECK(s.at(Category::TubesCathetersSupportDevices).front().observations.size() == 2);
    CHECK(s.at(Category::Other).size() == 1);
    CHECK(s.at(Category::HilaAndMediastinum).empty());
    CHECK(s.at(Category::Abdominal).empty());
}

TEST_CASE("category body tokens and detokenization") {
    CHECK(category_body_words({}) == std::vector<std::string>{"None."});
    CHECK(category_body_words({"Mild edema.", "No effusion."}) ==
          std::vector<std::string>{"-", "Mild", "edema.", "-", "No", "effusion."});
    Vocabulary v;
    CHECK_FALSE(detokenize_category({}, v).has_value());
    CHECK_FALSE(detokenize_category(encode(v, {"None."}), v).has_value());
    const auto obs = detokenize_category(encode(v, {"-", "Mild", "edema.", "-", "x"}), v);
    REQUIRE(obs.has_value());
    CHECK(*obs == std::vector<std::string>{"Mild edema.", "x"});
    CHECK_THROWS_AS(detokenize_category(encode(v, {"Mild", "-", "x"}), v), ParseError);
    CHECK_THROWS_AS(detokenize_category(encode(v, {"-", "-", "x"}), v), ParseError);
    CHECK_THROWS_AS(detokenize_category(TokenSequence{v.id("-"), kPad}, v), ParseError);
    CHECK_THROWS_AS(detokenize_category(encode(v, {"-", "x", "Pleura:"}), v), ParseError);
}

TEST_CASE("assemble") {
    Vocabulary v;
    std::map<Category, TokenSequence> all_none;
    for (Category c : kAllCategories) all_none[c] = encode(v, {"None."});
    CHECK(assemble(all_none, v).sections.empty());

    std::map<Category, TokenSequence> one{{Category::Cardiovascular, encode(v, {"-", "Cardiomegaly."})},
                                          {Category::Pleura, encode(v, {"None."})}};
    const auto r = assemble(one, v);
    CHECK(serialize_structured(r) == "Cardiovascular:\n- Cardiomegaly.\n");

    std::map<Category, TokenSequence> bad{{Category::Pleura, encode(v, {"oops"})}};
    try {
        assemble(bad, v);
        FAIL("expected an assembly error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("Pleura") != std::string::npos);
    }

    // Split, re-encode verbatim, assemble: identity.
    std::mt19937_64 eng(12);
    for (int i = 0; i < 100; ++i) {
        const auto report = random_report(eng);
        // A bare "-" word inside an observation is indistinguishable from a bullet.
        bool dash = false;
        for (const auto& [c, obs] : report.sections) {
            for (const auto& o : obs) dash = dash || (" " + o + " ").find(" - ") != std::string::npos;
        }
        if (dash) continue;
        std::map<Category, TokenSequence> outs;
        for (const auto& [c, recs] : split_by_category({{"x", report}}, true)) {
            outs[c] = encode(v, category_body_words(recs.front().observations));
        }
        auto expected = report;
        for (auto it = expected.sections.begin(); it != expected.sections.end();) {
            const bool none = it->second.empty() || it->second == std::vector<std::string>{"None."};
            it = none ? expected.sections.erase(it) : std::next(it);
        }
        const auto back = assemble(outs, v);
        CHECK_MESSAGE(back == expected, serialize_structured(report) << "=> " << serialize_structured(back));
        for (const auto& [c, obs] : back.sections) CHECK(outs.count(c) == 1);
    }
}

TEST_CASE("single-stream report tokens") {
    StructuredReport r;
    r.sections[Category::LungsAndAirways] = {"Lungs are clear."};
    r.sections[Category::Pleura] = {"No effusion."};
    const auto w = report_words(r);
    CHECK(w == std::vector<std::string>{"Lungs and Airways:", "-", "Lungs", "are", "clear.", "Pleura:", "-", "No",
                                        "effusion."});
    Vocabulary v;
    const auto toks = encode(v, w);
    const auto det = detokenize_report(toks, v);
    CHECK(det.report == r);
    CHECK(det.dropped_tokens == 0);

    auto noisy = encode(v, {"stray", "Pleura:", "-", "ok", "Pleura:", "-", "dup"});
    const auto d2 = detokenize_report(noisy, v);
    CHECK(d2.report.sections.at(Category::Pleura) == std::vector<std::string>{"ok", "dup"});
    CHECK(d2.dropped_tokens > 0);
}
