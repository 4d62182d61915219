// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwcd/category.hpp"
#include "cwcd/vocabulary.hpp"

namespace cwcd {

// A present category maps to its (possibly empty) list of observations.
// Categories without an entry are absent.
struct StructuredReport {
    std::map<Category, std::vector<std::string>> sections;

    bool present(Category c) const { return sections.count(c) != 0; }
    std::size_t observation_count() const;
    bool operator==(const StructuredReport&) const = default;
};

// Grammar: a header line "<Header>:" followed by zero or more "- <text>"
// lines. Blank lines are ignored. Unknown or duplicate headers, bullets before
// any header, empty bullets and any other line raise ParseError with the
// 1-based line number.
StructuredReport parse_structured(std::string_view text);

// Canonical form: present categories in canonical order, "<Header>:" then one
// "- <obs>" line per observation. Empty report -> "".
std::string serialize_structured(const StructuredReport& report);

inline constexpr std::string_view kDefaultPromptTemplate = "Describe findings for: {header}.";
inline constexpr std::string_view kSingleStreamPrompt = "Describe findings.";
inline constexpr std::string_view kNoFindingsSentinel = "None.";
inline constexpr std::string_view kBulletToken = "-";

// Substitutes "{header}" in `templ`.
std::string category_prompt(Category c, std::string_view templ = kDefaultPromptTemplate);

struct CategoryRecord {
    std::string image_id;
    Category category = Category::Other;
    std::vector<std::string> observations;
    std::string prompt;

    bool operator==(const CategoryRecord&) const = default;
};

// One record per (image, present category). With `negatives` set, absent
// categories also yield a record with no observations.
std::map<Category, std::vector<CategoryRecord>> split_by_category(
    const std::vector<std::pair<std::string, StructuredReport>>& corpus, bool negatives = false,
    std::string_view prompt_template = kDefaultPromptTemplate);

// Word-level surface forms used by the language models. A category body is
// "- w1 w2 - w3 ..." (one "-" per observation) or the sentinel when empty; a
// single-stream report prefixes each section with a "<Header>:" token.
std::vector<std::string> category_body_words(const std::vector<std::string>& observations);
std::vector<std::string> report_words(const StructuredReport& report);
std::string header_token(Category c);

// Inverse of category_body_words. Returns the observations, or std::nullopt
// for an empty body / the sentinel. Throws ParseError on malformed bodies.
std::optional<std::vector<std::string>> detokenize_category(const TokenSequence& body, const Vocabulary& vocab);

// Lenient inverse of report_words for single-stream decodes: stray words
// before any header and empty bullets are dropped, repeated headers merge.
struct DetokenizedReport {
    StructuredReport report;
    std::size_t dropped_tokens = 0;
};
DetokenizedReport detokenize_report(const TokenSequence& body, const Vocabulary& vocab);

// Builds the report from per-category decodes (EOS already stripped or not).
// Throws ParseError naming the category on malformed output.
StructuredReport assemble(const std::map<Category, TokenSequence>& outputs, const Vocabulary& vocab);

}  // namespace cwcd
