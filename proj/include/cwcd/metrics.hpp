// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwcd/category.hpp"
#include "cwcd/report.hpp"

namespace cwcd {

using WordList = std::vector<std::string>;

// Lowercases, detaches every ASCII punctuation character into its own token,
// then splits on whitespace.
WordList tokenize_words(std::string_view text);

// Corpus BLEU with pooled clipped n-gram counts and a single brevity penalty.
// With `smooth`, orders >= 2 use add-one counts. Empty hypotheses score 0.
double corpus_bleu(const std::vector<std::pair<WordList, WordList>>& pairs, int max_n, bool smooth = false);
double bleu(const WordList& hyp, const WordList& ref, int max_n, bool smooth = false);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

Prf rouge_n(const WordList& hyp, const WordList& ref, int n);
Prf rouge_l(const WordList& hyp, const WordList& ref);
std::size_t lcs_length(const WordList& a, const WordList& b);

using LabelMultiset = std::vector<std::string>;

// Support-weighted per-label precision/recall/F1 over a corpus. Throws
// EvaluationError when the gold side carries no labels at all.
Prf label_prf(const std::vector<LabelMultiset>& pred, const std::vector<LabelMultiset>& gold);

// Label multiset of a report, optionally restricted to one category.
using LabelExtractor = std::function<LabelMultiset(const StructuredReport&, std::optional<Category>)>;

// Default extractor: each observation, lowercased with whitespace collapsed,
// is one label.
LabelMultiset observation_labels(const StructuredReport& report, std::optional<Category> only);

struct MetricValues {
    std::array<double, 4> bleu{};  // BLEU-1 .. BLEU-4
    double rouge_1 = 0.0;
    double rouge_2 = 0.0;
    double rouge_l = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t nlg_pairs = 0;  // examples contributing to BLEU/ROUGE
};

struct MetricReport {
    MetricValues overall;
    std::map<Category, MetricValues> per_category;
};

using IdReport = std::pair<std::string, StructuredReport>;

// NLG metrics run on the categories present in both prediction and reference;
// a category present on only one side is left out of the text pairing but
// still counts for the label metrics. ROUGE values are means of per-example
// F1. Throws EvaluationError when the id sets differ.
MetricReport evaluate_corpus(const std::vector<IdReport>& preds, const std::vector<IdReport>& refs,
                             const LabelExtractor& extractor = observation_labels);

// Flat key=value document and per-category CSV.
std::string format_metric_kv(const MetricReport& report);
std::string format_metric_csv(const MetricReport& report);

}  // namespace cwcd
