// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cwcd/model.hpp"

namespace cwcd {

// Feature name of the feature-agnostic back-off tables.
inline constexpr std::string_view kAnyFeature = "*";

// Exact k-th order conditional table model P(next | feature, last k tokens).
//
// Lookup order for feature f and context c = (c_1 .. c_k):
//   (f, c_1..c_k), (f, c_2..c_k), ..., (f, ()),
//   (*, c_1..c_k), ..., (*, ()),
//   uniform over non-BOS/PAD tokens.
// Rows are stored as sparse token -> probability maps; missing tokens have
// zero probability. forward() returns log(max(p, kProbFloor)) as logits.
class TabularLM final : public ConditionalLM {
public:
    struct Key {
        std::string feature;
        TokenSequence context;
        auto operator<=>(const Key&) const = default;
    };
    using Row = std::map<TokenId, double>;
    using Table = std::map<Key, Row>;

    TabularLM(Vocabulary vocab, int order, double smoothing, Table table);

    const Vocabulary& vocabulary() const override { return vocab_; }
    bool exposes_attention() const override { return false; }
    std::size_t max_context() const override;
    ModelOutput forward(const VisualContext& visual, std::span<const TokenId> prompt,
                        std::span<const TokenId> prefix) const override;

    // Dense next-token probabilities straight from the resolved table row.
    std::vector<double> probabilities(const std::string& feature, std::span<const TokenId> history) const;

    int order() const { return order_; }
    double smoothing() const { return smoothing_; }
    const Table& table() const { return table_; }
    std::vector<std::string> features() const;  // excludes kAnyFeature

    bool operator==(const TabularLM& other) const;

private:
    const Row* resolve(const std::string& feature, std::span<const TokenId> history) const;

    Vocabulary vocab_;
    int order_;
    double smoothing_;
    Table table_;
};

struct TrainingSequence {
    std::string feature;
    TokenSequence tokens;  // starts with BOS, normally ends with EOS
};

// Maximum-likelihood counts with additive smoothing over every non-BOS/PAD
// token. Populates back-off rows for all context lengths and for kAnyFeature.
TabularLM tabular_fit(const Vocabulary& vocab, const std::vector<TrainingSequence>& corpus, int order,
                      double smoothing);

// Text serialization; see README for the grammar.
std::string serialize_tabular(const TabularLM& model);
TabularLM parse_tabular(const std::string& text);
TabularLM load_tabular(const std::filesystem::path& path);
void save_tabular(const TabularLM& model, const std::filesystem::path& path);

}  // namespace cwcd
