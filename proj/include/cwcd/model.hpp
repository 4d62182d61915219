// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cwcd/vocabulary.hpp"

namespace cwcd {

// Attention rows of the current generation step, indexed [layer][head][position].
class AttentionTensor {
public:
    AttentionTensor() = default;
    AttentionTensor(std::size_t layers, std::size_t heads, std::size_t positions);

    std::size_t layers() const { return layers_; }
    std::size_t heads() const { return heads_; }
    std::size_t positions() const { return positions_; }

    double& at(std::size_t l, std::size_t h, std::size_t i) { return data_[(l * heads_ + h) * positions_ + i]; }
    double at(std::size_t l, std::size_t h, std::size_t i) const { return data_[(l * heads_ + h) * positions_ + i]; }
    std::span<double> row(std::size_t l, std::size_t h) { return {data_.data() + (l * heads_ + h) * positions_, positions_}; }
    std::span<const double> row(std::size_t l, std::size_t h) const {
        return {data_.data() + (l * heads_ + h) * positions_, positions_};
    }

    // Every row non-negative with unit mass within `tol`.
    bool rows_are_distributions(double tol = 1e-6) const;

private:
    std::size_t layers_ = 0;
    std::size_t heads_ = 0;
    std::size_t positions_ = 0;
    std::vector<double> data_;
};

struct ModelOutput {
    std::vector<double> logits;                // length |V|
    std::optional<AttentionTensor> attention;  // present iff the model exposes it
};

// Quantized patch tokens of one image. `ids` index the visual sub-vocabulary
// [0, levels); `positions` hold the (row, col) of each source patch.
struct VisualTokens {
    std::vector<TokenId> ids;
    std::vector<std::pair<int, int>> positions;
    int levels = 0;

    std::size_t size() const { return ids.size(); }
    bool operator==(const VisualTokens&) const = default;
};

// What a model sees of an image. Attention models read `tokens`; the tabular
// model reads the discrete `feature` summary instead.
struct VisualContext {
    VisualTokens tokens;
    std::string feature;

    bool operator==(const VisualContext&) const = default;
};

// Conditional next-token model over the input concat(visual, prompt, prefix).
// Implementations are immutable after construction and safe for concurrent
// forwards.
class ConditionalLM {
public:
    virtual ~ConditionalLM() = default;

    virtual const Vocabulary& vocabulary() const = 0;
    virtual bool exposes_attention() const = 0;
    // Upper bound on |visual| + |prompt| + |prefix|.
    virtual std::size_t max_context() const = 0;

    // Throws ModelError on context overflow.
    virtual ModelOutput forward(const VisualContext& visual, std::span<const TokenId> prompt,
                                std::span<const TokenId> prefix) const = 0;

protected:
    // Shared overflow check for implementations.
    void check_context(std::size_t visual, std::size_t prompt, std::size_t prefix) const;
};

}  // namespace cwcd
