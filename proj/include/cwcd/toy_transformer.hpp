// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cwcd/model.hpp"

namespace cwcd {

struct ToyTransformerConfig {
    std::uint64_t seed = 1;
    int d_model = 32;
    int layers = 2;
    int heads = 2;
    int visual_levels = 8;
    int max_positions = 256;

    bool operator==(const ToyTransformerConfig&) const = default;
};

// Low-rank additive update W <- W + scale * B * A for one named weight matrix.
struct LoraDelta {
    std::string target = "head";
    Eigen::MatrixXd a;  // rank x in_dim
    Eigen::MatrixXd b;  // out_dim x rank
    double scale = 1.0;

    int rank() const { return static_cast<int>(a.rows()); }
    LoraDelta negated() const;
};

// Small pre-norm decoder-only transformer with randomly initialised weights.
// Inputs are embedded as visual tokens first, then prompt and prefix text
// tokens; attention is causal. The attention rows of the last position are
// exposed for every layer and head.
//
// Weight matrix names: "embed", "visual_embed", "head", and per layer l:
// "layer<l>.wq", "layer<l>.wk", "layer<l>.wv", "layer<l>.wo",
// "layer<l>.mlp_in", "layer<l>.mlp_out".
class ToyTransformer final : public ConditionalLM {
public:
    ToyTransformer(Vocabulary vocab, ToyTransformerConfig cfg);

    const Vocabulary& vocabulary() const override { return vocab_; }
    bool exposes_attention() const override { return true; }
    std::size_t max_context() const override { return static_cast<std::size_t>(cfg_.max_positions); }
    ModelOutput forward(const VisualContext& visual, std::span<const TokenId> prompt,
                        std::span<const TokenId> prefix) const override;

    const ToyTransformerConfig& config() const { return cfg_; }

    std::vector<std::string> matrix_names() const;
    const Eigen::MatrixXd& matrix(const std::string& name) const;  // throws AdapterError

    // Copy with W replaced by W + scale * B * A. Throws AdapterError on an
    // unknown target or non-conforming shapes.
    ToyTransformer with_delta(const LoraDelta& delta) const;

private:
    struct Layer {
        Eigen::MatrixXd wq, wk, wv, wo, mlp_in, mlp_out;
    };

    Eigen::MatrixXd& mutable_matrix(const std::string& name);

    Vocabulary vocab_;
    ToyTransformerConfig cfg_;
    Eigen::MatrixXd embed_;         // |V| x d
    Eigen::MatrixXd visual_embed_;  // levels x d
    Eigen::MatrixXd positional_;    // max_positions x d
    std::vector<Layer> layers_;
    Eigen::MatrixXd head_;  // |V| x d
};

ToyTransformer apply_lora(const ToyTransformer& model, const LoraDelta& delta);

// W + scale * B * A with the same shape checks as apply_lora.
Eigen::MatrixXd merge_lora(const Eigen::MatrixXd& w, const LoraDelta& delta);

// Deterministic random delta of the given rank for `target`.
LoraDelta random_lora(const ToyTransformer& model, const std::string& target, int rank, double scale,
                      std::uint64_t seed);

// "seed + dimensions + vocabulary" text form; weights regenerate from the seed.
std::string serialize_toy(const ToyTransformer& model);
ToyTransformer parse_toy(const std::string& text);
ToyTransformer load_toy(const std::filesystem::path& path);

}  // namespace cwcd
