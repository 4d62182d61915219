// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwcd/model.hpp"
#include "cwcd/scoring.hpp"

namespace cwcd {

enum class DecodeMode { Greedy, Cd, Cw, Cwcd };
enum class VpMode { None, All, Category };

std::string_view to_string(DecodeMode m);
std::string_view to_string(VpMode m);
DecodeMode parse_decode_mode(std::string_view s);  // throws ConfigError
VpMode parse_vp_mode(std::string_view s);          // throws ConfigError

struct DecodeConfig {
    double alpha = 1.0;
    double beta = 0.5;
    std::size_t max_tokens = 128;
    DecodeMode mode = DecodeMode::Cwcd;
    VpMode vp_mode = VpMode::Category;
    bool subselection_enabled = true;

    // Throws ConfigError when alpha < 0, beta outside [0, 1] or max_tokens == 0.
    void validate() const;
    bool operator==(const DecodeConfig&) const = default;
};

inline constexpr std::size_t kTraceTopK = 8;

struct TraceStep {
    TokenId chosen = 0;
    // Top-k (id, log-prob) pairs plus the chosen token when it is outside them.
    std::vector<std::pair<TokenId, double>> base_top;
    std::vector<std::pair<TokenId, double>> masked_top;  // empty for single-stream decodes
    std::size_t vsub_size = 0;
    PositionSet vsub;  // candidate set the chosen token was drawn from
    double chosen_score = 0.0;  // probability of the chosen token under the scoring distribution
};

struct DecodeTrace {
    std::vector<TraceStep> steps;
};

struct DecodeResult {
    TokenSequence tokens;  // emitted tokens, EOS included when produced
    DecodeTrace trace;
};

// Called once per step with the (base) forward output, before selection.
using StepObserver = std::function<void(std::size_t step, const ModelOutput& out, std::size_t prefix_len)>;

// Single-stream greedy decoding. Stops at EOS or after cfg.max_tokens tokens.
DecodeResult decode_greedy(const ConditionalLM& model, const VisualContext& visual,
                           std::span<const TokenId> prompt, const DecodeConfig& cfg,
                           const StepObserver& observer = {});

// Dual-stream contrastive decoding. Both streams share the prompt and the
// emitted prefix; only the visual input differs.
DecodeResult decode_contrastive(const ConditionalLM& model, const VisualContext& visual_base,
                                const VisualContext& visual_masked, std::span<const TokenId> prompt,
                                const DecodeConfig& cfg);

// Tokens emitted before EOS.
TokenSequence strip_eos(const TokenSequence& tokens);

}  // namespace cwcd
