// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cwcd/decode.hpp"
#include "cwcd/model.hpp"
#include "cwcd/scoring.hpp"

namespace cwcd {

// Layer-averaged max attention over the position subset `s`:
//   (1/L) * sum_l max_h sum_{i in s} att[l][h][i]
// Throws ValidationError when `s` holds a position outside [0, N).
double lama_step(const AttentionTensor& att, const PositionSet& s);

// Per-step LAMA over the visual positions and over the text positions
// (prompt plus everything generated so far).
struct LamaTrace {
    std::string sequence_id;
    std::vector<double> visual;
    std::vector<double> text;

    std::size_t steps() const { return visual.size(); }
};

// Greedy decode that records a LAMA pair at every step. Throws ModelError
// for models that do not expose attention.
LamaTrace lama_trace(const ConditionalLM& model, const VisualContext& visual, std::span<const TokenId> prompt,
                     const DecodeConfig& cfg, std::string sequence_id = {});

// CSV with columns sequence_id,step,lama_visual,lama_text (steps are 1-based),
// followed by one "MEAN" row per step averaging the sequences that reached it.
std::string format_trace_csv(const std::vector<LamaTrace>& traces);
void emit_trace_csv(const std::vector<LamaTrace>& traces, const std::filesystem::path& path);

}  // namespace cwcd
