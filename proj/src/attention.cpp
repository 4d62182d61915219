// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/attention.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "cwcd/error.hpp"
#include "text_util.hpp"

namespace cwcd {

double lama_step(const AttentionTensor& att, const PositionSet& s) {
    if (att.layers() == 0 || att.heads() == 0) {
        throw ValidationError("attention tensor without layers or heads");
    }
    if (!s.empty() && (s.members().front() < 0 || static_cast<std::size_t>(s.members().back()) >= att.positions())) {
        throw ValidationError("position set exceeds the " + std::to_string(att.positions()) + " attended positions");
    }
    double total = 0.0;
    for (std::size_t l = 0; l < att.layers(); ++l) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t h = 0; h < att.heads(); ++h) {
            double mass = 0.0;
            for (int i : s) mass += att.at(l, h, static_cast<std::size_t>(i));
            best = std::max(best, mass);
        }
        total += best;
    }
    return total / static_cast<double>(att.layers());
}

LamaTrace lama_trace(const ConditionalLM& model, const VisualContext& visual, std::span<const TokenId> prompt,
                     const DecodeConfig& cfg, std::string sequence_id) {
    if (!model.exposes_attention()) {
        throw ModelError("LAMA tracing needs a model that exposes attention");
    }
    LamaTrace trace;
    trace.sequence_id = std::move(sequence_id);
    const int n_visual = static_cast<int>(visual.tokens.size());
    const int n_prompt = static_cast<int>(prompt.size());
    decode_greedy(model, visual, prompt, cfg, [&](std::size_t, const ModelOutput& out, std::size_t prefix_len) {
        if (!out.attention) throw ModelError("model did not return attention for a step");
        const int n = n_visual + n_prompt + static_cast<int>(prefix_len);
        if (out.attention->positions() != static_cast<std::size_t>(n)) {
            throw ModelError("attention covers " + std::to_string(out.attention->positions()) + " positions, expected " +
                             std::to_string(n));
        }
        trace.visual.push_back(lama_step(*out.attention, PositionSet::range(0, n_visual)));
        trace.text.push_back(lama_step(*out.attention, PositionSet::range(n_visual, n)));
    });
    return trace;
}

std::string format_trace_csv(const std::vector<LamaTrace>& traces) {
    std::string out = "sequence_id,step,lama_visual,lama_text\n";
    std::size_t longest = 0;
    for (const auto& t : traces) {
        if (t.visual.size() != t.text.size()) {
            throw ValidationError("trace '" + t.sequence_id + "' has mismatched visual/text lengths");
        }
        longest = std::max(longest, t.steps());
        for (std::size_t i = 0; i < t.steps(); ++i) {
            out += detail::csv_field(t.sequence_id) + "," + std::to_string(i + 1) + "," +
                   detail::format_fixed(t.visual[i], 9) + "," + detail::format_fixed(t.text[i], 9) + "\n";
        }
    }
    for (std::size_t i = 0; i < longest; ++i) {
        double vis = 0.0, txt = 0.0;
        std::size_t n = 0;
        for (const auto& t : traces) {
            if (i < t.steps()) {
                vis += t.visual[i];
                txt += t.text[i];
                ++n;
            }
        }
        out += "MEAN," + std::to_string(i + 1) + "," + detail::format_fixed(vis / n, 9) + "," +
               detail::format_fixed(txt / n, 9) + "\n";
    }
    return out;
}

void emit_trace_csv(const std::vector<LamaTrace>& traces, const std::filesystem::path& path) {
    const std::string csv = format_trace_csv(traces);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << csv;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace cwcd
