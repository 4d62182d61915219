// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cwcd/error.hpp"

namespace cwcd {

std::string_view to_string(DecodeMode m) {
    switch (m) {
        case DecodeMode::Greedy: return "greedy";
        case DecodeMode::Cd: return "cd";
        case DecodeMode::Cw: return "cw";
        case DecodeMode::Cwcd: return "cwcd";
    }
    return "?";
}

std::string_view to_string(VpMode m) {
    switch (m) {
        case VpMode::None: return "none";
        case VpMode::All: return "all";
        case VpMode::Category: return "category";
    }
    return "?";
}

DecodeMode parse_decode_mode(std::string_view s) {
    for (auto m : {DecodeMode::Greedy, DecodeMode::Cd, DecodeMode::Cw, DecodeMode::Cwcd}) {
        if (to_string(m) == s) return m;
    }
    throw ConfigError("unknown decode mode '" + std::string(s) + "' (expected greedy, cd, cw or cwcd)");
}

VpMode parse_vp_mode(std::string_view s) {
    for (auto m : {VpMode::None, VpMode::All, VpMode::Category}) {
        if (to_string(m) == s) return m;
    }
    throw ConfigError("unknown vp_mode '" + std::string(s) + "' (expected none, all or category)");
}

void DecodeConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha must be >= 0, got " + std::to_string(alpha));
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ConfigError("beta must lie in [0, 1], got " + std::to_string(beta));
    }
    if (max_tokens == 0) {
        throw ConfigError("max_tokens must be at least 1");
    }
}

namespace {

std::vector<std::pair<TokenId, double>> top_entries(const LogProbVector& lp, TokenId chosen) {
    std::vector<TokenId> ids(lp.size());
    std::iota(ids.begin(), ids.end(), 0);
    const std::size_t k = std::min(kTraceTopK, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), [&](TokenId a, TokenId b) {
        if (lp[static_cast<std::size_t>(a)] != lp[static_cast<std::size_t>(b)]) {
            return lp[static_cast<std::size_t>(a)] > lp[static_cast<std::size_t>(b)];
        }
        return a < b;
    });
    std::vector<std::pair<TokenId, double>> out;
    bool has_chosen = false;
    for (std::size_t i = 0; i < k; ++i) {
        out.emplace_back(ids[i], lp[static_cast<std::size_t>(ids[i])]);
        has_chosen = has_chosen || ids[i] == chosen;
    }
    if (!has_chosen) out.emplace_back(chosen, lp[static_cast<std::size_t>(chosen)]);
    return out;
}

void check_prompt(const ConditionalLM& model, std::span<const TokenId> prompt) {
    for (TokenId t : prompt) {
        if (!model.vocabulary().valid(t)) {
            throw ValidationError("prompt token " + std::to_string(t) + " is outside the model vocabulary");
        }
    }
}

LogProbVector step_log_probs(const ConditionalLM& model, const VisualContext& visual, std::span<const TokenId> prompt,
                             const TokenSequence& prefix, std::size_t step, ModelOutput* keep = nullptr) {
    ModelOutput out;
    try {
        out = model.forward(visual, prompt, prefix);
        if (out.logits.size() != model.vocabulary().size()) {
            throw ModelError("forward returned " + std::to_string(out.logits.size()) + " logits for a vocabulary of " +
                             std::to_string(model.vocabulary().size()));
        }
        auto lp = log_softmax(out.logits);
        if (keep) *keep = std::move(out);
        return lp;
    } catch (const DecodeError&) {
        throw;
    } catch (const Error& e) {
        throw DecodeError(e.what(), step);
    }
}

}  // namespace

DecodeResult decode_greedy(const ConditionalLM& model, const VisualContext& visual, std::span<const TokenId> prompt,
                           const DecodeConfig& cfg, const StepObserver& observer) {
    cfg.validate();
    check_prompt(model, prompt);
    DecodeResult result;
    const auto full = PositionSet::range(0, static_cast<int>(model.vocabulary().size()));
    for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
        ModelOutput out;
        const auto lp = step_log_probs(model, visual, prompt, result.tokens, step, observer ? &out : nullptr);
        if (observer) observer(step, out, result.tokens.size());
        const auto dist = to_distribution(lp);
        const TokenId tok = greedy_select(dist);

        TraceStep ts;
        ts.chosen = tok;
        ts.base_top = top_entries(lp, tok);
        ts.vsub_size = full.size();
        ts.vsub = full;
        ts.chosen_score = dist[static_cast<std::size_t>(tok)];
        result.trace.steps.push_back(std::move(ts));

        result.tokens.push_back(tok);
        if (tok == kEos) break;
    }
    return result;
}

DecodeResult decode_contrastive(const ConditionalLM& model, const VisualContext& visual_base,
                                const VisualContext& visual_masked, std::span<const TokenId> prompt,
                                const DecodeConfig& cfg) {
    cfg.validate();
    check_prompt(model, prompt);
    DecodeResult result;
    TokenSequence masked_prefix;
    const auto full = PositionSet::range(0, static_cast<int>(model.vocabulary().size()));
    for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
        if (masked_prefix.size() != result.tokens.size()) {
            throw std::logic_error("contrastive decode: base and masked streams desynchronized at step " +
                                   std::to_string(step));
        }
        const auto base = step_log_probs(model, visual_base, prompt, result.tokens, step);
        const auto masked = step_log_probs(model, visual_masked, prompt, masked_prefix, step);
        PositionSet vsub = cfg.subselection_enabled ? plausibility_mask(base, cfg.beta) : full;
        const auto dist = contrastive_scores(base, masked, cfg.alpha, vsub);
        const TokenId tok = greedy_select(dist);

        TraceStep ts;
        ts.chosen = tok;
        ts.base_top = top_entries(base, tok);
        ts.masked_top = top_entries(masked, tok);
        ts.vsub_size = vsub.size();
        ts.vsub = std::move(vsub);
        ts.chosen_score = dist[static_cast<std::size_t>(tok)];
        result.trace.steps.push_back(std::move(ts));

        result.tokens.push_back(tok);
        masked_prefix.push_back(tok);
        if (tok == kEos) break;
    }
    return result;
}

TokenSequence strip_eos(const TokenSequence& tokens) {
    TokenSequence out;
    for (TokenId t : tokens) {
        if (t == kEos) break;
        out.push_back(t);
    }
    return out;
}

}  // namespace cwcd
