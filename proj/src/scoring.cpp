// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cwcd/error.hpp"

namespace cwcd {

LogProbVector LogProbVector::from_normalized(std::vector<double> values) {
    return LogProbVector(std::move(values));
}

Distribution::Distribution(std::vector<double> values) : values_(std::move(values)) {
    double total = 0.0;
    for (double v : values_) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("distribution entry is negative or non-finite");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("distribution mass " + std::to_string(total) + " differs from 1");
    }
}

PositionSet::PositionSet(std::vector<int> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

PositionSet PositionSet::range(int begin, int end) {
    PositionSet s;
    for (int i = begin; i < end; ++i) s.members_.push_back(i);
    return s;
}

bool PositionSet::contains(int v) const {
    return std::binary_search(members_.begin(), members_.end(), v);
}

LogProbVector log_softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw ValidationError("invalid logits: empty vector");
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) {
            throw ValidationError("invalid logits: entry " + std::to_string(i) + " is not finite");
        }
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - mx);
    const double lse = mx + std::log(sum);
    const double floor = std::log(kProbFloor);
    std::vector<double> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::max(logits[i] - lse, floor);
    }
    return LogProbVector::from_normalized(std::move(out));
}

PositionSet plausibility_mask(const LogProbVector& base, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ConfigError("beta must lie in [0, 1], got " + std::to_string(beta));
    }
    if (base.size() == 0) {
        throw ValidationError("plausibility mask of an empty vector");
    }
    std::vector<double> probs(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) probs[i] = std::exp(base[i]);
    const double threshold = beta * *std::max_element(probs.begin(), probs.end());
    std::vector<int> keep;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] >= threshold) keep.push_back(static_cast<int>(i));
    }
    return PositionSet(std::move(keep));
}

Distribution normalize_over(std::span<const double> scores, const PositionSet& candidates) {
    if (candidates.empty()) {
        throw ValidationError("degenerate subselection: empty candidate set");
    }
    if (candidates.members().front() < 0 || static_cast<std::size_t>(candidates.members().back()) >= scores.size()) {
        throw ValidationError("candidate index outside the score vector");
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int t : candidates) mx = std::max(mx, scores[static_cast<std::size_t>(t)]);
    double z = 0.0;
    for (int t : candidates) z += std::exp(scores[static_cast<std::size_t>(t)] - mx);
    std::vector<double> out(scores.size(), 0.0);
    for (int t : candidates) out[static_cast<std::size_t>(t)] = std::exp(scores[static_cast<std::size_t>(t)] - mx) / z;
    return Distribution(std::move(out));
}

Distribution to_distribution(const LogProbVector& lp) {
    return normalize_over(lp.values(), PositionSet::range(0, static_cast<int>(lp.size())));
}

Distribution contrastive_scores(const LogProbVector& base, const LogProbVector& masked, double alpha,
                                const PositionSet& candidates) {
    if (base.size() != masked.size()) {
        throw ValidationError("base and masked log-probs have different lengths");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha must be a finite non-negative number");
    }
    // alpha == 0 or masked == base gives base bit-exactly
    std::vector<double> scores(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        scores[i] = base[i] + alpha * (base[i] - masked[i]);
    }
    return normalize_over(scores, candidates);
}

TokenId greedy_select(const Distribution& dist) {
    if (dist.size() == 0) {
        throw ValidationError("greedy selection over an empty distribution");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > dist[best]) best = i;
    }
    return static_cast<TokenId>(best);
}

}  // namespace cwcd
