// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cwcd/vocabulary.hpp"

namespace cwcd {

// Smallest probability a log-prob vector may carry. Keeps the base/masked
// log-ratio finite when one stream puts (numerically) zero mass on a token.
inline constexpr double kProbFloor = 1e-12;

// Natural-log probabilities over the whole vocabulary. Entries are clamped at
// log(kProbFloor), so exp(values) sums to 1 only up to |V| * kProbFloor.
class LogProbVector {
public:
    LogProbVector() = default;
    // Adopts `values` as-is; callers promise they are normalized log-probs.
    static LogProbVector from_normalized(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

private:
    explicit LogProbVector(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

// Probabilities over the vocabulary; non-negative and summing to one.
class Distribution {
public:
    Distribution() = default;
    // Validates non-negativity and unit mass (1e-9).
    explicit Distribution(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> values_;
};

// Sorted, duplicate-free set of indices (token ids or input positions).
class PositionSet {
public:
    PositionSet() = default;
    explicit PositionSet(std::vector<int> members);  // sorts and dedups
    static PositionSet range(int begin, int end);     // [begin, end)

    bool empty() const { return members_.empty(); }
    std::size_t size() const { return members_.size(); }
    bool contains(int v) const;
    const std::vector<int>& members() const { return members_; }
    auto begin() const { return members_.begin(); }
    auto end() const { return members_.end(); }

    bool operator==(const PositionSet&) const = default;

private:
    std::vector<int> members_;
};

// Numerically stable log-softmax (max-shifted); non-finite logits throw
// ValidationError. Output entries are clamped below at log(kProbFloor).
LogProbVector log_softmax(std::span<const double> logits);

// Tokens whose base probability reaches `beta` times the step maximum,
// compared in probability space. Always contains every argmax token.
PositionSet plausibility_mask(const LogProbVector& base, double beta);

// Softmax over `candidates` of base + alpha * (base - masked); tokens outside
// `candidates` receive exactly zero mass.
Distribution contrastive_scores(const LogProbVector& base, const LogProbVector& masked,
                                double alpha, const PositionSet& candidates);

// Softmax of `scores` restricted to `candidates`. Shared by the greedy and
// contrastive paths so both normalize identically.
Distribution normalize_over(std::span<const double> scores, const PositionSet& candidates);

// Full-vocabulary distribution of a log-prob vector.
Distribution to_distribution(const LogProbVector& lp);

// Argmax; ties go to the lowest id.
TokenId greedy_select(const Distribution& dist);

}  // namespace cwcd
