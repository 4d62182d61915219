// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cwcd/model.hpp"
#include "cwcd/tabular_lm.hpp"

namespace cwcd::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CWCD_FIXTURE_DIR) / name; }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("cwcd_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// Emits token 3 until `length - 1` tokens exist, then EOS. Attention puts
// mass m_l on the visual positions in head 0 and m_l / 2 in head 1, with
// m_0 = v + 0.05, m_1 = v - 0.05 and v = visual_at(step).
class OracleAttentionLM final : public ConditionalLM {
public:
    OracleAttentionLM(std::size_t length, std::function<double(std::size_t)> visual_at)
        : length_(length), visual_at_(std::move(visual_at)) {
        vocab_.add("x");
    }
    const Vocabulary& vocabulary() const override { return vocab_; }
    bool exposes_attention() const override { return true; }
    std::size_t max_context() const override { return 1024; }
    ModelOutput forward(const VisualContext& visual, std::span<const TokenId> prompt,
                        std::span<const TokenId> prefix) const override {
        const std::size_t nv = visual.tokens.size();
        const std::size_t n = nv + prompt.size() + prefix.size();
        ModelOutput out;
        out.logits.assign(vocab_.size(), 0.0);
        out.logits[prefix.size() + 1 < length_ ? 3 : kEos] = 10.0;
        const double v = visual_at_(prefix.size() + 1);
        AttentionTensor att(2, 2, n);
        for (std::size_t l = 0; l < 2; ++l) {
            const double m = l == 0 ? v + 0.05 : v - 0.05;
            for (std::size_t h = 0; h < 2; ++h) {
                const double mv = h == 0 ? m : m / 2;
                for (std::size_t i = 0; i < n; ++i) {
                    att.at(l, h, i) = i < nv ? mv / static_cast<double>(nv) : (1.0 - mv) / static_cast<double>(n - nv);
                }
            }
        }
        out.attention = std::move(att);
        return out;
    }

private:
    Vocabulary vocab_;
    std::size_t length_;
    std::function<double(std::size_t)> visual_at_;
};

// Random sparse table model over `extra` ordinary tokens and two features.
inline TabularLM random_tabular(std::uint64_t seed, int extra = 4, int order = 2) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> words;
    for (int i = 0; i < extra; ++i) words.push_back("w" + std::to_string(i));
    Vocabulary vocab{std::span<const std::string>(words)};
    std::vector<TokenId> emit{kEos};
    for (int i = 0; i < extra; ++i) emit.push_back(3 + i);
    TabularLM::Table table;
    auto make_row = [&] {
        TabularLM::Row row;
        double total = 0.0;
        for (TokenId t : emit) {
            if (u(eng) < 0.3) continue;
            const double w = u(eng) + 0.01;
            row[t] = w;
            total += w;
        }
        if (row.empty()) {
            row[kEos] = 1.0;
            return row;
        }
        double acc = 0.0;
        for (auto it = row.begin(); it != row.end(); ++it) {
            it->second /= total;
            if (std::next(it) != row.end()) acc += it->second;
        }
        row.rbegin()->second = 1.0 - acc;
        return row;
    };
    std::vector<TokenId> history_tokens{kBos};
    for (TokenId t : emit) history_tokens.push_back(t);
    for (const std::string f : {"f0", "f1", "*"}) {
        table[{f, {}}] = make_row();
        for (TokenId a : history_tokens) {
            table[{f, {a}}] = make_row();
            if (order >= 2) {
                for (TokenId b : emit) {
                    if (u(eng) < 0.5) table[{f, {a, b}}] = make_row();
                }
            }
        }
    }
    return TabularLM(vocab, order, 0.0, table);
}

}  // namespace cwcd::testing
