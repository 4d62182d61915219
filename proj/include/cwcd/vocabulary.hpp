// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cwcd {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kPad = 2;

inline constexpr std::string_view kBosText = "<bos>";
inline constexpr std::string_view kEosText = "<eos>";
inline constexpr std::string_view kPadText = "<pad>";

// Ordered set of distinct surface forms. Ids 0, 1 and 2 are always BOS, EOS
// and PAD; everything else is appended in insertion order.
class Vocabulary {
public:
    Vocabulary();
    explicit Vocabulary(std::span<const std::string> extra_tokens);

    // Adds `token` if missing and returns its id.
    TokenId add(std::string_view token);

    bool contains(std::string_view token) const;
    TokenId id(std::string_view token) const;  // throws ValidationError when absent
    const std::string& text(TokenId id) const;
    std::size_t size() const { return tokens_.size(); }
    bool valid(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }
    static bool is_reserved(TokenId id) { return id == kBos || id == kEos || id == kPad; }

    const std::vector<std::string>& tokens() const { return tokens_; }

    // Whitespace split followed by id lookup; unknown words are an error.
    TokenSequence encode_words(std::string_view text) const;

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace cwcd
