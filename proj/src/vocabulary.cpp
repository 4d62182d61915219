// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/vocabulary.hpp"

#include <cctype>

#include "cwcd/error.hpp"

namespace cwcd {

Vocabulary::Vocabulary() {
    add(kBosText);
    add(kEosText);
    add(kPadText);
}

Vocabulary::Vocabulary(std::span<const std::string> extra_tokens) : Vocabulary() {
    for (const auto& t : extra_tokens) {
        if (contains(t)) {
            throw ValidationError("duplicate vocabulary token '" + t + "'");
        }
        add(t);
    }
}

TokenId Vocabulary::add(std::string_view token) {
    if (token.empty()) {
        throw ValidationError("empty vocabulary token");
    }
    std::string key(token);
    if (auto it = index_.find(key); it != index_.end()) {
        return it->second;
    }
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.count(std::string(token)) != 0;
}

TokenId Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) {
        throw ValidationError("token '" + std::string(token) + "' is not in the vocabulary");
    }
    return it->second;
}

const std::string& Vocabulary::text(TokenId id) const {
    if (!valid(id)) {
        throw ValidationError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                              std::to_string(tokens_.size()));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::encode_words(std::string_view text) const {
    TokenSequence out;
    for (const auto& w : split_whitespace(text)) {
        out.push_back(id(w));
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace cwcd
