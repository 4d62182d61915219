// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/report.hpp"

#include <sstream>

#include "cwcd/error.hpp"
#include "text_util.hpp"

namespace cwcd {

namespace {

TokenSequence strip_eos_tokens(const TokenSequence& tokens) {
    TokenSequence out;
    for (TokenId t : tokens) {
        if (t == kEos) break;
        out.push_back(t);
    }
    return out;
}

}  // namespace

std::size_t StructuredReport::observation_count() const {
    std::size_t n = 0;
    for (const auto& [c, obs] : sections) n += obs.size();
    return n;
}

StructuredReport parse_structured(std::string_view text) {
    StructuredReport report;
    std::optional<Category> current;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = detail::trim(text.substr(start, end - start));
        ++lineno;
        start = end + 1;
        const auto fail = [&](const std::string& msg) {
            return ParseError("line " + std::to_string(lineno) + ": " + msg);
        };
        if (line.empty()) continue;
        if (line == "-" || line.rfind("- ", 0) == 0) {
            if (!current) throw fail("bullet before any header");
            std::string obs = line.size() > 1 ? detail::trim(line.substr(2)) : std::string();
            if (obs.empty()) throw fail("empty bullet");
            report.sections[*current].push_back(std::move(obs));
        } else if (line.back() == ':') {
            const std::string name = detail::trim(std::string_view(line).substr(0, line.size() - 1));
            const auto c = category_from_header(name);
            if (!c) throw fail("unknown header '" + name + "'");
            if (report.present(*c)) throw fail("duplicate header '" + name + "'");
            report.sections[*c];
            current = c;
        } else {
            throw fail("expected a '<Header>:' line or a '- ' bullet, got '" + line + "'");
        }
    }
    return report;
}

std::string serialize_structured(const StructuredReport& report) {
    std::string out;
    for (Category c : kAllCategories) {
        auto it = report.sections.find(c);
        if (it == report.sections.end()) continue;
        out += header(c);
        out += ":\n";
        for (const auto& obs : it->second) {
            out += "- ";
            out += obs;
            out += "\n";
        }
    }
    return out;
}

std::string category_prompt(Category c, std::string_view templ) {
    std::string out(templ);
    const std::string placeholder = "{header}";
    for (auto pos = out.find(placeholder); pos != std::string::npos; pos = out.find(placeholder, pos)) {
        out.replace(pos, placeholder.size(), header(c));
        pos += header(c).size();
    }
    return out;
}

std::map<Category, std::vector<CategoryRecord>> split_by_category(
    const std::vector<std::pair<std::string, StructuredReport>>& corpus, bool negatives,
    std::string_view prompt_template) {
    std::map<Category, std::vector<CategoryRecord>> out;
    for (Category c : kAllCategories) out[c];
    for (const auto& [id, report] : corpus) {
        if (id.empty()) throw ValidationError("corpus entry with an empty image id");
        for (Category c : kAllCategories) {
            auto it = report.sections.find(c);
            if (it == report.sections.end() && !negatives) continue;
            CategoryRecord rec;
            rec.image_id = id;
            rec.category = c;
            if (it != report.sections.end()) rec.observations = it->second;
            rec.prompt = category_prompt(c, prompt_template);
            out[c].push_back(std::move(rec));
        }
    }
    return out;
}

std::string header_token(Category c) { return std::string(header(c)) + ":"; }

std::vector<std::string> category_body_words(const std::vector<std::string>& observations) {
    if (observations.empty()) return {std::string(kNoFindingsSentinel)};
    std::vector<std::string> out;
    for (const auto& obs : observations) {
        out.emplace_back(kBulletToken);
        for (auto& w : split_whitespace(obs)) out.push_back(std::move(w));
    }
    return out;
}

std::vector<std::string> report_words(const StructuredReport& report) {
    std::vector<std::string> out;
    for (Category c : kAllCategories) {
        auto it = report.sections.find(c);
        if (it == report.sections.end()) continue;
        out.push_back(header_token(c));
        for (const auto& obs : it->second) {
            out.emplace_back(kBulletToken);
            for (auto& w : split_whitespace(obs)) out.push_back(std::move(w));
        }
    }
    return out;
}

namespace {

std::optional<Category> as_header_token(std::string_view word) {
    if (word.empty() || word.back() != ':') return std::nullopt;
    auto c = category_from_header(word.substr(0, word.size() - 1));
    if (c && header_token(*c) == word) return c;
    return std::nullopt;
}

}  // namespace

std::optional<std::vector<std::string>> detokenize_category(const TokenSequence& body, const Vocabulary& vocab) {
    const TokenSequence tokens = strip_eos_tokens(body);
    if (tokens.empty()) return std::nullopt;
    if (tokens.size() == 1 && vocab.text(tokens[0]) == kNoFindingsSentinel) return std::nullopt;
    std::vector<std::string> obs;
    std::optional<std::string> current;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const TokenId t = tokens[i];
        const std::string& w = vocab.text(t);
        const auto where = " at token " + std::to_string(i);
        if (Vocabulary::is_reserved(t)) throw ParseError("reserved token " + w + where);
        if (as_header_token(w)) throw ParseError("header token '" + w + "'" + where);
        if (w == kBulletToken) {
            if (current) {
                if (current->empty()) throw ParseError("empty observation" + where);
                obs.push_back(std::move(*current));
            }
            current = std::string();
            continue;
        }
        if (!current) throw ParseError("text before the first bullet" + where);
        if (!current->empty()) *current += ' ';
        *current += w;
    }
    if (current) {
        if (current->empty()) throw ParseError("empty observation at end of output");
        obs.push_back(std::move(*current));
    }
    if (obs.size() == 1 && obs[0] == kNoFindingsSentinel) return std::nullopt;
    return obs;
}

DetokenizedReport detokenize_report(const TokenSequence& body, const Vocabulary& vocab) {
    DetokenizedReport out;
    std::optional<Category> section;
    std::optional<std::string> current;
    auto flush = [&] {
        if (!current) return;
        if (current->empty()) {
            ++out.dropped_tokens;
        } else {
            out.report.sections[*section].push_back(std::move(*current));
        }
        current.reset();
    };
    for (TokenId t : strip_eos_tokens(body)) {
        const std::string& w = vocab.text(t);
        if (Vocabulary::is_reserved(t)) {
            ++out.dropped_tokens;
        } else if (auto c = as_header_token(w)) {
            flush();
            section = c;
            out.report.sections[*c];
        } else if (w == kBulletToken) {
            if (!section) {
                ++out.dropped_tokens;
                continue;
            }
            flush();
            current = std::string();
        } else if (current) {
            if (!current->empty()) *current += ' ';
            *current += w;
        } else {
            ++out.dropped_tokens;
        }
    }
    flush();
    return out;
}

StructuredReport assemble(const std::map<Category, TokenSequence>& outputs, const Vocabulary& vocab) {
    StructuredReport report;
    for (const auto& [c, seq] : outputs) {
        std::optional<std::vector<std::string>> obs;
        try {
            obs = detokenize_category(seq, vocab);
        } catch (const Error& e) {
            throw ParseError("category " + std::string(key(c)) + ": " + e.what());
        }
        if (obs) report.sections[c] = std::move(*obs);
    }
    return report;
}

}  // namespace cwcd
