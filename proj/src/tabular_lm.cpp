// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/tabular_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "cwcd/error.hpp"
#include "cwcd/scoring.hpp"
#include "text_util.hpp"

namespace cwcd {

namespace {

using detail::escape;
using detail::split_on;
using detail::unescape;

constexpr std::string_view kFormatTag = "cwcd-tabular/1";
constexpr std::size_t kTabularContextBound = std::size_t{1} << 20;

}  // namespace

TabularLM::TabularLM(Vocabulary vocab, int order, double smoothing, Table table)
    : vocab_(std::move(vocab)), order_(order), smoothing_(smoothing), table_(std::move(table)) {
    if (order_ < 1) {
        throw ConfigError("tabular model order must be >= 1");
    }
    if (!(smoothing_ >= 0.0)) {
        throw ConfigError("smoothing must be >= 0");
    }
    for (const auto& [key, row] : table_) {
        if (key.feature.empty()) {
            throw ModelError("tabular row with an empty feature");
        }
        if (key.context.size() > static_cast<std::size_t>(order_)) {
            throw ModelError("tabular context longer than the model order");
        }
        double sum = 0.0;
        for (TokenId t : key.context) {
            if (!vocab_.valid(t)) throw ModelError("tabular context token out of range");
        }
        for (const auto& [tok, p] : row) {
            if (!vocab_.valid(tok)) throw ModelError("tabular row token out of range");
            if (!(p >= 0.0 && p <= 1.0)) throw ModelError("tabular probability outside [0, 1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw ModelError("tabular row for feature '" + key.feature + "' sums to " + detail::format_exact(sum));
        }
    }
}

std::size_t TabularLM::max_context() const { return kTabularContextBound; }

const TabularLM::Row* TabularLM::resolve(const std::string& feature, std::span<const TokenId> history) const {
    const std::size_t n = std::min(history.size(), static_cast<std::size_t>(order_));
    const auto tail = history.subspan(history.size() - n);
    Key key;
    for (const std::string* f : std::initializer_list<const std::string*>{&feature, nullptr}) {
        key.feature = f ? *f : std::string(kAnyFeature);
        for (std::size_t j = n + 1; j-- > 0;) {
            key.context.assign(tail.end() - static_cast<std::ptrdiff_t>(j), tail.end());
            if (auto it = table_.find(key); it != table_.end()) return &it->second;
        }
    }
    return nullptr;
}

std::vector<double> TabularLM::probabilities(const std::string& feature, std::span<const TokenId> history) const {
    std::vector<double> probs(vocab_.size(), 0.0);
    if (const Row* row = resolve(feature, history)) {
        for (const auto& [tok, p] : *row) probs[static_cast<std::size_t>(tok)] = p;
        return probs;
    }
    const double u = 1.0 / static_cast<double>(vocab_.size() - 2);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (static_cast<TokenId>(i) != kBos && static_cast<TokenId>(i) != kPad) probs[i] = u;
    }
    return probs;
}

ModelOutput TabularLM::forward(const VisualContext& visual, std::span<const TokenId> prompt,
                               std::span<const TokenId> prefix) const {
    check_context(visual.tokens.size(), prompt.size(), prefix.size());
    TokenSequence history;
    const std::size_t want = static_cast<std::size_t>(order_);
    const std::size_t from_prefix = std::min(want, prefix.size());
    const std::size_t from_prompt = std::min(want - from_prefix, prompt.size());
    history.insert(history.end(), prompt.end() - static_cast<std::ptrdiff_t>(from_prompt), prompt.end());
    history.insert(history.end(), prefix.end() - static_cast<std::ptrdiff_t>(from_prefix), prefix.end());

    ModelOutput out;
    const auto probs = probabilities(visual.feature, history);
    out.logits.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        out.logits[i] = std::log(std::max(probs[i], kProbFloor));
    }
    return out;
}

std::vector<std::string> TabularLM::features() const {
    std::set<std::string> seen;
    for (const auto& [key, row] : table_) {
        if (key.feature != kAnyFeature) seen.insert(key.feature);
    }
    return {seen.begin(), seen.end()};
}

bool TabularLM::operator==(const TabularLM& other) const {
    return vocab_ == other.vocab_ && order_ == other.order_ && smoothing_ == other.smoothing_ &&
           table_ == other.table_;
}

TabularLM tabular_fit(const Vocabulary& vocab, const std::vector<TrainingSequence>& corpus, int order,
                      double smoothing) {
    if (corpus.empty()) {
        throw ModelError("cannot fit a tabular model on an empty corpus");
    }
    if (order < 1) {
        throw ConfigError("tabular model order must be >= 1");
    }
    if (!(smoothing >= 0.0)) {
        throw ConfigError("smoothing must be >= 0");
    }
    std::map<TabularLM::Key, std::map<TokenId, double>> counts;
    for (const auto& seq : corpus) {
        if (seq.feature.empty() || seq.feature == kAnyFeature) {
            throw ModelError("training feature must be non-empty and not '*'");
        }
        for (TokenId t : seq.tokens) {
            if (!vocab.valid(t)) throw ModelError("training token out of vocabulary range");
        }
        for (std::size_t i = 1; i < seq.tokens.size(); ++i) {
            const TokenId target = seq.tokens[i];
            const std::size_t max_j = std::min(i, static_cast<std::size_t>(order));
            for (std::size_t j = 0; j <= max_j; ++j) {
                TokenSequence ctx(seq.tokens.begin() + static_cast<std::ptrdiff_t>(i - j),
                                  seq.tokens.begin() + static_cast<std::ptrdiff_t>(i));
                counts[{seq.feature, ctx}][target] += 1.0;
                counts[{std::string(kAnyFeature), std::move(ctx)}][target] += 1.0;
            }
        }
    }
    TabularLM::Table table;
    for (auto& [key, row] : counts) {
        double total = 0.0;
        for (const auto& [tok, c] : row) total += c;
        TabularLM::Row probs;
        if (smoothing == 0.0) {
            for (const auto& [tok, c] : row) probs[tok] = c / total;
        } else {
            std::set<TokenId> support;
            for (std::size_t i = 0; i < vocab.size(); ++i) {
                const auto t = static_cast<TokenId>(i);
                if (t != kBos && t != kPad) support.insert(t);
            }
            for (const auto& [tok, c] : row) support.insert(tok);
            const double denom = total + smoothing * static_cast<double>(support.size());
            for (TokenId t : support) {
                auto it = row.find(t);
                probs[t] = ((it == row.end() ? 0.0 : it->second) + smoothing) / denom;
            }
        }
        table.emplace(key, std::move(probs));
    }
    return TabularLM(vocab, order, smoothing, std::move(table));
}

std::string serialize_tabular(const TabularLM& model) {
    const auto& vocab = model.vocabulary();
    std::ostringstream os;
    os << "format = " << kFormatTag << "\n";
    os << "order = " << model.order() << "\n";
    os << "smoothing = " << detail::format_exact(model.smoothing()) << "\n";
    os << "features = ";
    const auto feats = model.features();
    for (std::size_t i = 0; i < feats.size(); ++i) os << (i ? "," : "") << escape(feats[i]);
    os << "\n";
    os << "vocab =";
    for (const auto& t : vocab.tokens()) os << " " << escape(t);
    os << "\n";
    for (const auto& [key, row] : model.table()) {
        os << escape(key.feature) << " |";
        for (TokenId t : key.context) os << " " << escape(vocab.text(t));
        os << " ->";
        bool first = true;
        for (const auto& [tok, p] : row) {
            os << (first ? " " : ", ") << escape(vocab.text(tok)) << ":" << detail::format_exact(p);
            first = false;
        }
        os << "\n";
    }
    return os.str();
}

TabularLM parse_tabular(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    std::optional<int> order;
    std::optional<double> smoothing;
    std::optional<Vocabulary> vocab;
    bool format_seen = false;
    TabularLM::Table table;

    auto header_value = [&](const std::string& l, std::string_view k) -> std::optional<std::string> {
        const std::string prefix = std::string(k) + " =";
        if (l.rfind(prefix, 0) != 0) return std::nullopt;
        std::string v = l.substr(prefix.size());
        if (!v.empty() && v.front() == ' ') v.erase(0, 1);
        return v;
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto at = [&](const std::string& msg) { return ParseError("line " + std::to_string(lineno) + ": " + msg); };
        if (auto v = header_value(line, "format")) {
            if (*v != kFormatTag) throw at("unsupported format '" + *v + "'");
            format_seen = true;
        } else if (auto v = header_value(line, "order")) {
            try {
                order = std::stoi(*v);
            } catch (const std::exception&) {
                throw at("bad order '" + *v + "'");
            }
        } else if (auto v = header_value(line, "smoothing")) {
            try {
                smoothing = std::stod(*v);
            } catch (const std::exception&) {
                throw at("bad smoothing '" + *v + "'");
            }
        } else if (header_value(line, "features")) {
            // Informational; the row keys carry the features.
        } else if (auto v = header_value(line, "vocab")) {
            std::vector<std::string> toks;
            for (const auto& w : split_whitespace(*v)) toks.push_back(unescape(w, lineno));
            if (toks.size() < 3 || toks[0] != kBosText || toks[1] != kEosText || toks[2] != kPadText) {
                throw at("vocabulary must start with <bos> <eos> <pad>");
            }
            try {
                vocab = Vocabulary(std::span<const std::string>(toks).subspan(3));
            } catch (const ValidationError& e) {
                throw at(e.what());
            }
        } else {
            if (!vocab) throw at("table row before the vocab line");
            const auto bar = line.find(" |");
            const auto arrow = line.find(" ->", bar == std::string::npos ? 0 : bar);
            if (bar == std::string::npos || arrow == std::string::npos) {
                throw at("expected 'feature | context -> token:prob, ...'");
            }
            TabularLM::Key key;
            key.feature = unescape(line.substr(0, bar), lineno);
            try {
                for (const auto& w : split_whitespace(line.substr(bar + 2, arrow - bar - 2))) {
                    key.context.push_back(vocab->id(unescape(w, lineno)));
                }
                TabularLM::Row row;
                const std::string entries = line.substr(arrow + 3);
                for (auto& e : split_on(entries, ",")) {
                    const auto words = split_whitespace(e);
                    if (words.size() != 1) throw at("bad row entry '" + e + "'");
                    const auto colon = words[0].rfind(':');
                    if (colon == std::string::npos) throw at("row entry without ':' in '" + e + "'");
                    const TokenId tok = vocab->id(unescape(words[0].substr(0, colon), lineno));
                    std::size_t used = 0;
                    const std::string num = words[0].substr(colon + 1);
                    const double p = std::stod(num, &used);
                    if (used != num.size()) throw at("bad probability '" + num + "'");
                    if (!row.emplace(tok, p).second) throw at("token repeated in row");
                }
                if (!table.emplace(std::move(key), std::move(row)).second) throw at("duplicate row key");
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception& e) {
                throw at(e.what());
            }
        }
    }
    if (!format_seen) throw ParseError("missing 'format' line");
    if (!order || !smoothing || !vocab) throw ParseError("missing order, smoothing or vocab line");
    try {
        return TabularLM(std::move(*vocab), *order, *smoothing, std::move(table));
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
}

TabularLM load_tabular(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open tabular model '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_tabular(ss.str());
}

void save_tabular(const TabularLM& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << serialize_tabular(model);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace cwcd
