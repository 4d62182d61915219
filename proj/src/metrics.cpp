// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cwcd/error.hpp"
#include "text_util.hpp"

namespace cwcd {

WordList tokenize_words(std::string_view text) {
    WordList out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            out.emplace_back(1, ch);
        } else {
            cur += static_cast<char>(std::tolower(c));
        }
    }
    flush();
    return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const WordList& words, int n) {
    NgramCounts out;
    if (n < 1 || words.size() < static_cast<std::size_t>(n)) return out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= words.size(); ++i) {
        ++out[std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(i),
                                       words.begin() + static_cast<std::ptrdiff_t>(i) + n)];
    }
    return out;
}

std::size_t clipped_matches(const NgramCounts& hyp, const NgramCounts& ref) {
    std::size_t m = 0;
    for (const auto& [g, c] : hyp) {
        auto it = ref.find(g);
        if (it != ref.end()) m += std::min(c, it->second);
    }
    return m;
}

std::size_t total(const NgramCounts& c) {
    std::size_t t = 0;
    for (const auto& [g, n] : c) t += n;
    return t;
}

Prf make_prf(double matched, double hyp_total, double ref_total) {
    Prf r;
    r.precision = hyp_total > 0 ? matched / hyp_total : 0.0;
    r.recall = ref_total > 0 ? matched / ref_total : 0.0;
    r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

}  // namespace

double corpus_bleu(const std::vector<std::pair<WordList, WordList>>& pairs, int max_n, bool smooth) {
    if (max_n < 1 || max_n > 4) {
        throw ConfigError("BLEU order must be in 1..4");
    }
    std::vector<double> matched(static_cast<std::size_t>(max_n), 0.0), totals(static_cast<std::size_t>(max_n), 0.0);
    double hyp_len = 0.0, ref_len = 0.0;
    for (const auto& [hyp, ref] : pairs) {
        hyp_len += static_cast<double>(hyp.size());
        ref_len += static_cast<double>(ref.size());
        for (int n = 1; n <= max_n; ++n) {
            const auto h = ngrams(hyp, n);
            matched[static_cast<std::size_t>(n - 1)] += static_cast<double>(clipped_matches(h, ngrams(ref, n)));
            totals[static_cast<std::size_t>(n - 1)] += static_cast<double>(total(h));
        }
    }
    if (hyp_len == 0.0) return 0.0;
    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        double m = matched[static_cast<std::size_t>(n - 1)];
        double t = totals[static_cast<std::size_t>(n - 1)];
        if (smooth && n >= 2) {
            m += 1.0;
            t += 1.0;
        }
        if (t == 0.0 || m == 0.0) return 0.0;
        log_sum += std::log(m / t);
    }
    const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    // exact 1 when everything matched
    if (max_n == 1) return bp * matched[0] / totals[0];
    return bp * std::exp(log_sum / max_n);
}

double bleu(const WordList& hyp, const WordList& ref, int max_n, bool smooth) {
    return corpus_bleu({{hyp, ref}}, max_n, smooth);
}

Prf rouge_n(const WordList& hyp, const WordList& ref, int n) {
    if (n < 1) throw ConfigError("ROUGE-N order must be >= 1");
    const auto h = ngrams(hyp, n);
    const auto r = ngrams(ref, n);
    return make_prf(static_cast<double>(clipped_matches(h, r)), static_cast<double>(total(h)),
                    static_cast<double>(total(r)));
}

std::size_t lcs_length(const WordList& a, const WordList& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

Prf rouge_l(const WordList& hyp, const WordList& ref) {
    return make_prf(static_cast<double>(lcs_length(hyp, ref)), static_cast<double>(hyp.size()),
                    static_cast<double>(ref.size()));
}

Prf label_prf(const std::vector<LabelMultiset>& pred, const std::vector<LabelMultiset>& gold) {
    if (pred.size() != gold.size()) {
        throw EvaluationError("label_prf: " + std::to_string(pred.size()) + " predictions for " +
                              std::to_string(gold.size()) + " references");
    }
    struct Counts {
        double tp = 0, fp = 0, fn = 0;
    };
    std::map<std::string, Counts> per_label;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        std::map<std::string, double> p, g;
        for (const auto& l : pred[i]) p[l] += 1.0;
        for (const auto& l : gold[i]) g[l] += 1.0;
        std::set<std::string> labels;
        for (const auto& [l, c] : p) labels.insert(l);
        for (const auto& [l, c] : g) labels.insert(l);
        for (const auto& l : labels) {
            const double pc = p.count(l) ? p[l] : 0.0;
            const double gc = g.count(l) ? g[l] : 0.0;
            const double tp = std::min(pc, gc);
            auto& c = per_label[l];
            c.tp += tp;
            c.fp += pc - tp;
            c.fn += gc - tp;
        }
    }
    double support_total = 0.0;
    Prf out;
    for (const auto& [l, c] : per_label) {
        const double support = c.tp + c.fn;
        if (support == 0.0) continue;
        const Prf r = make_prf(c.tp, c.tp + c.fp, support);
        out.precision += support * r.precision;
        out.recall += support * r.recall;
        out.f1 += support * r.f1;
        support_total += support;
    }
    if (support_total == 0.0) {
        throw EvaluationError("label metrics are undefined without any gold labels");
    }
    out.precision /= support_total;
    out.recall /= support_total;
    out.f1 /= support_total;
    return out;
}

LabelMultiset observation_labels(const StructuredReport& report, std::optional<Category> only) {
    LabelMultiset out;
    for (const auto& [c, obs] : report.sections) {
        if (only && c != *only) continue;
        for (const auto& o : obs) {
            std::string label;
            for (const auto& w : split_whitespace(o)) {
                if (!label.empty()) label += ' ';
                for (char ch : w) label += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            }
            out.push_back(std::move(label));
        }
    }
    return out;
}

namespace {

StructuredReport restrict_to(const StructuredReport& r, const std::set<Category>& keep) {
    StructuredReport out;
    for (const auto& [c, obs] : r.sections) {
        if (keep.count(c)) out.sections[c] = obs;
    }
    return out;
}

MetricValues score_pairs(const std::vector<std::pair<WordList, WordList>>& pairs, const std::vector<LabelMultiset>& pred,
                         const std::vector<LabelMultiset>& gold, bool tolerate_no_labels) {
    MetricValues v;
    v.nlg_pairs = pairs.size();
    if (!pairs.empty()) {
        for (int n = 1; n <= 4; ++n) v.bleu[static_cast<std::size_t>(n - 1)] = corpus_bleu(pairs, n);
        for (const auto& [h, r] : pairs) {
            v.rouge_1 += rouge_n(h, r, 1).f1;
            v.rouge_2 += rouge_n(h, r, 2).f1;
            v.rouge_l += rouge_l(h, r).f1;
        }
        const auto k = static_cast<double>(pairs.size());
        v.rouge_1 /= k;
        v.rouge_2 /= k;
        v.rouge_l /= k;
    }
    try {
        const Prf prf = label_prf(pred, gold);
        v.precision = prf.precision;
        v.recall = prf.recall;
        v.f1 = prf.f1;
    } catch (const EvaluationError&) {
        if (!tolerate_no_labels) throw;
    }
    return v;
}

}  // namespace

MetricReport evaluate_corpus(const std::vector<IdReport>& preds, const std::vector<IdReport>& refs,
                             const LabelExtractor& extractor) {
    std::map<std::string, const StructuredReport*> pred_by_id, ref_by_id;
    for (const auto& [id, r] : preds) {
        if (!pred_by_id.emplace(id, &r).second) throw EvaluationError("duplicate prediction id '" + id + "'");
    }
    for (const auto& [id, r] : refs) {
        if (!ref_by_id.emplace(id, &r).second) throw EvaluationError("duplicate reference id '" + id + "'");
    }
    std::string missing;
    for (const auto& [id, r] : ref_by_id) {
        if (!pred_by_id.count(id)) missing += (missing.empty() ? "" : ", ") + ("no prediction for '" + id + "'");
    }
    for (const auto& [id, r] : pred_by_id) {
        if (!ref_by_id.count(id)) missing += (missing.empty() ? "" : ", ") + ("no reference for '" + id + "'");
    }
    if (!missing.empty()) throw EvaluationError("id mismatch: " + missing);

    // id-sorted
    std::vector<std::pair<WordList, WordList>> pairs;
    std::vector<LabelMultiset> pred_labels, gold_labels;
    std::map<Category, std::vector<std::pair<WordList, WordList>>> cat_pairs;
    std::map<Category, std::vector<LabelMultiset>> cat_pred, cat_gold;
    for (const auto& [id, ref] : ref_by_id) {
        const StructuredReport& pred = *pred_by_id.at(id);
        std::set<Category> matched;
        for (const auto& [c, obs] : ref->sections) {
            if (pred.present(c)) matched.insert(c);
        }
        if (!matched.empty()) {
            pairs.emplace_back(tokenize_words(serialize_structured(restrict_to(pred, matched))),
                               tokenize_words(serialize_structured(restrict_to(*ref, matched))));
        }
        pred_labels.push_back(extractor(pred, std::nullopt));
        gold_labels.push_back(extractor(*ref, std::nullopt));
        for (Category c : kAllCategories) {
            if (matched.count(c)) {
                cat_pairs[c].emplace_back(tokenize_words(serialize_structured(restrict_to(pred, {c}))),
                                          tokenize_words(serialize_structured(restrict_to(*ref, {c}))));
            }
            cat_pred[c].push_back(extractor(pred, c));
            cat_gold[c].push_back(extractor(*ref, c));
        }
    }
    MetricReport report;
    report.overall = score_pairs(pairs, pred_labels, gold_labels, false);
    for (Category c : kAllCategories) {
        report.per_category[c] = score_pairs(cat_pairs[c], cat_pred[c], cat_gold[c], true);
    }
    return report;
}

namespace {

std::vector<std::pair<std::string, double>> flatten(const MetricValues& v) {
    return {{"bleu_1", v.bleu[0]}, {"bleu_2", v.bleu[1]}, {"bleu_3", v.bleu[2]},     {"bleu_4", v.bleu[3]},
            {"rouge_1", v.rouge_1}, {"rouge_2", v.rouge_2}, {"rouge_l", v.rouge_l}, {"precision", v.precision},
            {"recall", v.recall},   {"f1", v.f1}};
}

}  // namespace

std::string format_metric_kv(const MetricReport& report) {
    std::string out;
    for (const auto& [k, v] : flatten(report.overall)) out += k + "=" + detail::format_fixed(v, 9) + "\n";
    out += "nlg_pairs=" + std::to_string(report.overall.nlg_pairs) + "\n";
    return out;
}

std::string format_metric_csv(const MetricReport& report) {
    std::string out = "category";
    for (const auto& [k, v] : flatten(report.overall)) out += "," + k;
    out += ",nlg_pairs\n";
    auto row = [&](std::string_view name, const MetricValues& mv) {
        out += std::string(name);
        for (const auto& [k, v] : flatten(mv)) out += "," + detail::format_fixed(v, 9);
        out += "," + std::to_string(mv.nlg_pairs) + "\n";
    };
    row("ALL", report.overall);
    for (const auto& [c, mv] : report.per_category) row(key(c), mv);
    return out;
}

}  // namespace cwcd
