// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/bench.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "cwcd/error.hpp"
#include "text_util.hpp"

namespace cwcd {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

void fill_range(int lo, int hi, std::mt19937_64& eng, GrayImage& img, const BoundingBox& box) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
            img.at(x, y) = static_cast<std::uint8_t>(lo + static_cast<int>(eng() % span));
        }
    }
}

void draw_evidence(const BenchSpec& spec, const std::vector<BoundingBox>& boxes, std::mt19937_64& eng, GrayImage& img) {
    for (const auto& b : boxes) {
        const BoundingBox in{b.x0 + spec.evidence_inset, b.y0 + spec.evidence_inset, b.x1 - spec.evidence_inset,
                             b.y1 - spec.evidence_inset};
        if (in.x0 >= in.x1 || in.y0 >= in.y1) continue;
        fill_range(spec.evidence_lo, spec.evidence_hi, eng, img, in);
    }
}

std::vector<BoundingBox> boxes_of(const CategoryBoxSet& set, Category c) {
    auto it = set.find(c);
    return it == set.end() ? std::vector<BoundingBox>{} : it->second;
}

TokenSequence encode_list(Vocabulary& vocab, const std::vector<std::string>& words, bool grow) {
    TokenSequence out;
    for (const auto& w : words) out.push_back(grow ? vocab.add(w) : vocab.id(w));
    return out;
}

std::vector<std::string> words_of(std::string_view text) { return split_whitespace(text); }

void add_fixed_tokens(Vocabulary& vocab) {
    for (const auto& w : words_of(kSingleStreamPrompt)) vocab.add(w);
    for (Category c : kAllCategories) {
        for (const auto& w : words_of(category_prompt(c))) vocab.add(w);
        vocab.add(header_token(c));
    }
    vocab.add(kBulletToken);
    vocab.add(kNoFindingsSentinel);
}

TrainingSequence make_sequence(const Vocabulary& vocab, std::string feature, std::string_view prompt,
                               const std::vector<std::string>& body) {
    TrainingSequence s;
    s.feature = std::move(feature);
    s.tokens.push_back(kBos);
    for (const auto& w : words_of(prompt)) s.tokens.push_back(vocab.id(w));
    for (const auto& w : body) s.tokens.push_back(vocab.id(w));
    s.tokens.push_back(kEos);
    return s;
}

bool has_marker(const StructuredReport& report, std::string_view marker) {
    const auto m = tokenize_words(marker);
    for (const auto& [c, obs] : report.sections) {
        for (const auto& o : obs) {
            const auto words = tokenize_words(o);
            for (const auto& w : words) {
                if (m.size() == 1 && w == m[0]) return true;
            }
        }
    }
    return false;
}

std::string format_row_values(const VariantRow& r) {
    const auto& m = r.metrics.overall;
    std::string out = std::string(to_string(r.cfg.mode)) + "," + std::string(to_string(r.cfg.vp_mode)) + "," +
                      detail::format_fixed(r.cfg.alpha, 2) + "," + detail::format_fixed(r.cfg.beta, 2) + "," +
                      (r.cfg.subselection_enabled ? "on" : "off") + "," + std::to_string(r.test_examples) + "," +
                      std::to_string(r.spurious) + "," + detail::format_fixed(r.spurious_rate, 6) + "," +
                      detail::format_fixed(r.mean_vsub, 6) + "," + std::to_string(r.errors);
    for (double v : {m.bleu[0], m.bleu[1], m.bleu[2], m.bleu[3], m.rouge_1, m.rouge_2, m.rouge_l, m.precision,
                     m.recall, m.f1}) {
        out += "," + detail::format_fixed(v, 6);
    }
    return out;
}

constexpr std::string_view kRowColumns =
    "mode,vp_mode,alpha,beta,subselection,test_examples,spurious,spurious_rate,mean_vsub,errors,"
    "bleu_1,bleu_2,bleu_3,bleu_4,rouge_1,rouge_2,rouge_l,precision,recall,f1";

}  // namespace

void BenchSpec::validate() const {
    for (double p : {p_a, p_text, p_img}) {
        if (!is_probability(p)) throw ConfigError("bench probabilities must lie in [0, 1]");
    }
    if (p_img > p_text) throw ConfigError("p_img must not exceed p_text");
    if (examples == 0) throw ConfigError("bench needs at least one example");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    if (image_size < 1) throw ConfigError("image_size must be positive");
    if (finding_a.category == finding_b.category) throw ConfigError("findings A and B need distinct categories");
    for (const auto* f : {&finding_a, &finding_b}) {
        if (f->text.empty() || f->normal_text.empty() || f->marker.empty()) {
            throw ConfigError("finding text, normal text and marker must be non-empty");
        }
        if (tokenize_words(f->marker).size() != 1) throw ConfigError("finding marker must be a single word");
    }
    for (const auto& [c, obs] : constant_findings) {
        if (c == finding_a.category || c == finding_b.category) {
            throw ConfigError("constant findings may not share a category with A or B");
        }
    }
    auto range_ok = [](int lo, int hi) { return 0 <= lo && lo <= hi && hi <= 255; };
    if (!range_ok(background_lo, background_hi) || !range_ok(evidence_lo, evidence_hi)) {
        throw ConfigError("pixel ranges must satisfy 0 <= lo <= hi <= 255");
    }
    if (evidence_inset < 0) throw ConfigError("evidence_inset must be non-negative");
    if (order < 1) throw ConfigError("order must be >= 1");
    if (!(smoothing >= 0.0)) throw ConfigError("smoothing must be non-negative");
    if (!(alpha >= 0.0) || !is_probability(beta)) throw ConfigError("alpha must be >= 0 and beta in [0, 1]");
    if (encoder.patch < 1 || encoder.levels < 1) throw ConfigError("encoder patch and levels must be positive");
    if (boxes_of(layout, finding_b.category).empty()) throw ConfigError("layout has no box for finding B");
    const GrayImage probe(image_size, image_size);
    try {
        validate_boxes(probe, layout);
    } catch (const Error& e) {
        throw ConfigError(std::string("layout does not fit the image: ") + e.what());
    }
}

CategoryBoxSet default_layout() {
    return {
        {Category::LungsAndAirways, {{6, 6, 26, 40}, {38, 6, 58, 40}}},
        {Category::Pleura, {{2, 44, 20, 60}, {44, 44, 62, 60}}},
        {Category::Cardiovascular, {{26, 30, 38, 54}}},
    };
}

BenchSpec default_bench_spec() {
    BenchSpec s;
    s.layout = default_layout();
    return s;
}

double unit_uniform(std::uint64_t draw) { return static_cast<double>(draw >> 11) * 0x1.0p-53; }

std::vector<const BenchExample*> BenchCorpus::split(bool test) const {
    std::vector<const BenchExample*> out;
    for (const auto& ex : examples) {
        if (ex.test == test) out.push_back(&ex);
    }
    return out;
}

BenchCorpus gen_corpus(const BenchSpec& spec) {
    spec.validate();
    BenchCorpus corpus;
    corpus.spec = spec;
    std::mt19937_64 labels(spec.seed);
    const double p_img_given_text = spec.p_text > 0.0 ? spec.p_img / spec.p_text : 0.0;
    const auto a_boxes = boxes_of(spec.layout, spec.finding_a.category);
    const auto b_boxes = boxes_of(spec.layout, spec.finding_b.category);

    corpus.examples.reserve(spec.examples);
    for (std::size_t i = 0; i < spec.examples; ++i) {
        const double u_a = unit_uniform(labels());
        const double u_text = unit_uniform(labels());
        const double u_img = unit_uniform(labels());
        BenchExample ex;
        char id[32];
        std::snprintf(id, sizeof id, "ex%04zu", i);
        ex.id = id;
        ex.boxes = spec.layout;
        ex.a_present = u_a < spec.p_a;
        ex.b_mentioned = ex.a_present && u_text < spec.p_text;
        ex.b_imaged = ex.b_mentioned && u_img < p_img_given_text;

        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
        std::mt19937_64 pixels(seq);
        ex.image = GrayImage(spec.image_size, spec.image_size);
        fill_range(spec.background_lo, spec.background_hi, pixels,
                   ex.image, BoundingBox{0, 0, spec.image_size, spec.image_size});
        if (ex.a_present) draw_evidence(spec, a_boxes, pixels, ex.image);
        if (ex.b_imaged) draw_evidence(spec, b_boxes, pixels, ex.image);

        auto& sec = ex.report.sections;
        sec[spec.finding_a.category] = {ex.a_present ? spec.finding_a.text : spec.finding_a.normal_text};
        sec[spec.finding_b.category] = {ex.b_mentioned ? spec.finding_b.text : spec.finding_b.normal_text};
        for (const auto& [c, obs] : spec.constant_findings) {
            if (!obs.empty()) sec[c] = obs;
        }
        corpus.examples.push_back(std::move(ex));
    }

    // Fisher-Yates on the label stream, continued past the label draws.
    std::vector<std::size_t> order(spec.examples);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i-- > 1;) {
        const auto j = static_cast<std::size_t>(unit_uniform(labels()) * static_cast<double>(i + 1));
        std::swap(order[i], order[std::min(j, i)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.examples)));
    for (std::size_t k = n_train; k < order.size(); ++k) corpus.examples[order[k]].test = true;
    return corpus;
}

PipelineModels BenchModels::pipeline() const {
    PipelineModels p;
    p.single = single;
    for (const auto& [c, m] : categories) p.categories[c] = m;
    p.policy = MissingAdapterPolicy::PassThrough;
    return p;
}

namespace {

Vocabulary bench_vocabulary(const BenchCorpus& corpus) {
    Vocabulary vocab;
    add_fixed_tokens(vocab);
    for (const auto* ex : corpus.split(false)) {
        encode_list(vocab, report_words(ex->report), true);
    }
    return vocab;
}

}  // namespace

std::vector<TrainingSequence> single_stream_sequences(const BenchCorpus& corpus, const Vocabulary& vocab) {
    std::vector<TrainingSequence> out;
    for (const auto* ex : corpus.split(false)) {
        const auto feature =
            single_stream_feature(summarize_features(ex->image, ex->boxes, corpus.spec.encoder.feature_threshold));
        out.push_back(make_sequence(vocab, feature, kSingleStreamPrompt, report_words(ex->report)));
    }
    return out;
}

std::vector<TrainingSequence> category_sequences(const BenchCorpus& corpus, Category c, const Vocabulary& vocab) {
    std::vector<TrainingSequence> out;
    for (const auto* ex : corpus.split(false)) {
        auto it = ex->report.sections.find(c);
        if (it == ex->report.sections.end() && !corpus.spec.negatives) continue;
        const auto summary = summarize_features(ex->image, ex->boxes, corpus.spec.encoder.feature_threshold);
        auto f = summary.find(c);
        const std::string feature = f == summary.end() ? std::string(kAbsent) : f->second;
        const std::vector<std::string> obs = it == ex->report.sections.end() ? std::vector<std::string>{} : it->second;
        out.push_back(make_sequence(vocab, feature, category_prompt(c), category_body_words(obs)));
    }
    return out;
}

BenchModels fit_bench_models(const BenchCorpus& corpus) {
    const Vocabulary vocab = bench_vocabulary(corpus);
    const auto& spec = corpus.spec;
    BenchModels models;
    models.single = std::make_shared<const TabularLM>(
        tabular_fit(vocab, single_stream_sequences(corpus, vocab), spec.order, spec.smoothing));
    for (Category c : kAllCategories) {
        auto seqs = category_sequences(corpus, c, vocab);
        if (seqs.empty()) continue;
        models.categories[c] = std::make_shared<const TabularLM>(tabular_fit(vocab, seqs, spec.order, spec.smoothing));
    }
    return models;
}

std::vector<VariantConfig> ablation_grid(double alpha, double beta) {
    auto make = [&](std::string name, DecodeMode mode, VpMode vp, bool vs) {
        VariantConfig v;
        v.name = std::move(name);
        v.cfg.alpha = alpha;
        v.cfg.beta = beta;
        v.cfg.mode = mode;
        v.cfg.vp_mode = vp;
        v.cfg.subselection_enabled = vs;
        return v;
    };
    return {
        make("greedy", DecodeMode::Greedy, VpMode::None, false),
        make("CD+VS", DecodeMode::Cd, VpMode::All, true),
        make("CW", DecodeMode::Cw, VpMode::None, false),
        make("CWCD w/o VS", DecodeMode::Cwcd, VpMode::Category, false),
        make("CWCD all VP", DecodeMode::Cwcd, VpMode::All, true),
        make("CWCD cat VP", DecodeMode::Cwcd, VpMode::Category, true),
    };
}

bool spurious_b(const BenchSpec& spec, const BenchExample& ex, const StructuredReport& predicted) {
    if (!has_marker(predicted, spec.finding_b.marker)) return false;
    const auto summary = summarize_features(ex.image, ex.boxes, spec.encoder.feature_threshold);
    auto it = summary.find(spec.finding_b.category);
    return it == summary.end() || it->second != kPresent;
}

std::size_t ground_truth_spurious(const BenchCorpus& corpus) {
    std::size_t n = 0;
    for (const auto& ex : corpus.examples) n += spurious_b(corpus.spec, ex, ex.report) ? 1 : 0;
    return n;
}

VariantRow run_variant(const BenchCorpus& corpus, const BenchModels& models, const VariantConfig& variant, int jobs) {
    const auto pipe = models.pipeline();
    validate_pipeline(pipe, variant.cfg);
    PipelineSettings settings;
    settings.encoder = corpus.spec.encoder;

    const auto test = corpus.split(true);
    std::vector<ExampleOutput> outputs(test.size());
    const auto errors = parallel_for(test.size(), jobs, [&](std::size_t i) {
        outputs[i] = generate_report(pipe, test[i]->image, test[i]->boxes, variant.cfg, settings);
    });

    VariantRow row;
    row.name = variant.name;
    row.cfg = variant.cfg;
    row.test_examples = test.size();
    std::size_t steps = 0, vsub_total = 0;
    const bool contrastive = variant.cfg.mode == DecodeMode::Cd || variant.cfg.mode == DecodeMode::Cwcd;
    std::vector<IdReport> refs;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (!errors[i].empty()) {
            ++row.errors;
            outputs[i] = ExampleOutput{};
        }
        if (spurious_b(corpus.spec, *test[i], outputs[i].report)) ++row.spurious;
        if (contrastive) {
            for (const auto& [name, trace] : outputs[i].traces) {
                for (const auto& st : trace.steps) {
                    ++steps;
                    vsub_total += st.vsub_size;
                }
            }
        }
        row.predictions.emplace_back(test[i]->id, outputs[i].report);
        refs.emplace_back(test[i]->id, test[i]->report);
    }
    row.spurious_rate = test.empty() ? 0.0 : static_cast<double>(row.spurious) / static_cast<double>(test.size());
    row.mean_vsub = steps ? static_cast<double>(vsub_total) / static_cast<double>(steps) : 0.0;
    if (!test.empty()) row.metrics = evaluate_corpus(row.predictions, refs);
    return row;
}

BenchResult run_bench(const BenchCorpus& corpus, const BenchModels& models, const std::vector<VariantConfig>& grid,
                      int jobs) {
    const auto pipe = models.pipeline();
    for (const auto& v : grid) {
        try {
            validate_pipeline(pipe, v.cfg);
        } catch (const ConfigError& e) {
            throw ConfigError("variant '" + v.name + "': " + e.what());
        }
    }
    BenchResult result;
    result.corpus_spurious = ground_truth_spurious(corpus);
    for (const auto& v : grid) result.rows.push_back(run_variant(corpus, models, v, jobs));
    return result;
}

std::vector<std::pair<double, VariantRow>> beta_sweep(const BenchCorpus& corpus, const BenchModels& models,
                                                      const std::vector<double>& betas, double alpha, int jobs) {
    for (double b : betas) {
        if (!is_probability(b)) throw ConfigError("beta values must lie in [0, 1]");
    }
    std::vector<std::pair<double, VariantRow>> out;
    for (double b : betas) {
        VariantConfig v;
        v.name = "CWCD beta=" + detail::format_fixed(b, 2);
        v.cfg.alpha = alpha;
        v.cfg.beta = b;
        v.cfg.mode = DecodeMode::Cwcd;
        v.cfg.vp_mode = VpMode::Category;
        v.cfg.subselection_enabled = true;
        out.emplace_back(b, run_variant(corpus, models, v, jobs));
    }
    return out;
}

std::string format_bench_csv(const std::vector<VariantRow>& rows) {
    std::string out = "variant," + std::string(kRowColumns) + "\n";
    for (const auto& r : rows) out += detail::csv_field(r.name) + "," + format_row_values(r) + "\n";
    return out;
}

std::string format_beta_csv(const std::vector<std::pair<double, VariantRow>>& rows) {
    std::string out = "sweep_beta," + std::string(kRowColumns) + "\n";
    for (const auto& [b, r] : rows) out += detail::format_fixed(b, 2) + "," + format_row_values(r) + "\n";
    return out;
}

std::string format_bench_summary(const BenchResult& result) {
    std::string out = "reference spurious-B count (all examples): " + std::to_string(result.corpus_spurious) + "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %9s %10s %9s %7s %7s\n", "variant", "spurious", "rate", "bleu_4",
                  "rougeL", "f1");
    out += line;
    auto emit = [&](const std::string& name, const VariantRow& r) {
        std::snprintf(line, sizeof line, "%-14s %4zu/%-4zu %10.4f %9.4f %7.4f %7.4f\n", name.c_str(), r.spurious,
                      r.test_examples, r.spurious_rate, r.metrics.overall.bleu[3], r.metrics.overall.rouge_l,
                      r.metrics.overall.f1);
        out += line;
    };
    for (const auto& r : result.rows) emit(r.name, r);
    if (!result.beta_rows.empty()) {
        out += "beta sweep (CWCD, category masks):\n";
        for (const auto& [b, r] : result.beta_rows) emit("beta=" + detail::format_fixed(b, 2), r);
    }
    return out;
}

}  // namespace cwcd
