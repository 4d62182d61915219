// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwcd/attention.hpp"
#include "cwcd/bench.hpp"
#include "cwcd/corpus.hpp"
#include "cwcd/error.hpp"
#include "cwcd/image.hpp"
#include "cwcd/metrics.hpp"
#include "cwcd/pipeline.hpp"

namespace fs = std::filesystem;
using cwcd::Category;
using nlohmann::ordered_json;

namespace {

constexpr int kExitErrors = 1;
constexpr int kExitConfig = 2;

bool safe_id(const std::string& id) {
    return !id.empty() && id != "." && id != ".." && id.find_first_of("/\\") == std::string::npos;
}

ordered_json trace_json(const cwcd::DecodeTrace& trace, const cwcd::Vocabulary& vocab) {
    auto top = [&](const std::vector<std::pair<cwcd::TokenId, double>>& v) {
        ordered_json arr = ordered_json::array();
        for (const auto& [id, lp] : v) arr.push_back({vocab.text(id), lp});
        return arr;
    };
    ordered_json steps = ordered_json::array();
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        const auto& st = trace.steps[i];
        ordered_json s;
        s["step"] = i + 1;
        s["chosen"] = vocab.text(st.chosen);
        s["chosen_score"] = st.chosen_score;
        s["vsub_size"] = st.vsub_size;
        ordered_json vsub = ordered_json::array();
        for (auto id : st.vsub.members()) vsub.push_back(vocab.text(id));
        s["vsub"] = vsub;
        s["base_top"] = top(st.base_top);
        if (!st.masked_top.empty()) s["masked_top"] = top(st.masked_top);
        steps.push_back(s);
    }
    return steps;
}

struct Common {
    std::string corpus;
    std::string config;
    std::string out;
    bool trace = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

cwcd::RunConfig run_config(const Common& c) {
    cwcd::RunConfig cfg = cwcd::load_run_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.jobs) {
        if (*c.jobs < 1) throw cwcd::ConfigError("--jobs must be >= 1");
        cfg.jobs = *c.jobs;
    }
    if (!c.out.empty()) cfg.out = c.out;
    if (cfg.out.empty()) throw cwcd::ConfigError("no output path: set 'out' in the config or pass --out");
    return cfg;
}

int cmd_decode(const Common& c) {
    const cwcd::RunConfig cfg = run_config(c);
    const cwcd::PipelineModels models = cwcd::load_models(cfg);
    cwcd::validate_pipeline(models, cfg.decode);
    const auto records = cwcd::load_corpus(c.corpus);

    std::vector<cwcd::ExampleOutput> outputs(records.size());
    auto errors = cwcd::parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
        const auto& rec = records[i];
        if (!safe_id(rec.id)) throw cwcd::ValidationError("id is not usable as a file name");
        if (rec.image.empty()) throw cwcd::ValidationError("record has no image");
        const cwcd::GrayImage img = cwcd::load_pgm(rec.image);
        outputs[i] = cwcd::generate_report(models, img, rec.boxes, cfg.decode, cfg.pipeline);
    });

    const cwcd::Vocabulary& vocab =
        models.single ? models.single->vocabulary() : models.categories.begin()->second->vocabulary();
    std::string combined, traces, error_log;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (!errors[i].empty()) {
            ++failures;
            error_log += rec.id + ": " + errors[i] + "\n";
            std::cerr << "error: " << rec.id << ": " << errors[i] << "\n";
            continue;
        }
        const std::string text = cwcd::serialize_structured(outputs[i].report);
        cwcd::write_file(cfg.out / "reports" / (rec.id + ".txt"), text);
        cwcd::CorpusRecord pred{rec.id, {}, {}, outputs[i].report};
        combined += cwcd::corpus_line(pred);
        if (c.trace) {
            ordered_json j;
            j["id"] = rec.id;
            j["dropped_tokens"] = outputs[i].dropped_tokens;
            ordered_json streams = ordered_json::object();
            for (const auto& [name, tr] : outputs[i].traces) streams[name] = trace_json(tr, vocab);
            j["streams"] = streams;
            traces += j.dump() + "\n";
        }
    }
    cwcd::write_file(cfg.out / "predictions.jsonl", combined);
    if (c.trace) cwcd::write_file(cfg.out / "traces.jsonl", traces);
    cwcd::write_file(cfg.out / "errors.txt", error_log);
    std::cout << "decoded " << records.size() - failures << "/" << records.size() << " examples into "
              << cfg.out.string() << "\n";
    return failures ? kExitErrors : 0;
}

int cmd_lama(const Common& c) {
    const cwcd::RunConfig cfg = run_config(c);
    const cwcd::PipelineModels models = cwcd::load_models(cfg);
    if (!models.single || !models.single->exposes_attention()) {
        throw cwcd::ModelError("lama needs a model that exposes attention (model = toy)");
    }
    const auto records = cwcd::load_corpus(c.corpus);
    const auto& model = *models.single;
    cwcd::TokenSequence prompt{cwcd::kBos};
    for (auto id : model.vocabulary().encode_words(cfg.pipeline.single_prompt)) prompt.push_back(id);

    std::vector<cwcd::LamaTrace> traces(records.size());
    auto errors = cwcd::parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
        const auto& rec = records[i];
        if (rec.image.empty()) throw cwcd::ValidationError("record has no image");
        const cwcd::GrayImage img = cwcd::load_pgm(rec.image);
        const auto visual = cwcd::encode_visual(img, rec.boxes, cfg.pipeline.encoder, std::nullopt);
        traces[i] = cwcd::lama_trace(model, visual, prompt, cfg.decode, rec.id);
    });
    std::vector<cwcd::LamaTrace> ok;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!errors[i].empty()) {
            ++failures;
            std::cerr << "error: " << records[i].id << ": " << errors[i] << "\n";
        } else {
            ok.push_back(std::move(traces[i]));
        }
    }
    const fs::path path = cfg.out.extension() == ".csv" ? cfg.out : cfg.out / "lama.csv";
    cwcd::emit_trace_csv(ok, path);
    std::cout << "wrote " << ok.size() << " traces to " << path.string() << "\n";
    return failures ? kExitErrors : 0;
}

std::vector<cwcd::IdReport> reports_of(const std::string& path) {
    std::vector<cwcd::IdReport> out;
    for (const auto& rec : cwcd::load_corpus(path)) {
        if (!rec.report) throw cwcd::EvaluationError("record '" + rec.id + "' in " + path + " has no report");
        out.emplace_back(rec.id, *rec.report);
    }
    return out;
}

int cmd_eval(const std::string& pred, const std::string& ref, const std::string& out) {
    const auto report = cwcd::evaluate_corpus(reports_of(pred), reports_of(ref));
    const std::string kv = cwcd::format_metric_kv(report);
    std::cout << kv;
    if (!out.empty()) {
        cwcd::write_file(fs::path(out) / "metrics.txt", kv);
        cwcd::write_file(fs::path(out) / "metrics.csv", cwcd::format_metric_csv(report));
    }
    return 0;
}

std::string slug(const std::string& name) {
    std::string s;
    for (char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        } else if (ch == '+') {
            s += "_";
        } else if (!s.empty() && s.back() != '_') {
            s += '_';
        }
    }
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s;
}

int cmd_bench(const Common& c) {
    cwcd::BenchSpec spec = c.config.empty() ? cwcd::default_bench_spec() : cwcd::load_bench_spec(c.config);
    if (c.seed) spec.seed = *c.seed;
    const int jobs = c.jobs.value_or(1);
    if (jobs < 1) throw cwcd::ConfigError("--jobs must be >= 1");
    if (c.out.empty()) throw cwcd::ConfigError("bench needs --out");
    const fs::path out = c.out;

    const auto corpus = cwcd::gen_corpus(spec);
    const auto models = cwcd::fit_bench_models(corpus);
    auto result = cwcd::run_bench(corpus, models, cwcd::ablation_grid(spec.alpha, spec.beta), jobs);
    result.beta_rows = cwcd::beta_sweep(corpus, models, cwcd::kBetaSweep, spec.alpha, jobs);

    cwcd::save_bench_corpus(corpus, out / "corpus");
    cwcd::save_bench_models(models, out / "models");
    for (const auto& row : result.rows) {
        std::string doc;
        for (const auto& [id, rep] : row.predictions) doc += cwcd::corpus_line({id, {}, {}, rep});
        cwcd::write_file(out / "predictions" / (slug(row.name) + ".jsonl"), doc);
    }
    cwcd::write_file(out / "bench.csv", cwcd::format_bench_csv(result.rows));
    cwcd::write_file(out / "beta_sweep.csv", cwcd::format_beta_csv(result.beta_rows));
    const std::string summary = cwcd::format_bench_summary(result);
    cwcd::write_file(out / "summary.txt", summary);
    std::cout << summary;
    std::size_t errors = 0;
    for (const auto& r : result.rows) errors += r.errors;
    for (const auto& [b, r] : result.beta_rows) errors += r.errors;
    return errors ? kExitErrors : 0;
}

cwcd::BoundingBox parse_box(const std::string& s) {
    int v[4];
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d,%d,%d,%d%c", &v[0], &v[1], &v[2], &v[3], &tail) != 4) {
        throw cwcd::ConfigError("box '" + s + "' is not x0,y0,x1,y1");
    }
    return {v[0], v[1], v[2], v[3]};
}

int cmd_mask(const std::string& image, const std::vector<std::string>& boxes, const std::string& out) {
    const cwcd::GrayImage img = cwcd::load_pgm(image);
    std::vector<cwcd::BoundingBox> bs;
    for (const auto& b : boxes) bs.push_back(parse_box(b));
    cwcd::save_pgm(cwcd::mask_image(img, bs), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Category-wise contrastive decoding toolkit"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool corpus_required) {
        auto* opt = sub->add_option("--corpus", common.corpus, "corpus document (JSON Lines)");
        if (corpus_required) opt->required();
        sub->add_option("--out", common.out, "output directory");
        sub->add_flag("--trace", common.trace, "write decode traces");
        sub->add_option("--seed", common.seed, "seed override");
        sub->add_option("-j,--jobs", common.jobs, "worker threads");
    };

    auto* decode = app.add_subcommand("decode", "generate structured reports for a corpus");
    add_common(decode, true);
    decode->add_option("--config", common.config, "run configuration")->required();

    auto* lama = app.add_subcommand("lama", "layer-averaged max attention traces");
    add_common(lama, true);
    lama->add_option("--config", common.config, "run configuration")->required();

    std::string pred, ref, eval_out;
    auto* eval = app.add_subcommand("eval", "score predictions against references");
    eval->add_option("--pred", pred, "predicted corpus document")->required();
    eval->add_option("--ref,--corpus", ref, "reference corpus document")->required();
    eval->add_option("--out", eval_out, "output directory");

    auto* bench = app.add_subcommand("bench", "planted co-occurrence benchmark");
    add_common(bench, false);
    bench->add_option("--config", common.config, "bench spec");

    std::string image, mask_out;
    std::vector<std::string> boxes;
    auto* mask = app.add_subcommand("mask", "black out boxes in a PGM image");
    mask->add_option("--image", image, "input PGM")->required();
    mask->add_option("--box", boxes, "box x0,y0,x1,y1 (repeatable)");
    mask->add_option("--out", mask_out, "output PGM")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*decode) return cmd_decode(common);
        if (*lama) return cmd_lama(common);
        if (*eval) return cmd_eval(pred, ref, eval_out);
        if (*bench) return cmd_bench(common);
        if (*mask) return cmd_mask(image, boxes, mask_out);
    } catch (const cwcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitErrors;
    }
    return 0;
}
