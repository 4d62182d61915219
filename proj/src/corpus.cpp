// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cwcd/error.hpp"
#include "cwcd/tabular_lm.hpp"
#include "cwcd/toy_transformer.hpp"
#include "text_util.hpp"

namespace cwcd {

using nlohmann::json;
using nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

namespace {

Category category_or_throw(const std::string& k) {
    if (auto c = category_from_key(k)) return *c;
    if (auto c = category_from_header(k)) return *c;
    throw ParseError("unknown category '" + k + "'");
}

BoundingBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ParseError("a box is a list of four integers");
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw ParseError("box coordinates must be integers");
    }
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

CorpusRecord record_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ParseError("record must be a JSON object");
    CorpusRecord rec;
    for (const auto& [k, v] : j.items()) {
        if (k != "id" && k != "image" && k != "boxes" && k != "report") throw ParseError("unknown field '" + k + "'");
    }
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
        throw ParseError("record needs a non-empty string 'id'");
    }
    rec.id = j["id"].get<std::string>();
    if (j.contains("image")) {
        if (!j["image"].is_string()) throw ParseError("'image' must be a string");
        std::filesystem::path p = j["image"].get<std::string>();
        rec.image = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    if (j.contains("boxes")) {
        const auto& b = j["boxes"];
        if (!b.is_object()) throw ParseError("'boxes' must be an object keyed by category");
        for (const auto& [k, list] : b.items()) {
            const Category c = category_or_throw(k);
            if (!list.is_array()) throw ParseError("boxes for '" + k + "' must be a list");
            auto& dst = rec.boxes[c];
            for (const auto& box : list) dst.push_back(box_from_json(box));
        }
    }
    if (j.contains("report")) {
        const auto& r = j["report"];
        if (r.is_string()) {
            rec.report = parse_structured(r.get<std::string>());
        } else if (r.is_object()) {
            StructuredReport rep;
            for (const auto& [k, obs] : r.items()) {
                const Category c = category_or_throw(k);
                if (!obs.is_array()) throw ParseError("observations for '" + k + "' must be a list");
                auto& dst = rep.sections[c];
                for (const auto& o : obs) {
                    if (!o.is_string() || detail::trim(o.get<std::string>()).empty()) {
                        throw ParseError("observations must be non-empty strings");
                    }
                    dst.push_back(detail::trim(o.get<std::string>()));
                }
            }
            rec.report = std::move(rep);
        } else {
            throw ParseError("'report' must be a string or an object");
        }
    }
    return rec;
}

}  // namespace

std::vector<CorpusRecord> parse_corpus(const std::string& text, const std::filesystem::path& base_dir) {
    std::vector<CorpusRecord> out;
    std::set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        try {
            CorpusRecord rec = record_from_json(json::parse(line), base_dir);
            if (!ids.insert(rec.id).second) throw ParseError("duplicate id '" + rec.id + "'");
            out.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
    return parse_corpus(read_file(path), path.parent_path());
}

std::string corpus_line(const CorpusRecord& rec, bool inline_report) {
    ordered_json j;
    j["id"] = rec.id;
    if (!rec.image.empty()) j["image"] = rec.image.generic_string();
    if (!rec.boxes.empty()) {
        ordered_json boxes = ordered_json::object();
        for (const auto& [c, list] : rec.boxes) {
            ordered_json arr = ordered_json::array();
            for (const auto& b : list) arr.push_back({b.x0, b.y0, b.x1, b.y1});
            boxes[std::string(key(c))] = arr;
        }
        j["boxes"] = boxes;
    }
    if (rec.report) {
        if (inline_report) {
            ordered_json r = ordered_json::object();
            for (const auto& [c, obs] : rec.report->sections) r[std::string(key(c))] = obs;
            j["report"] = r;
        } else {
            j["report"] = serialize_structured(*rec.report);
        }
    }
    return j.dump() + "\n";
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string k = detail::trim(t.substr(0, eq));
        std::string v = detail::trim(t.substr(eq + 1));
        if (k.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!out.emplace(k, v).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + k + "'");
    }
    return out;
}

namespace {

double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + k + "' expects a number, got '" + v + "'");
    }
}

long long to_int(const std::string& k, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long d = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + k + "' expects an integer, got '" + v + "'");
    }
}

std::uint64_t to_seed(const std::string& k, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long d = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + k + "' expects a non-negative integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& k, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("'" + k + "' expects on/off, got '" + v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
    if (v.empty()) return {};
    std::filesystem::path p = v;
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    for (const auto& [k, v] : parse_key_values(text)) {
        if (k == "alpha") {
            cfg.decode.alpha = to_double(k, v);
        } else if (k == "beta") {
            cfg.decode.beta = to_double(k, v);
        } else if (k == "max_tokens") {
            const auto n = to_int(k, v);
            if (n < 1) throw ConfigError("max_tokens must be >= 1");
            cfg.decode.max_tokens = static_cast<std::size_t>(n);
        } else if (k == "mode") {
            cfg.decode.mode = parse_decode_mode(v);
        } else if (k == "vp_mode") {
            cfg.decode.vp_mode = parse_vp_mode(v);
        } else if (k == "subselection") {
            cfg.decode.subselection_enabled = to_bool(k, v);
        } else if (k == "model") {
            if (v == "tabular") {
                cfg.model_kind = ModelKind::Tabular;
            } else if (v == "toy") {
                cfg.model_kind = ModelKind::Toy;
            } else {
                throw ConfigError("'model' expects tabular or toy, got '" + v + "'");
            }
        } else if (k == "model_dir") {
            cfg.model_dir = resolve(base_dir, v);
        } else if (k == "toy_model") {
            cfg.toy_model = resolve(base_dir, v);
        } else if (k == "adapter_policy") {
            if (v == "pass_through") {
                cfg.adapter_policy = MissingAdapterPolicy::PassThrough;
            } else if (v == "strict") {
                cfg.adapter_policy = MissingAdapterPolicy::Strict;
            } else {
                throw ConfigError("'adapter_policy' expects pass_through or strict, got '" + v + "'");
            }
        } else if (k == "prompt_template") {
            if (v.find("{header}") == std::string::npos) throw ConfigError("prompt_template needs '{header}'");
            cfg.pipeline.prompt_template = v;
        } else if (k == "single_prompt") {
            cfg.pipeline.single_prompt = v;
        } else if (k == "patch") {
            cfg.pipeline.encoder.patch = static_cast<int>(to_int(k, v));
        } else if (k == "levels") {
            cfg.pipeline.encoder.levels = static_cast<int>(to_int(k, v));
        } else if (k == "feature_threshold") {
            cfg.pipeline.encoder.feature_threshold = to_double(k, v);
        } else if (k == "seed") {
            cfg.seed = to_seed(k, v);
        } else if (k == "jobs") {
            cfg.jobs = static_cast<int>(to_int(k, v));
            if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
        } else if (k == "out") {
            cfg.out = resolve(base_dir, v);
        } else {
            throw ConfigError("unknown config key '" + k + "'");
        }
    }
    cfg.decode.validate();
    if (cfg.pipeline.encoder.patch < 1 || cfg.pipeline.encoder.levels < 1) {
        throw ConfigError("patch and levels must be positive");
    }
    if (cfg.model_kind == ModelKind::Tabular && cfg.model_dir.empty()) {
        throw ConfigError("tabular runs need 'model_dir'");
    }
    if (cfg.model_kind == ModelKind::Toy && cfg.toy_model.empty()) throw ConfigError("toy runs need 'toy_model'");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_file(path), path.parent_path());
}

namespace {

FindingSpec& finding_for(BenchSpec& spec, char which) { return which == 'a' ? spec.finding_a : spec.finding_b; }

std::vector<BoundingBox> parse_box_list(const std::string& k, const std::string& v) {
    std::vector<BoundingBox> out;
    for (const auto& item : split_whitespace(v)) {
        const auto parts = detail::split_on(item, ",");
        if (parts.size() != 4) throw ConfigError("'" + k + "' boxes are x0,y0,x1,y1 separated by spaces");
        out.push_back({static_cast<int>(to_int(k, parts[0])), static_cast<int>(to_int(k, parts[1])),
                       static_cast<int>(to_int(k, parts[2])), static_cast<int>(to_int(k, parts[3]))});
    }
    return out;
}

}  // namespace

BenchSpec parse_bench_spec(const std::string& text) {
    BenchSpec spec = default_bench_spec();
    bool layout_reset = false;
    for (const auto& [k, v] : parse_key_values(text)) {
        if (k == "examples") {
            const auto n = to_int(k, v);
            if (n < 1) throw ConfigError("examples must be >= 1");
            spec.examples = static_cast<std::size_t>(n);
        } else if (k == "image_size") {
            spec.image_size = static_cast<int>(to_int(k, v));
        } else if (k == "p_a") {
            spec.p_a = to_double(k, v);
        } else if (k == "p_text") {
            spec.p_text = to_double(k, v);
        } else if (k == "p_img") {
            spec.p_img = to_double(k, v);
        } else if (k == "seed") {
            spec.seed = to_seed(k, v);
        } else if (k == "train_fraction") {
            spec.train_fraction = to_double(k, v);
        } else if (k == "order") {
            spec.order = static_cast<int>(to_int(k, v));
        } else if (k == "smoothing") {
            spec.smoothing = to_double(k, v);
        } else if (k == "negatives") {
            spec.negatives = to_bool(k, v);
        } else if (k == "background_lo") {
            spec.background_lo = static_cast<int>(to_int(k, v));
        } else if (k == "background_hi") {
            spec.background_hi = static_cast<int>(to_int(k, v));
        } else if (k == "evidence_lo") {
            spec.evidence_lo = static_cast<int>(to_int(k, v));
        } else if (k == "evidence_hi") {
            spec.evidence_hi = static_cast<int>(to_int(k, v));
        } else if (k == "evidence_inset") {
            spec.evidence_inset = static_cast<int>(to_int(k, v));
        } else if (k == "patch") {
            spec.encoder.patch = static_cast<int>(to_int(k, v));
        } else if (k == "levels") {
            spec.encoder.levels = static_cast<int>(to_int(k, v));
        } else if (k == "feature_threshold") {
            spec.encoder.feature_threshold = to_double(k, v);
        } else if (k == "alpha") {
            spec.alpha = to_double(k, v);
        } else if (k == "beta") {
            spec.beta = to_double(k, v);
        } else if ((k.rfind("a_", 0) == 0 || k.rfind("b_", 0) == 0) && k.size() > 2) {
            FindingSpec& f = finding_for(spec, k[0]);
            const std::string field = k.substr(2);
            if (field == "category") {
                f.category = category_or_throw(v);
            } else if (field == "text") {
                f.text = v;
            } else if (field == "normal") {
                f.normal_text = v;
            } else if (field == "marker") {
                f.marker = v;
            } else {
                throw ConfigError("unknown bench key '" + k + "'");
            }
        } else if (k.rfind("layout.", 0) == 0) {
            if (!layout_reset) {
                spec.layout.clear();
                layout_reset = true;
            }
            spec.layout[category_or_throw(k.substr(7))] = parse_box_list(k, v);
        } else if (k.rfind("constant.", 0) == 0) {
            const Category c = category_or_throw(k.substr(9));
            if (v.empty()) {
                spec.constant_findings.erase(c);
            } else {
                spec.constant_findings[c] = {v};
            }
        } else {
            throw ConfigError("unknown bench key '" + k + "'");
        }
    }
    spec.validate();
    return spec;
}

BenchSpec load_bench_spec(const std::filesystem::path& path) { return parse_bench_spec(read_file(path)); }

namespace {

struct AdapterLine {
    Category category;
    std::string target = "head";
    int rank = 1;
    double scale = 1.0;
    std::uint64_t seed = 0;
};

std::vector<AdapterLine> adapter_lines(const std::string& text) {
    std::vector<AdapterLine> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos || detail::trim(t.substr(0, eq)) != "adapter") continue;
        const auto fields = split_whitespace(t.substr(eq + 1));
        const std::string where = "toy model line " + std::to_string(lineno) + ": ";
        if (fields.empty()) throw ConfigError(where + "adapter needs a category");
        AdapterLine a{};
        try {
            a.category = category_or_throw(fields[0]);
        } catch (const Error& e) {
            throw ConfigError(where + e.what());
        }
        a.target = "head";
        a.rank = 1;
        a.scale = 1.0;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const auto p = fields[i].find('=');
            if (p == std::string::npos) throw ConfigError(where + "adapter options are name=value");
            const std::string k = fields[i].substr(0, p), v = fields[i].substr(p + 1);
            if (k == "target") {
                a.target = v;
            } else if (k == "rank") {
                a.rank = static_cast<int>(to_int(k, v));
            } else if (k == "scale") {
                a.scale = to_double(k, v);
            } else if (k == "seed") {
                a.seed = to_seed(k, v);
            } else {
                throw ConfigError(where + "unknown adapter option '" + k + "'");
            }
        }
        out.push_back(a);
    }
    return out;
}

}  // namespace

PipelineModels load_models(const RunConfig& cfg) {
    PipelineModels models;
    models.policy = cfg.adapter_policy;
    if (cfg.model_kind == ModelKind::Tabular) {
        const BenchModels bm = load_bench_models(cfg.model_dir);
        models.single = bm.single;
        for (const auto& [c, m] : bm.categories) models.categories[c] = m;
        return models;
    }
    const std::string text = read_file(cfg.toy_model);
    auto base = std::make_shared<const ToyTransformer>(parse_toy(text));
    std::map<Category, LoraDelta> adapters;
    for (const auto& a : adapter_lines(text)) {
        if (adapters.count(a.category)) {
            throw ConfigError("duplicate adapter for " + std::string(key(a.category)));
        }
        adapters.emplace(a.category, random_lora(*base, a.target, a.rank, a.scale, a.seed));
    }
    models.single = base;
    for (const auto& [c, d] : adapters) models.categories[c] = category_model(base, adapters, c, cfg.adapter_policy);
    return models;
}

void save_bench_models(const BenchModels& models, const std::filesystem::path& dir) {
    if (!models.single) throw ModelError("bench models have no single-stream table");
    write_file(dir / "single.tlm", serialize_tabular(*models.single));
    for (const auto& [c, m] : models.categories) {
        write_file(dir / (std::string(key(c)) + ".tlm"), serialize_tabular(*m));
    }
}

BenchModels load_bench_models(const std::filesystem::path& dir) {
    BenchModels models;
    const auto single = dir / "single.tlm";
    if (std::filesystem::exists(single)) {
        models.single = std::make_shared<const TabularLM>(load_tabular(single));
    }
    for (Category c : kAllCategories) {
        const auto p = dir / (std::string(key(c)) + ".tlm");
        if (std::filesystem::exists(p)) models.categories[c] = std::make_shared<const TabularLM>(load_tabular(p));
    }
    if (!models.single && models.categories.empty()) {
        throw ModelError("no tabular models found in '" + dir.string() + "'");
    }
    return models;
}

void save_bench_corpus(const BenchCorpus& corpus, const std::filesystem::path& dir) {
    std::string train, test;
    std::filesystem::create_directories(dir / "img");
    for (const auto& ex : corpus.examples) {
        const std::filesystem::path rel = std::filesystem::path("img") / (ex.id + ".pgm");
        save_pgm(ex.image, dir / rel);
        CorpusRecord rec{ex.id, rel, ex.boxes, ex.report};
        (ex.test ? test : train) += corpus_line(rec);
    }
    write_file(dir / "train.jsonl", train);
    write_file(dir / "test.jsonl", test);
}

}  // namespace cwcd
