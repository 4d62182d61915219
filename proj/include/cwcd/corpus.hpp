// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwcd/bench.hpp"
#include "cwcd/category_model.hpp"
#include "cwcd/decode.hpp"
#include "cwcd/image.hpp"
#include "cwcd/pipeline.hpp"
#include "cwcd/report.hpp"

namespace cwcd {

// One line of a corpus document (JSON Lines):
//   {"id": "...", "image": "img/0001.pgm",
//    "boxes": {"Pleura": [[x0, y0, x1, y1], ...], ...},
//    "report": "<structured report text>" | {"Pleura": ["obs", ...], ...}}
// Image paths are relative to the corpus file's directory.
struct CorpusRecord {
    std::string id;
    std::filesystem::path image;
    CategoryBoxSet boxes;
    std::optional<StructuredReport> report;
};

std::vector<CorpusRecord> parse_corpus(const std::string& text, const std::filesystem::path& base_dir = {});
std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
std::string corpus_line(const CorpusRecord& rec, bool inline_report = false);

// Key=value document; '#' starts a comment line. Duplicate keys are errors.
std::map<std::string, std::string> parse_key_values(const std::string& text);

enum class ModelKind { Tabular, Toy };

struct RunConfig {
    DecodeConfig decode;
    ModelKind model_kind = ModelKind::Tabular;
    std::filesystem::path model_dir;  // tabular: single.tlm + <CategoryKey>.tlm
    std::filesystem::path toy_model;  // toy: seed/dimension file
    MissingAdapterPolicy adapter_policy = MissingAdapterPolicy::PassThrough;
    PipelineSettings pipeline;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::filesystem::path out;
};

// Unknown keys raise ConfigError. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

BenchSpec parse_bench_spec(const std::string& text);
BenchSpec load_bench_spec(const std::filesystem::path& path);

// Loads the models a run config names.
PipelineModels load_models(const RunConfig& cfg);

// Tabular model directory layout used by `bench` and read by `decode`.
void save_bench_models(const BenchModels& models, const std::filesystem::path& dir);
BenchModels load_bench_models(const std::filesystem::path& dir);

// Writes PGMs plus train.jsonl/test.jsonl for a generated bench corpus.
void save_bench_corpus(const BenchCorpus& corpus, const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace cwcd
