// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cwcd/decode.hpp"
#include "cwcd/image.hpp"
#include "cwcd/metrics.hpp"
#include "cwcd/pipeline.hpp"
#include "cwcd/report.hpp"
#include "cwcd/tabular_lm.hpp"

namespace cwcd {

// One finding of the planted pair: the observation written when it is
// mentioned, the normal statement written otherwise, and the word that marks
// it in generated text.
struct FindingSpec {
    Category category = Category::Other;
    std::string text;
    std::string normal_text;
    std::string marker;
};

struct BenchSpec {
    std::size_t examples = 200;
    int image_size = 64;
    double p_a = 0.5;     // P(finding A)
    double p_text = 0.9;  // P(report mentions B | A)
    double p_img = 0.5;   // P(image shows B | A); imaged B is always mentioned
    std::uint64_t seed = 7;
    double train_fraction = 0.8;

    FindingSpec finding_a{Category::Cardiovascular, "Cardiomegaly.", "Heart size is normal.", "cardiomegaly"};
    FindingSpec finding_b{Category::LungsAndAirways, "Pulmonary edema.", "Lungs are clear.", "edema"};
    // Observations written in every report.
    std::map<Category, std::vector<std::string>> constant_findings{{Category::Pleura, {"No pleural effusion."}}};
    CategoryBoxSet layout;

    int background_lo = 30;
    int background_hi = 70;
    int evidence_lo = 190;
    int evidence_hi = 230;
    int evidence_inset = 2;

    int order = 3;
    double smoothing = 0.0;
    bool negatives = true;
    EncoderSettings encoder;

    // Decode settings shared by the grid and the beta sweep.
    double alpha = 1.0;
    double beta = 0.5;

    // Throws ConfigError on out-of-range probabilities, p_img > p_text or a
    // layout that does not fit the image.
    void validate() const;
};

// Default 64x64 box layout: two lung boxes, a cardiac box, two pleural boxes.
CategoryBoxSet default_layout();
BenchSpec default_bench_spec();

struct BenchExample {
    std::string id;
    GrayImage image;
    CategoryBoxSet boxes;
    StructuredReport report;
    bool a_present = false;
    bool b_mentioned = false;
    bool b_imaged = false;
    bool test = false;
};

struct BenchCorpus {
    BenchSpec spec;
    std::vector<BenchExample> examples;

    std::vector<const BenchExample*> split(bool test) const;
};

// Deterministic given spec.seed. Labels draw three canonical uniforms per
// example from mt19937_64(seed) in the order (A, text, image); pixel noise
// uses a separate per-example stream.
BenchCorpus gen_corpus(const BenchSpec& spec);

// Canonical uniform in [0, 1) from the top 53 bits of one engine draw.
double unit_uniform(std::uint64_t draw);

struct BenchModels {
    std::shared_ptr<const TabularLM> single;
    std::map<Category, std::shared_ptr<const TabularLM>> categories;

    PipelineModels pipeline() const;
};

// Fits the single-stream model and one model per category on the training
// split; all share one vocabulary.
BenchModels fit_bench_models(const BenchCorpus& corpus);
std::vector<TrainingSequence> single_stream_sequences(const BenchCorpus& corpus, const Vocabulary& vocab);
std::vector<TrainingSequence> category_sequences(const BenchCorpus& corpus, Category c, const Vocabulary& vocab);

struct VariantConfig {
    std::string name;
    DecodeConfig cfg;
};

// The six ablation rows: greedy, CD+VS, CW, CWCD w/o VS, CWCD all VP,
// CWCD category VP.
std::vector<VariantConfig> ablation_grid(double alpha = 1.0, double beta = 0.5);

struct VariantRow {
    std::string name;
    DecodeConfig cfg;
    std::size_t test_examples = 0;
    std::size_t spurious = 0;
    double spurious_rate = 0.0;
    double mean_vsub = 0.0;  // over all contrastive steps (0 when none)
    std::size_t errors = 0;
    MetricReport metrics;
    std::vector<IdReport> predictions;  // test split, example order
};

// B mentioned in any observation while B's region is absent in the image.
bool spurious_b(const BenchSpec& spec, const BenchExample& ex, const StructuredReport& predicted);
// Reference-report spuriousness, recomputed from (image, report) alone.
std::size_t ground_truth_spurious(const BenchCorpus& corpus);

VariantRow run_variant(const BenchCorpus& corpus, const BenchModels& models, const VariantConfig& variant,
                       int jobs = 1);

struct BenchResult {
    std::size_t corpus_spurious = 0;
    std::vector<VariantRow> rows;
    std::vector<std::pair<double, VariantRow>> beta_rows;
};

inline const std::vector<double> kBetaSweep = {0.00, 0.01, 0.10, 0.25, 0.50, 0.75, 0.90};

// Throws ConfigError for category-wise rows when no category models exist.
BenchResult run_bench(const BenchCorpus& corpus, const BenchModels& models, const std::vector<VariantConfig>& grid,
                      int jobs = 1);
std::vector<std::pair<double, VariantRow>> beta_sweep(const BenchCorpus& corpus, const BenchModels& models,
                                                      const std::vector<double>& betas, double alpha = 1.0,
                                                      int jobs = 1);

std::string format_bench_csv(const std::vector<VariantRow>& rows);
std::string format_beta_csv(const std::vector<std::pair<double, VariantRow>>& rows);
std::string format_bench_summary(const BenchResult& result);

}  // namespace cwcd
