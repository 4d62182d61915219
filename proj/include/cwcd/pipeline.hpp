// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cwcd/category_model.hpp"
#include "cwcd/decode.hpp"
#include "cwcd/image.hpp"
#include "cwcd/report.hpp"

namespace cwcd {

struct EncoderSettings {
    int patch = 8;
    int levels = 8;
    double feature_threshold = 100.0;
};

// Feature string of a single-stream model: comma-joined keys of the present
// categories in canonical order, or "none".
std::string single_stream_feature(const std::map<Category, std::string>& summary);

// Visual input for one stream. With `focus` set the tabular feature is that
// category's present/absent status, otherwise the single-stream feature.
VisualContext encode_visual(const GrayImage& img, const CategoryBoxSet& regions, const EncoderSettings& enc,
                            std::optional<Category> focus);

struct PipelineModels {
    std::shared_ptr<const ConditionalLM> single;
    std::map<Category, std::shared_ptr<const ConditionalLM>> categories;
    MissingAdapterPolicy policy = MissingAdapterPolicy::PassThrough;

    // Category model, or the single-stream model under the pass-through policy.
    const ConditionalLM& for_category(Category c) const;
};

struct PipelineSettings {
    EncoderSettings encoder;
    std::string prompt_template{kDefaultPromptTemplate};
    std::string single_prompt{kSingleStreamPrompt};
};

struct ExampleOutput {
    StructuredReport report;
    // Keyed by "single" or the category key.
    std::map<std::string, DecodeTrace> traces;
    std::map<std::string, TokenSequence> raw_tokens;
    std::size_t dropped_tokens = 0;
};

// Throws ConfigError for combinations the pipeline cannot run (category-wise
// modes without category models, cd with category-specific masks).
void validate_pipeline(const PipelineModels& models, const DecodeConfig& cfg);

// Runs one example end to end:
//   greedy: one single-stream greedy decode
//   cd:     one single-stream contrastive decode; masked stream per vp_mode
//   cw:     one greedy decode per category with the category model
//   cwcd:   one contrastive decode per category; vp_mode picks the boxes
//           masked (none: no mask, all: every box, category: its own boxes)
ExampleOutput generate_report(const PipelineModels& models, const GrayImage& img, const CategoryBoxSet& boxes,
                              const DecodeConfig& cfg, const PipelineSettings& settings = {});

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Exceptions escape
// per index through the returned vector (empty string = success).
std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace cwcd
