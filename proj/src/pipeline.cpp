// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "cwcd/error.hpp"

namespace cwcd {

std::string single_stream_feature(const std::map<Category, std::string>& summary) {
    std::string out;
    for (Category c : kAllCategories) {
        auto it = summary.find(c);
        if (it == summary.end() || it->second != kPresent) continue;
        if (!out.empty()) out += ',';
        out += key(c);
    }
    return out.empty() ? "none" : out;
}

VisualContext encode_visual(const GrayImage& img, const CategoryBoxSet& regions, const EncoderSettings& enc,
                            std::optional<Category> focus) {
    VisualContext ctx;
    ctx.tokens = image_to_visual_tokens(img, enc.patch, enc.levels);
    const auto summary = summarize_features(img, regions, enc.feature_threshold);
    if (focus) {
        auto it = summary.find(*focus);
        ctx.feature = it == summary.end() ? std::string(kAbsent) : it->second;
    } else {
        ctx.feature = single_stream_feature(summary);
    }
    return ctx;
}

const ConditionalLM& PipelineModels::for_category(Category c) const {
    auto it = categories.find(c);
    if (it != categories.end() && it->second) return *it->second;
    if (policy == MissingAdapterPolicy::PassThrough && single) return *single;
    throw ConfigError("no model for category " + std::string(key(c)));
}

void validate_pipeline(const PipelineModels& models, const DecodeConfig& cfg) {
    cfg.validate();
    const bool category_wise = cfg.mode == DecodeMode::Cw || cfg.mode == DecodeMode::Cwcd;
    if (category_wise && models.categories.empty()) {
        throw ConfigError(std::string("mode ") + std::string(to_string(cfg.mode)) + " needs category models");
    }
    if (!category_wise && !models.single) {
        throw ConfigError(std::string("mode ") + std::string(to_string(cfg.mode)) + " needs a single-stream model");
    }
    if (cfg.mode == DecodeMode::Cd && cfg.vp_mode == VpMode::Category) {
        throw ConfigError("vp_mode category requires a category-wise mode");
    }
    if (category_wise && models.policy == MissingAdapterPolicy::Strict) {
        for (Category c : kAllCategories) {
            if (!models.categories.count(c)) throw ConfigError("no model for category " + std::string(key(c)));
        }
    }
}

namespace {

TokenSequence prompt_tokens(const Vocabulary& vocab, std::string_view text) {
    TokenSequence out{kBos};
    const auto words = vocab.encode_words(text);
    out.insert(out.end(), words.begin(), words.end());
    return out;
}

std::vector<BoundingBox> masked_boxes(const CategoryBoxSet& boxes, VpMode vp, std::optional<Category> c) {
    switch (vp) {
        case VpMode::None:
            return {};
        case VpMode::All:
            return all_boxes(boxes);
        case VpMode::Category: {
            auto it = c ? boxes.find(*c) : boxes.end();
            return it == boxes.end() ? std::vector<BoundingBox>{} : it->second;
        }
    }
    return {};
}

}  // namespace

ExampleOutput generate_report(const PipelineModels& models, const GrayImage& img, const CategoryBoxSet& boxes,
                              const DecodeConfig& cfg, const PipelineSettings& settings) {
    validate_pipeline(models, cfg);
    validate_boxes(img, boxes);
    ExampleOutput out;
    const auto& enc = settings.encoder;

    if (cfg.mode == DecodeMode::Greedy || cfg.mode == DecodeMode::Cd) {
        const ConditionalLM& model = *models.single;
        const auto prompt = prompt_tokens(model.vocabulary(), settings.single_prompt);
        const auto base = encode_visual(img, boxes, enc, std::nullopt);
        DecodeResult res;
        if (cfg.mode == DecodeMode::Greedy) {
            res = decode_greedy(model, base, prompt, cfg);
        } else {
            const auto masked_img = mask_image(img, masked_boxes(boxes, cfg.vp_mode, std::nullopt));
            const auto masked = encode_visual(masked_img, boxes, enc, std::nullopt);
            res = decode_contrastive(model, base, masked, prompt, cfg);
        }
        const auto body = strip_eos(res.tokens);
        auto det = detokenize_report(body, model.vocabulary());
        out.report = std::move(det.report);
        out.dropped_tokens = det.dropped_tokens;
        out.traces["single"] = std::move(res.trace);
        out.raw_tokens["single"] = body;
        return out;
    }

    std::map<Category, TokenSequence> outputs;
    const Vocabulary* vocab = nullptr;
    for (Category c : kAllCategories) {
        const ConditionalLM& model = models.for_category(c);
        if (!vocab) {
            vocab = &model.vocabulary();
        } else if (!(*vocab == model.vocabulary())) {
            throw ConfigError("category models do not share a vocabulary");
        }
        const auto prompt = prompt_tokens(model.vocabulary(), category_prompt(c, settings.prompt_template));
        const auto base = encode_visual(img, boxes, enc, c);
        DecodeResult res;
        if (cfg.mode == DecodeMode::Cw) {
            res = decode_greedy(model, base, prompt, cfg);
        } else {
            const auto masked_img = mask_image(img, masked_boxes(boxes, cfg.vp_mode, c));
            const auto masked = encode_visual(masked_img, boxes, enc, c);
            res = decode_contrastive(model, base, masked, prompt, cfg);
        }
        outputs[c] = strip_eos(res.tokens);
        out.traces[std::string(key(c))] = std::move(res.trace);
        out.raw_tokens[std::string(key(c))] = outputs[c];
    }
    out.report = assemble(outputs, *vocab);
    return out;
}

std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::string> errors(n);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (const std::exception& e) {
            errors[i] = e.what();
            if (errors[i].empty()) errors[i] = "error";
        } catch (...) {
            errors[i] = "unknown error";
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run(i);
        return errors;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run(i);
        });
    }
    for (auto& t : pool) t.join();
    return errors;
}

}  // namespace cwcd
