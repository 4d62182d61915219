// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>

#include "cwcd/category.hpp"
#include "cwcd/model.hpp"
#include "cwcd/tabular_lm.hpp"
#include "cwcd/toy_transformer.hpp"

namespace cwcd {

enum class MissingAdapterPolicy { PassThrough, Strict };

// Base transformer plus the category's LoRA delta. Missing adapters either
// return the base unchanged or raise AdapterError.
std::shared_ptr<const ConditionalLM> category_model(const std::shared_ptr<const ToyTransformer>& base,
                                                    const std::map<Category, LoraDelta>& adapters, Category c,
                                                    MissingAdapterPolicy policy = MissingAdapterPolicy::PassThrough);

// Tabular counterpart: the per-category table set replaces the base model.
std::shared_ptr<const ConditionalLM> category_model(
    const std::shared_ptr<const ConditionalLM>& base,
    const std::map<Category, std::shared_ptr<const TabularLM>>& tables, Category c,
    MissingAdapterPolicy policy = MissingAdapterPolicy::PassThrough);

}  // namespace cwcd
