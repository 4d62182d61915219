// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/category_model.hpp"

#include <string>

#include "cwcd/error.hpp"

namespace cwcd {

std::shared_ptr<const ConditionalLM> category_model(const std::shared_ptr<const ToyTransformer>& base,
                                                    const std::map<Category, LoraDelta>& adapters, Category c,
                                                    MissingAdapterPolicy policy) {
    if (!base) throw AdapterError("category_model: null base model");
    auto it = adapters.find(c);
    if (it == adapters.end()) {
        if (policy == MissingAdapterPolicy::Strict) {
            throw AdapterError("no adapter registered for category " + std::string(key(c)));
        }
        return base;
    }
    return std::make_shared<const ToyTransformer>(apply_lora(*base, it->second));
}

std::shared_ptr<const ConditionalLM> category_model(
    const std::shared_ptr<const ConditionalLM>& base,
    const std::map<Category, std::shared_ptr<const TabularLM>>& tables, Category c, MissingAdapterPolicy policy) {
    auto it = tables.find(c);
    if (it == tables.end() || !it->second) {
        if (policy == MissingAdapterPolicy::Strict) {
            throw AdapterError("no category table set for " + std::string(key(c)));
        }
        if (!base) throw AdapterError("category_model: null base model");
        return base;
    }
    return it->second;
}

}  // namespace cwcd
