// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/model.hpp"

#include <cmath>
#include <string>

#include "cwcd/error.hpp"

namespace cwcd {

AttentionTensor::AttentionTensor(std::size_t layers, std::size_t heads, std::size_t positions)
    : layers_(layers), heads_(heads), positions_(positions), data_(layers * heads * positions, 0.0) {}

bool AttentionTensor::rows_are_distributions(double tol) const {
    for (std::size_t l = 0; l < layers_; ++l) {
        for (std::size_t h = 0; h < heads_; ++h) {
            double sum = 0.0;
            for (double v : row(l, h)) {
                if (!(v >= 0.0)) return false;
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol) return false;
        }
    }
    return true;
}

void ConditionalLM::check_context(std::size_t visual, std::size_t prompt, std::size_t prefix) const {
    const std::size_t total = visual + prompt + prefix;
    if (total > max_context()) {
        throw ModelError("context overflow: visual " + std::to_string(visual) + " + prompt " +
                         std::to_string(prompt) + " + prefix " + std::to_string(prefix) + " = " +
                         std::to_string(total) + " exceeds " + std::to_string(max_context()));
    }
}

}  // namespace cwcd
