// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/category.hpp"

namespace cwcd {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kHeaders = {
    "Lungs and Airways",
    "Pleura",
    "Cardiovascular",
    "Hila and Mediastinum",
    "Tubes, Catheters, and Support Devices",
    "Musculoskeletal and Chest Wall",
    "Abdominal",
    "Other",
};

constexpr std::array<std::string_view, kCategoryCount> kKeys = {
    "LungsAndAirways",
    "Pleura",
    "Cardiovascular",
    "HilaAndMediastinum",
    "TubesCathetersSupportDevices",
    "MusculoskeletalAndChestWall",
    "Abdominal",
    "Other",
};

}  // namespace

std::string_view header(Category c) { return kHeaders[index(c)]; }

std::string_view key(Category c) { return kKeys[index(c)]; }

std::optional<Category> category_from_header(std::string_view text) {
    if (text == "Abdomen") return Category::Abdominal;
    for (auto c : kAllCategories) {
        if (header(c) == text) return c;
    }
    return std::nullopt;
}

std::optional<Category> category_from_key(std::string_view text) {
    for (auto c : kAllCategories) {
        if (key(c) == text) return c;
    }
    return std::nullopt;
}

}  // namespace cwcd
