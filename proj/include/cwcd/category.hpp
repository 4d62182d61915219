// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace cwcd {

// The eight anatomical headers of a structured findings report, in canonical
// emission order.
enum class Category : int {
    LungsAndAirways = 0,
    Pleura,
    Cardiovascular,
    HilaAndMediastinum,
    TubesCathetersSupportDevices,
    MusculoskeletalAndChestWall,
    Abdominal,
    Other,
};

inline constexpr std::size_t kCategoryCount = 8;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::LungsAndAirways,
    Category::Pleura,
    Category::Cardiovascular,
    Category::HilaAndMediastinum,
    Category::TubesCathetersSupportDevices,
    Category::MusculoskeletalAndChestWall,
    Category::Abdominal,
    Category::Other,
};

// Report header text, e.g. "Lungs and Airways".
std::string_view header(Category c);

// Identifier-style key used in file names and config, e.g. "LungsAndAirways".
std::string_view key(Category c);

// Accepts the canonical header and the "Abdomen" alias.
std::optional<Category> category_from_header(std::string_view text);
std::optional<Category> category_from_key(std::string_view text);

inline std::size_t index(Category c) { return static_cast<std::size_t>(c); }

}  // namespace cwcd
