// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cwcd/category.hpp"
#include "cwcd/model.hpp"

namespace cwcd {

// Single-channel 8-bit image, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BoundingBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool valid_for(int width, int height) const {
        return 0 <= x0 && x0 < x1 && x1 <= width && 0 <= y0 && y0 < y1 && y1 <= height;
    }
    bool contains(int x, int y) const { return x0 <= x && x < x1 && y0 <= y && y < y1; }
    bool operator==(const BoundingBox&) const = default;
};

using CategoryBoxSet = std::map<Category, std::vector<BoundingBox>>;

inline constexpr std::string_view kPresent = "present";
inline constexpr std::string_view kAbsent = "absent";

// Throws ValidationError naming the first box outside the image.
void validate_boxes(const GrayImage& img, const std::vector<BoundingBox>& boxes);
void validate_boxes(const GrayImage& img, const CategoryBoxSet& regions);

std::vector<BoundingBox> all_boxes(const CategoryBoxSet& regions);

// Copy of `img` with every pixel inside any box set to 0 (the grayscale
// equivalent of blacking out to RGB (0,0,0)).
GrayImage mask_image(const GrayImage& img, const std::vector<BoundingBox>& boxes);

// One token per patch: the patch mean quantized into `levels` uniform bins
// over [0, 255], row-major over patches.
VisualTokens image_to_visual_tokens(const GrayImage& img, int patch, int levels);

// "present" when the mean intensity over a category's boxes exceeds
// `threshold`, else "absent". Categories without boxes are "absent".
std::map<Category, std::string> summarize_features(const GrayImage& img, const CategoryBoxSet& regions,
                                                   double threshold);

// Binary PGM (P5, maxval 255). Loading tolerates '#' comments in the header.
GrayImage parse_pgm(const std::string& bytes);
std::string encode_pgm(const GrayImage& img);
GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace cwcd
