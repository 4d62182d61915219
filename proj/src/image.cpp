// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#include "cwcd/image.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "cwcd/error.hpp"

namespace cwcd {

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw ValidationError("image dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw ValidationError("image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ValidationError("pixel count does not match " + std::to_string(width) + "x" + std::to_string(height));
    }
}

namespace {

std::string describe(const BoundingBox& b) {
    return "(" + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," + std::to_string(b.x1) + "," +
           std::to_string(b.y1) + ")";
}

}  // namespace

void validate_boxes(const GrayImage& img, const std::vector<BoundingBox>& boxes) {
    for (const auto& b : boxes) {
        if (!b.valid_for(img.width(), img.height())) {
            throw ValidationError("box " + describe(b) + " is not inside a " + std::to_string(img.width()) + "x" +
                                  std::to_string(img.height()) + " image");
        }
    }
}

void validate_boxes(const GrayImage& img, const CategoryBoxSet& regions) {
    for (const auto& [c, boxes] : regions) validate_boxes(img, boxes);
}

std::vector<BoundingBox> all_boxes(const CategoryBoxSet& regions) {
    std::vector<BoundingBox> out;
    for (const auto& [c, boxes] : regions) out.insert(out.end(), boxes.begin(), boxes.end());
    return out;
}

GrayImage mask_image(const GrayImage& img, const std::vector<BoundingBox>& boxes) {
    validate_boxes(img, boxes);
    GrayImage out = img;
    for (const auto& b : boxes) {
        for (int y = b.y0; y < b.y1; ++y) {
            for (int x = b.x0; x < b.x1; ++x) out.at(x, y) = 0;
        }
    }
    return out;
}

VisualTokens image_to_visual_tokens(const GrayImage& img, int patch, int levels) {
    if (patch < 1 || levels < 2) {
        throw ValidationError("patch must be >= 1 and levels >= 2");
    }
    if (img.width() % patch != 0 || img.height() % patch != 0) {
        throw ValidationError("patch size " + std::to_string(patch) + " does not tile a " + std::to_string(img.width()) +
                              "x" + std::to_string(img.height()) + " image");
    }
    VisualTokens vt;
    vt.levels = levels;
    const double area = static_cast<double>(patch) * patch;
    for (int py = 0; py < img.height() / patch; ++py) {
        for (int px = 0; px < img.width() / patch; ++px) {
            double sum = 0.0;
            for (int y = py * patch; y < (py + 1) * patch; ++y) {
                for (int x = px * patch; x < (px + 1) * patch; ++x) sum += img.at(x, y);
            }
            const double mean = sum / area;
            int bin = static_cast<int>(mean * levels / 256.0);
            if (bin >= levels) bin = levels - 1;
            vt.ids.push_back(bin);
            vt.positions.emplace_back(py, px);
        }
    }
    return vt;
}

std::map<Category, std::string> summarize_features(const GrayImage& img, const CategoryBoxSet& regions,
                                                   double threshold) {
    validate_boxes(img, regions);
    std::map<Category, std::string> out;
    for (Category c : kAllCategories) {
        auto it = regions.find(c);
        if (it == regions.end() || it->second.empty()) {
            out[c] = std::string(kAbsent);
            continue;
        }
        // Overlapping boxes count each pixel once.
        double sum = 0.0;
        std::size_t count = 0;
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                for (const auto& b : it->second) {
                    if (b.contains(x, y)) {
                        sum += img.at(x, y);
                        ++count;
                        break;
                    }
                }
            }
        }
        const double mean = sum / static_cast<double>(count);
        out[c] = std::string(mean > threshold ? kPresent : kAbsent);
    }
    return out;
}

GrayImage parse_pgm(const std::string& bytes) {
    std::size_t pos = 0;
    auto fail = [&](const std::string& msg) { return ParseError("PGM byte offset " + std::to_string(pos) + ": " + msg); };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw fail("expected magic 'P5'");
    }
    pos = 2;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&](const char* what) {
        if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            if (pos < bytes.size() && bytes[pos] != '#') throw fail(std::string("expected whitespace before ") + what);
        }
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            throw fail(std::string("expected ") + what);
        }
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000) throw fail(std::string(what) + " too large");
            ++pos;
        }
        return static_cast<int>(v);
    };
    const int width = read_int("width");
    const int height = read_int("height");
    const int maxval = read_int("maxval");
    if (width < 1 || height < 1) throw fail("image dimensions must be positive");
    if (maxval != 255) throw fail("maxval must be 255, got " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw fail("expected a single whitespace byte after maxval");
    }
    ++pos;
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - pos < need) {
        const std::size_t have = bytes.size() - pos;
        pos = bytes.size();
        throw fail("truncated payload: need " + std::to_string(need) + " bytes, have " + std::to_string(have));
    }
    if (bytes.size() - pos > need) {
        pos += need;
        throw fail("trailing data after the pixel payload");
    }
    std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return GrayImage(width, height, std::move(px));
}

std::string encode_pgm(const GrayImage& img) {
    std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels().data()), img.pixels().size());
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open image '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_pgm(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << encode_pgm(img);
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace cwcd
