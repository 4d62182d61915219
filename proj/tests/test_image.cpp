// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cwcd/error.hpp"
#include "cwcd/image.hpp"
#include "support.hpp"

using namespace cwcd;

namespace {

GrayImage random_image(std::mt19937_64& eng, int w, int h) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h));
    for (auto& p : px) p = static_cast<std::uint8_t>(eng() & 0xff);
    return GrayImage(w, h, px);
}

BoundingBox random_box(std::mt19937_64& eng, int w, int h) {
    const int x0 = static_cast<int>(eng() % static_cast<std::uint64_t>(w));
    const int y0 = static_cast<int>(eng() % static_cast<std::uint64_t>(h));
    const int x1 = x0 + 1 + static_cast<int>(eng() % static_cast<std::uint64_t>(w - x0));
    const int y1 = y0 + 1 + static_cast<int>(eng() % static_cast<std::uint64_t>(h - y0));
    return {x0, y0, x1, y1};
}

}  // namespace

TEST_CASE("mask_image examples") {
    GrayImage img(4, 4, 100);
    CHECK(mask_image(img, {}) == img);
    const auto full = mask_image(img, {{0, 0, 4, 4}});
    for (auto p : full.pixels()) CHECK(p == 0);
    const auto part = mask_image(img, {{1, 1, 3, 3}});
    int zeros = 0, hundreds = 0;
    for (auto p : part.pixels()) {
        zeros += p == 0;
        hundreds += p == 100;
    }
    CHECK(zeros == 4);
    CHECK(hundreds == 12);
    CHECK(img.at(1, 1) == 100);
    CHECK_THROWS_AS(mask_image(img, {{0, 0, 5, 4}}), ValidationError);
    CHECK_THROWS_AS(mask_image(img, {{2, 0, 2, 4}}), ValidationError);
}

TEST_CASE("mask_image properties") {
    std::mt19937_64 eng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto img = random_image(eng, 12, 9);
        std::vector<BoundingBox> boxes;
        for (int i = 0; i < 3; ++i) boxes.push_back(random_box(eng, 12, 9));
        const auto once = mask_image(img, boxes);
        CHECK(mask_image(once, boxes) == once);
        std::vector<BoundingBox> rev(boxes.rbegin(), boxes.rend());
        CHECK(mask_image(img, rev) == once);
        for (int y = 0; y < 9; ++y) {
            for (int x = 0; x < 12; ++x) {
                bool inside = false;
                for (const auto& b : boxes) inside = inside || b.contains(x, y);
                CHECK(once.at(x, y) == (inside ? 0 : img.at(x, y)));
            }
        }
    }
}

TEST_CASE("image_to_visual_tokens examples") {
    const auto zero = image_to_visual_tokens(GrayImage(8, 8, 0), 4, 8);
    CHECK(zero.ids == std::vector<TokenId>{0, 0, 0, 0});
    const auto white = image_to_visual_tokens(GrayImage(8, 8, 255), 4, 8);
    CHECK(white.ids == std::vector<TokenId>{7, 7, 7, 7});

    GrayImage half(4, 4, 0);
    for (int y = 0; y < 4; ++y) {
        for (int x = 2; x < 4; ++x) half.at(x, y) = 255;
    }
    const auto t = image_to_visual_tokens(half, 2, 4);
    CHECK(t.ids == std::vector<TokenId>{0, 3, 0, 3});
    CHECK(t.positions == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(t.levels == 4);

    CHECK_THROWS_AS(image_to_visual_tokens(GrayImage(6, 4, 0), 4, 8), ValidationError);
    CHECK_THROWS_AS(image_to_visual_tokens(GrayImage(4, 4, 0), 2, 1), ValidationError);

    std::mt19937_64 eng(3);
    const auto img = random_image(eng, 16, 16);
    const auto masked = mask_image(img, {{0, 0, 16, 16}});
    for (auto id : image_to_visual_tokens(masked, 8, 8).ids) CHECK(id == 0);
}

TEST_CASE("summarize_features") {
    const CategoryBoxSet regions{{Category::Pleura, {{0, 0, 2, 2}}}, {Category::Cardiovascular, {{2, 2, 4, 4}}}};
    for (const auto& [c, f] : summarize_features(GrayImage(4, 4, 0), regions, 128)) CHECK(f == kAbsent);

    const CategoryBoxSet one{{Category::Pleura, {{0, 0, 4, 4}}}};
    const auto s = summarize_features(GrayImage(4, 4, 255), one, 128);
    CHECK(s.at(Category::Pleura) == kPresent);
    for (Category c : kAllCategories) {
        if (c != Category::Pleura) CHECK(s.at(c) == kAbsent);
    }

    GrayImage img(4, 4, 200);
    CHECK(summarize_features(img, regions, 100).at(Category::Pleura) == kPresent);
    const auto m = mask_image(img, regions.at(Category::Pleura));
    const auto after = summarize_features(m, regions, 100);
    CHECK(after.at(Category::Pleura) == kAbsent);
    CHECK(after.at(Category::Cardiovascular) == kPresent);
    // Mean exactly at the threshold is not "present".
    CHECK(summarize_features(GrayImage(4, 4, 100), regions, 100).at(Category::Pleura) == kAbsent);
}

TEST_CASE("pgm examples") {
    std::string bytes = "P5 2 2 255\n";
    bytes += std::string("\x00\xff\x00\xff", 4);
    const auto img = parse_pgm(bytes);
    CHECK(img.width() == 2);
    CHECK(img.height() == 2);
    CHECK(img.pixels() == std::vector<std::uint8_t>{0, 255, 0, 255});

    std::string with_comment = "P5\n# made by hand\n2 2\n255\n" + std::string("\x01\x02\x03\x04", 4);
    CHECK(parse_pgm(with_comment).pixels() == std::vector<std::uint8_t>{1, 2, 3, 4});

    const std::string truncated = "P5 2 2 255\n" + std::string("\x00\xff\x00", 3);
    try {
        parse_pgm(truncated);
        FAIL("expected truncation error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_pgm("P5 2 2 65535\n" + std::string(8, '\0')), ParseError);
    CHECK_THROWS_AS(parse_pgm("P2 2 2 255\n0 0 0 0"), ParseError);
    CHECK_THROWS_AS(parse_pgm("P5 2 2 255\n" + std::string(5, '\0')), ParseError);
    CHECK(encode_pgm(img).rfind("P5\n2 2\n255\n", 0) == 0);
}

TEST_CASE("pgm round trip") {
    std::mt19937_64 eng(8);
    const auto dir = cwcd::testing::scratch_dir("pgm");
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = random_image(eng, 1 + static_cast<int>(eng() % 20), 1 + static_cast<int>(eng() % 20));
        CHECK(parse_pgm(encode_pgm(img)) == img);
        const auto path = dir / ("img" + std::to_string(trial) + ".pgm");
        save_pgm(img, path);
        CHECK(load_pgm(path) == img);
    }
    CHECK_THROWS_AS(load_pgm(dir / "missing.pgm"), Error);
}

TEST_CASE("box validation") {
    GrayImage img(4, 4);
    CHECK_NOTHROW(validate_boxes(img, std::vector<BoundingBox>{{0, 0, 4, 4}}));
    CHECK_THROWS_AS(validate_boxes(img, std::vector<BoundingBox>{{-1, 0, 2, 2}}), ValidationError);
    CHECK_THROWS_AS(validate_boxes(img, CategoryBoxSet{{Category::Other, {{0, 0, 1, 5}}}}), ValidationError);
    const CategoryBoxSet set{{Category::Pleura, {{0, 0, 1, 1}}}, {Category::Other, {{1, 1, 2, 2}, {2, 2, 3, 3}}}};
    CHECK(all_boxes(set).size() == 3);
}
