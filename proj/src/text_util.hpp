// Copyright (C) 2026 The CWCD Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the text file formats. Internal to the library.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "cwcd/error.hpp"

namespace cwcd::detail {

inline bool needs_escape(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '%' || c == ',' || c == '|' || c == '#';
}

// Percent-encodes the separator characters of the table formats.
inline std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (needs_escape(c)) {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(c));
            out += buf;
        } else {
            out += c;
        }
    }
    return out;
}

inline std::string unescape(std::string_view s, std::size_t line) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out += s[i];
            continue;
        }
        if (i + 2 >= s.size()) {
            throw ParseError("line " + std::to_string(line) + ": truncated escape in '" + std::string(s) + "'");
        }
        const std::string hex(s.substr(i + 1, 2));
        char* end = nullptr;
        const long v = std::strtol(hex.c_str(), &end, 16);
        if (end != hex.c_str() + 2) {
            throw ParseError("line " + std::to_string(line) + ": bad escape '%" + hex + "'");
        }
        out += static_cast<char>(v);
        i += 2;
    }
    return out;
}

// Shortest-safe round-trip formatting.
inline std::string format_exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::vector<std::string> split_on(std::string_view s, std::string_view sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + sep.size();
    }
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace cwcd::detail

namespace cwcd::detail {

// RFC 4180 quoting, applied only when the field needs it.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace cwcd::detail
