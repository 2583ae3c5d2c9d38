// Copyright 2026 The rxleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rxleak/errors.hpp"

namespace rxleak::text {

inline std::string_view trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string_view> lines(std::string_view s) {
    auto out = split(s, '\n');
    if (!out.empty() && out.back().empty()) {
        out.pop_back();
    }
    return out;
}

/// 17 significant digits: enough to round-trip every double.
inline std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

/// Fixed-point decimal for human-facing report columns.
inline std::string format_fixed(double v, int digits = 6) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, std::size_t line = 0) {
    s = trim(s);
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw ParseError("expected a decimal number, got '" + std::string(s) + "'", line);
    }
    return v;
}

inline std::uint64_t parse_uint(std::string_view s, std::size_t line = 0) {
    s = trim(s);
    std::uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        throw ParseError("expected a non-negative integer, got '" + std::string(s) + "'", line);
    }
    return v;
}

inline std::vector<double> parse_doubles(std::string_view s, std::size_t line = 0) {
    std::vector<double> out;
    s = trim(s);
    if (s.empty()) {
        return out;
    }
    for (auto tok : split(s, ' ')) {
        if (!trim(tok).empty()) {
            out.push_back(parse_double(tok, line));
        }
    }
    return out;
}

inline std::string join_doubles(const std::vector<double> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) {
            out += ' ';
        }
        out += format_double(v[i]);
    }
    return out;
}

}  // namespace rxleak::text
