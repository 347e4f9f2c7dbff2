// Small text helpers shared by the file readers and report writers.
#ifndef CROSSMAP_SRC_TEXT_UTIL_HPP
#define CROSSMAP_SRC_TEXT_UTIL_HPP

#include "crossmap/errors.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crossmap::detail {

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\v' || c == '\f' || c == '\r'; }

inline bool is_blank(std::string_view s) {
    for (char c : s) {
        if (!is_space(c)) {
            return false;
        }
    }
    return true;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_whitespace(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Strict finite-real parse; rejects trailing garbage, nan and inf.
inline std::optional<double> try_parse_real(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

inline double parse_real(std::string_view token, const std::string& source, std::size_t line) {
    if (auto v = try_parse_real(token)) {
        return *v;
    }
    throw ParseError(source, line, "not a finite number: '" + std::string(token) + "'");
}

inline std::vector<double> parse_real_list(std::string_view field, const std::string& source, std::size_t line) {
    std::vector<double> out;
    if (trim(field).empty()) {
        return out;
    }
    for (auto tok : split(field, ',')) {
        out.push_back(parse_real(tok, source, line));
    }
    return out;
}

/// Shortest representation that parses back to the same double.
inline std::string format_real(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string join_reals(std::span<const double> values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out.push_back(sep);
        }
        out += format_real(values[i]);
    }
    return out;
}

}  // namespace crossmap::detail

#endif
