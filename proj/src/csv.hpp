#pragma once

#include <chainsleuth/error.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace chainsleuth::csv {

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw error(errc::missing_file, path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

// Splits text into lines, dropping '\r' and a trailing empty line.
inline std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        out.push_back(line);
        pos = end + 1;
    }
    while (!out.empty() && out.back().empty())
        out.pop_back();
    return out;
}

inline void split(std::string_view line, std::vector<std::string_view> &cells) {
    cells.clear();
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(pos));
            return;
        }
        cells.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '"'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double &out) {
    s = trim(s);
    if (s.empty()) {
        out = std::numeric_limits<double>::quiet_NaN();
        return true;
    }
    if (s.front() == '+')
        s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

inline bool parse_long(std::string_view s, long &out) {
    s = trim(s);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && p == s.data() + s.size())
        return true;
    double d;
    if (!s.empty() && parse_double(s, d) && std::isfinite(d) && d == std::floor(d)) {
        out = static_cast<long>(d);
        return true;
    }
    return false;
}

inline bool is_numeric(std::string_view s) {
    double d;
    return !trim(s).empty() && parse_double(s, d);
}

inline error malformed(std::string_view file, std::size_t line_no, std::string_view why) {
    return error(errc::malformed_row, fmt::format("{} line {}: {}", file, line_no, why));
}

} // namespace chainsleuth::csv
