#pragma once

// Small delimited-text reader for the flat integer/string tables this project
// exchanges (flow tables, node attributes, samples). No embedded delimiters.

#include "hydrograph/error.hpp"
#include "hydrograph/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hydrograph::csv {

struct Row {
    std::size_t line = 0;  // 1-based line in the source text
    std::vector<std::string> cells;
};

struct Table {
    std::vector<std::string> header;  // upper-cased
    std::vector<Row> rows;

    /// Index of a header column, case-insensitive.
    std::optional<std::size_t> find(std::string_view name) const {
        std::string up(name);
        std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == up) return i;
        return std::nullopt;
    }

    std::size_t require(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw ValidationError("missing required column " + std::string(name));
    }
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split(std::string_view line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Parses text with a mandatory header row. Blank lines are skipped.
inline Table parse(std::string_view text) {
    Table t;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            for (auto& c : cells)
                std::transform(c.begin(), c.end(), c.begin(), [](unsigned char ch) { return std::toupper(ch); });
            t.header = std::move(cells);
            have_header = true;
        } else {
            t.rows.push_back({line_no, std::move(cells)});
        }
    }
    if (!have_header) throw ValidationError("empty table: header row required");
    return t;
}

inline const std::string& cell(const Row& row, std::size_t col, std::string_view name) {
    if (col >= row.cells.size())
        throw ValidationError("missing " + std::string(name) + " value at line " + std::to_string(row.line));
    return row.cells[col];
}

/// Strict base-10 integer; accepts a trailing ".0" as NHD exports often carry.
inline std::optional<std::int64_t> to_int(std::string_view s) {
    if (s.ends_with(".0")) s.remove_suffix(2);
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
    return v;
}

inline std::int64_t int_cell(const Row& row, std::size_t col, std::string_view name) {
    const auto& s = cell(row, col, name);
    if (auto v = to_int(s)) return *v;
    throw ValidationError("non-integer " + std::string(name) + " '" + s + "' at line " +
                          std::to_string(row.line));
}

inline double real_cell(const Row& row, std::size_t col, std::string_view name) {
    const auto& s = cell(row, col, name);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty())
        throw ValidationError("non-numeric " + std::string(name) + " '" + s + "' at line " +
                              std::to_string(row.line));
    return v;
}

inline Comid comid_cell(const Row& row, std::size_t col, std::string_view name) {
    const auto v = int_cell(row, col, name);
    if (v <= 0)
        throw ValidationError("invalid " + std::string(name) + " " + std::to_string(v) + " at line " +
                              std::to_string(row.line));
    return Comid{static_cast<std::uint64_t>(v)};
}

} // namespace hydrograph::csv

namespace hydrograph {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("cannot write " + path);
}

} // namespace hydrograph
