#pragma once

// Minimal comma-separated reader/writer. No quoting: none of the emitted
// schemas contain commas inside fields.

#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "catsim/error.hpp"

namespace catsim::csv {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Header plus data rows; row numbers are 1-based file lines (header = row 1).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }

    std::size_t require_column(std::string_view name) const {
        auto c = column(name);
        if (!c) throw ParseError("missing column '" + std::string(name) + "'");
        return *c;
    }

    double number(std::size_t row, std::size_t col) const {
        const auto& cells = rows[row];
        if (col >= cells.size())
            throw ParseError("row " + std::to_string(line_numbers[row]) + ": missing value for column '" +
                             header[col] + "'");
        auto v = to_double(cells[col]);
        if (!v)
            throw ParseError("row " + std::to_string(line_numbers[row]) + ", column '" + header[col] +
                             "': cannot parse '" + cells[col] + "' as a number");
        return *v;
    }
};

inline Table read(std::istream& in) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty()) continue;
        auto cells = split(view);
        for (auto& c : cells) c = std::string(trim(c));
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(line_no);
    }
    if (!have_header) throw ParseError("missing header");
    return t;
}

}  // namespace catsim::csv
