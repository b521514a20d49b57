#pragma once

// Readers for the Met Office HadCET annual layout and two-column CSV, plus
// CSV writers. All readers reject gaps; parse errors carry the line number.

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cetseg/core.hpp"

namespace cetseg {

struct ParsedSeries {
    TimeSeries series;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t b = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > b) out.push_back(line.substr(b, i - b));
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::optional<int> to_year(std::string_view s) {
    s = trim(s);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            if (start < text.size()) out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

inline bool is_missing(double v) { return v <= -99.0; }

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

class SeriesBuilder {
public:
    void add(int year, double value, std::size_t line) {
        if (!years_.empty()) {
            if (year == years_.back()) throw DataError(at_line(line) + "duplicate year " + std::to_string(year));
            if (year != years_.back() + 1) {
                throw DataError(at_line(line) + "year " + std::to_string(year) + " does not follow " +
                                std::to_string(years_.back()));
            }
        }
        years_.push_back(year);
        values_.push_back(value);
    }

    bool empty() const { return years_.empty(); }

    TimeSeries build() && {
        if (years_.empty()) throw DataError("no observations found");
        return TimeSeries(years_.front(), std::move(values_));
    }

private:
    std::vector<int> years_;
    std::vector<double> values_;
};

}  // namespace detail

/// Met Office annual layout: header lines, then rows of
/// `year m1 .. m12 annual` with -99.9 / -99.99 marking missing values.
inline ParsedSeries parse_hadcet(std::string_view text) {
    constexpr std::size_t kColumns = 14;
    struct Row {
        int year;
        double annual;
        std::size_t line;
    };
    std::vector<Row> rows;
    bool in_data = false;
    const auto lines = detail::lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto tokens = detail::split_whitespace(lines[i]);
        if (tokens.empty()) continue;
        const auto year = detail::to_year(tokens.front());
        if (!in_data && !year) continue;  // header
        if (!year) throw DataError(detail::at_line(line_no) + "expected a year, got '" + std::string(tokens.front()) + "'");
        in_data = true;
        if (tokens.size() != kColumns) {
            throw DataError(detail::at_line(line_no) + "expected year, 12 monthly values and an annual mean (" +
                            std::to_string(kColumns) + " fields), got " + std::to_string(tokens.size()));
        }
        for (std::size_t k = 1; k < kColumns; ++k) {
            if (!detail::to_double(tokens[k])) {
                throw DataError(detail::at_line(line_no) + "non-numeric field '" + std::string(tokens[k]) + "'");
            }
        }
        rows.push_back({*year, *detail::to_double(tokens.back()), line_no});
    }

    std::vector<std::string> warnings;
    detail::SeriesBuilder builder;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (detail::is_missing(rows[i].annual)) {
            if (i + 1 == rows.size()) {
                warnings.push_back("dropping incomplete final year " + std::to_string(rows[i].year) +
                                       " (annual mean missing)");
                continue;
            }
            throw DataError(detail::at_line(rows[i].line) + "annual mean missing for " + std::to_string(rows[i].year));
        }
        builder.add(rows[i].year, rows[i].annual, rows[i].line);
    }
    return {std::move(builder).build(), std::move(warnings)};
}

/// Two comma-separated columns (year, value) with an optional header line.
inline ParsedSeries parse_csv(std::string_view text) {
    detail::SeriesBuilder builder;
    const auto lines = detail::lines_of(text);
    bool first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto line = detail::trim(lines[i]);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw DataError(detail::at_line(line_no) + "expected two comma-separated columns");
        }
        const auto year_cell = line.substr(0, comma);
        const auto value_cell = line.substr(comma + 1);
        const auto year = detail::to_year(year_cell);
        if (first && !year && !detail::to_double(year_cell)) {
            first = false;
            continue;  // header
        }
        first = false;
        if (!year) throw DataError(detail::at_line(line_no) + "invalid year '" + std::string(year_cell) + "'");
        const auto value = detail::to_double(value_cell);
        if (!value) throw DataError(detail::at_line(line_no) + "non-numeric value '" + std::string(detail::trim(value_cell)) + "'");
        builder.add(*year, *value, line_no);
    }
    return {std::move(builder).build(), {}};
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

enum class InputFormat { HadCET, Csv };

inline InputFormat parse_input_format(std::string_view s) {
    if (s == "hadcet") return InputFormat::HadCET;
    if (s == "csv") return InputFormat::Csv;
    throw std::invalid_argument("unknown input format '" + std::string(s) + "'");
}

inline ParsedSeries load_series(const std::string& path, InputFormat format) {
    const auto text = read_text_file(path);
    return format == InputFormat::HadCET ? parse_hadcet(text) : parse_csv(text);
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string write_csv(const TimeSeries& series) {
    std::string out = "year,value\n";
    for (std::size_t t = 1; t <= series.size(); ++t) {
        out += std::to_string(series.year_of(t)) + "," + format_double(series.at(t)) + "\n";
    }
    return out;
}

/// year, observed, fitted, residual.
inline std::string write_fitted_csv(const TimeSeries& series, std::span<const double> fitted) {
    if (fitted.size() != series.size()) throw std::invalid_argument("fitted values do not match series");
    std::string out = "year,observed,fitted,residual\n";
    for (std::size_t t = 1; t <= series.size(); ++t) {
        const double x = series.at(t);
        out += std::to_string(series.year_of(t)) + "," + format_double(x) + "," + format_double(fitted[t - 1]) +
               "," + format_double(x - fitted[t - 1]) + "\n";
    }
    return out;
}

}  // namespace cetseg
