#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace texrd::csv {

struct Table {
    std::vector<std::string> comments;  // '#' lines, without the leading '#'
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
};

/// Comma-separated with optional double quotes. Blank lines are skipped and
/// lines starting with '#' are collected as comments. Every data row must
/// have as many fields as the header.
Table parse(std::string_view text, const std::string& source = "<memory>");
Table read_file(const std::filesystem::path& path);

std::vector<std::string> split_line(std::string_view line);

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);
/// Parses a cell; empty, "nan", "NaN", "NA" yield nullopt.
std::optional<double> parse_double(std::string_view cell);
double parse_double_strict(std::string_view cell, std::string_view what);
long long parse_int_strict(std::string_view cell, std::string_view what);

}  // namespace texrd::csv
