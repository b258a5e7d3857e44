#include "texrd/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "texrd/error.hpp"

namespace texrd::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quote in CSV line: " + std::string(line));
    out.emplace_back(trim(cur));
    return out;
}

Table parse(std::string_view text, const std::string& source) {
    Table t;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '#') {
            t.comments.emplace_back(trim(line.substr(1)));
            continue;
        }
        auto fields = split_line(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
        } else {
            if (fields.size() != t.header.size())
                throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(t.header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
            t.rows.push_back(std::move(fields));
        }
        if (end == text.size()) break;
    }
    return t;
}

Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::optional<double> parse_double(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NAN" || cell == "NA" ||
        cell == "null")
        return std::nullopt;
    if (cell == "inf" || cell == "+inf") return HUGE_VAL;
    if (cell == "-inf") return -HUGE_VAL;
    if (cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("not a number: '" + std::string(cell) + "'");
    return v;
}

double parse_double_strict(std::string_view cell, std::string_view what) {
    auto v = parse_double(cell);
    if (!v) throw ParseError("missing value for " + std::string(what));
    return *v;
}

long long parse_int_strict(std::string_view cell, std::string_view what) {
    cell = trim(cell);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
        throw ParseError("not an integer for " + std::string(what) + ": '" + std::string(cell) + "'");
    return v;
}

}  // namespace texrd::csv
