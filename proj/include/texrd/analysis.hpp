#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "texrd/features.hpp"

namespace texrd::analysis {

/// Encoder statistic names, with (%) written as a _pct suffix.
const std::vector<std::string_view>& encoder_stat_names();
bool is_encoder_stat(std::string_view name);

/// Rectangular table of optional numbers. Missing cells are NaN.
struct StatTable {
    std::vector<std::string> keys;           // "sequence" or "sequence:gop"
    std::vector<std::string> sequence_ids;   // per row
    std::vector<std::string> texture_class;  // per row, empty when unknown
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[column][row]

    std::size_t rows() const { return keys.size(); }
    std::size_t column_index(std::string_view name) const;  // throws ValidationError
};

struct IngestResult {
    StatTable table;
    std::vector<std::string> warnings;
};

/// CSV keyed by `sequence_id` (plus optional `gop_index`), optional
/// `texture_class` column. Unknown statistic columns are kept with a warning.
IngestResult ingest_encoder_stats(const std::filesystem::path& path);

StatTable feature_table(std::span<const features::FeatureVector> rows);
/// Averages rows of the same sequence over the non-missing cells; keys become sequence ids.
StatTable aggregate_by_sequence(const StatTable& t);
/// Sets texture_class from a sequence -> class map; unknown sequences stay empty.
void assign_classes(StatTable& t, const std::map<std::string, std::string>& classes);

enum class Method { Pearson, Spearman };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct CorrelationMatrix {
    Method method = Method::Pearson;
    std::vector<std::string> row_names;  // left columns
    std::vector<std::string> col_names;  // right columns
    std::vector<double> coeffs;          // row-major; NaN when undefined
    std::vector<std::size_t> pairs;      // complete rows behind each entry
    std::size_t joined_rows = 0;

    double at(std::size_t r, std::size_t c) const { return coeffs[r * col_names.size() + c]; }
};

/// Inner join on key, pairwise deletion of missing cells; entries with fewer
/// than 3 complete rows or zero variance are NaN.
CorrelationMatrix correlation_matrix(const StatTable& left, const StatTable& right, Method method, int jobs = 1);

struct BoxStats {
    std::string group;
    std::string column;
    std::size_t n = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    std::vector<double> outliers;  // outside [q1 - 1.5 IQR, q3 + 1.5 IQR]
};

BoxStats box_stats(std::span<const double> values);
/// One entry per (texture class, column) with at least one value. Rows
/// without a class are skipped; no classified rows is an error.
std::vector<BoxStats> box_summary(const StatTable& t);

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m, std::span<const std::string> metadata = {});
/// Diverging heatmap, blue for positive and red for negative.
void write_correlation_svg(std::ostream& out, const CorrelationMatrix& m);
void write_box_csv(std::ostream& out, std::span<const BoxStats> boxes, std::span<const std::string> metadata = {});
void write_box_svg(std::ostream& out, std::span<const BoxStats> boxes);

}  // namespace texrd::analysis
