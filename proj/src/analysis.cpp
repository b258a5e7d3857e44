#include "texrd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

#include "texrd/csv.hpp"
#include "texrd/error.hpp"
#include "texrd/parallel.hpp"
#include "texrd/stats.hpp"

namespace texrd::analysis {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

const std::vector<std::string_view>& encoder_stat_names() {
    static const std::vector<std::string_view> names{
        "intra_pct",         "stdIntra",           "skip_pct",          "stdSkip",
        "merge_pct",         "stdMerge",           "inter_pct",         "stdInter",
        "ref0_pct",          "ref1_pct",           "ref2_pct",          "ref3_pct",
        "avgPart",           "stdPart",            "avgBits",           "stdBits",
        "avgDist",           "stdDist",            "bitsModeSignal_pct", "bitsPart_pct",
        "bitsIntraDir_pct",  "bitsMergeIdx_pct",   "bitsMotionPred_pct", "bitsResidual_pct",
        "bitsOthers_pct",    "avgMSEResi",         "stdMSEResi",        "avgMSERecError",
        "stdMSERecError",    "avgCorrResi",        "stdCorrResi",       "avgCorrCodedResi",
        "stdCorrCodedResi",  "DCIntra",            "PlanarIntra",       "avgIntraDir",
        "stdIntraDir",       "avgLengthMV",        "stdDistMV"};
    return names;
}

bool is_encoder_stat(std::string_view name) {
    const auto& n = encoder_stat_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

std::size_t StatTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw ValidationError("no column '" + std::string(name) + "'");
}

IngestResult ingest_encoder_stats(const std::filesystem::path& path) {
    const auto t = csv::read_file(path);
    IngestResult res;
    if (t.header.empty()) throw ParseError(path.string() + ": missing header");
    const auto sid = t.column("sequence_id");
    if (!sid) throw ValidationError(path.string() + ": no key column 'sequence_id'");
    const auto gid = t.column("gop_index");
    const auto cls = t.column("texture_class");

    std::vector<std::size_t> stat_cols;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c == *sid || (gid && c == *gid) || (cls && c == *cls)) continue;
        stat_cols.push_back(c);
        res.table.columns.push_back(t.header[c]);
        if (!is_encoder_stat(t.header[c]))
            res.warnings.push_back(path.string() + ": unknown statistic column '" + t.header[c] + "' kept");
    }
    res.table.values.assign(stat_cols.size(), {});
    std::set<std::string> seen;
    for (const auto& r : t.rows) {
        std::string key = r[*sid];
        if (gid) key += ":" + std::to_string(csv::parse_int_strict(r[*gid], "gop_index"));
        if (!seen.insert(key).second) throw ValidationError(path.string() + ": duplicate row key " + key);
        res.table.keys.push_back(key);
        res.table.sequence_ids.push_back(r[*sid]);
        res.table.texture_class.push_back(cls ? r[*cls] : std::string());
        for (std::size_t k = 0; k < stat_cols.size(); ++k) {
            const auto& cell = r[stat_cols[k]];
            const auto v = csv::parse_double(cell);
            if (!v && !cell.empty() && cell != "nan" && cell != "NaN" && cell != "NA" && cell != "null")
                throw ParseError(path.string() + ": bad number '" + cell + "' in column " + t.header[stat_cols[k]]);
            res.table.values[k].push_back(v && std::isfinite(*v) ? *v : kNaN);
        }
    }
    return res;
}

StatTable feature_table(std::span<const features::FeatureVector> rows) {
    StatTable t;
    for (const auto& m : features::feature_mnemonics()) t.columns.emplace_back(m);
    t.values.assign(features::kFeatureCount, {});
    for (const auto& r : rows) {
        t.keys.push_back(r.sequence_id + ":" + std::to_string(r.gop_index));
        t.sequence_ids.push_back(r.sequence_id);
        t.texture_class.emplace_back();
        for (std::size_t f = 0; f < features::kFeatureCount; ++f)
            t.values[f].push_back(std::isfinite(r.values[f]) ? r.values[f] : kNaN);
    }
    return t;
}

StatTable aggregate_by_sequence(const StatTable& t) {
    StatTable out;
    out.columns = t.columns;
    out.values.assign(t.columns.size(), {});
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> rows;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        auto [it, fresh] = rows.try_emplace(t.sequence_ids[r]);
        if (fresh) order.push_back(t.sequence_ids[r]);
        it->second.push_back(r);
    }
    for (const auto& s : order) {
        const auto& idx = rows[s];
        out.keys.push_back(s);
        out.sequence_ids.push_back(s);
        out.texture_class.push_back(t.texture_class[idx.front()]);
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            double sum = 0.0;
            int n = 0;
            for (auto r : idx)
                if (std::isfinite(t.values[c][r])) {
                    sum += t.values[c][r];
                    ++n;
                }
            out.values[c].push_back(n ? sum / n : kNaN);
        }
    }
    return out;
}

void assign_classes(StatTable& t, const std::map<std::string, std::string>& classes) {
    for (std::size_t r = 0; r < t.rows(); ++r) {
        auto it = classes.find(t.sequence_ids[r]);
        if (it != classes.end()) t.texture_class[r] = it->second;
    }
}

std::string_view to_string(Method m) { return m == Method::Pearson ? "pearson" : "spearman"; }

Method parse_method(std::string_view s) {
    if (s == "pearson") return Method::Pearson;
    if (s == "spearman") return Method::Spearman;
    throw ValidationError("correlation method must be 'pearson' or 'spearman'");
}

CorrelationMatrix correlation_matrix(const StatTable& left, const StatTable& right, Method method, int jobs) {
    std::map<std::string, std::size_t> rkey;
    for (std::size_t r = 0; r < right.rows(); ++r) rkey.emplace(right.keys[r], r);
    std::vector<std::pair<std::size_t, std::size_t>> joined;
    for (std::size_t l = 0; l < left.rows(); ++l) {
        auto it = rkey.find(left.keys[l]);
        if (it != rkey.end()) joined.emplace_back(l, it->second);
    }
    if (joined.empty()) throw ValidationError("correlation: the tables share no row keys");

    CorrelationMatrix m;
    m.method = method;
    m.row_names = left.columns;
    m.col_names = right.columns;
    m.joined_rows = joined.size();
    const std::size_t nr = left.columns.size(), nc = right.columns.size();
    m.coeffs.assign(nr * nc, kNaN);
    m.pairs.assign(nr * nc, 0);
    parallel_for(nr * nc, jobs, [&](std::size_t cell) {
        const std::size_t i = cell / nc, j = cell % nc;
        std::vector<double> x, y;
        for (const auto& [l, r] : joined) {
            const double a = left.values[i][l], b = right.values[j][r];
            if (std::isfinite(a) && std::isfinite(b)) {
                x.push_back(a);
                y.push_back(b);
            }
        }
        m.pairs[cell] = x.size();
        if (x.size() < 3) return;
        const double c = method == Method::Pearson ? pearson(x, y) : spearman(x, y);
        if (std::isfinite(c)) m.coeffs[cell] = std::clamp(c, -1.0, 1.0);
    });
    return m;
}

BoxStats box_stats(std::span<const double> values) {
    std::vector<double> v;
    for (double x : values)
        if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) throw ValidationError("box summary of an empty group");
    std::sort(v.begin(), v.end());
    BoxStats b;
    b.n = v.size();
    b.min = v.front();
    b.max = v.back();
    b.q1 = quantile_type7(v, 0.25);
    b.median = quantile_type7(v, 0.5);
    b.q3 = quantile_type7(v, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
    for (double x : v)
        if (x < lo || x > hi) b.outliers.push_back(x);
    return b;
}

std::vector<BoxStats> box_summary(const StatTable& t) {
    std::vector<std::string> groups;
    for (const auto& c : t.texture_class)
        if (!c.empty() && std::find(groups.begin(), groups.end(), c) == groups.end()) groups.push_back(c);
    if (groups.empty()) throw ValidationError("box summary: no rows carry a texture class");
    std::sort(groups.begin(), groups.end());
    std::vector<BoxStats> out;
    for (const auto& g : groups) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            std::vector<double> v;
            for (std::size_t r = 0; r < t.rows(); ++r)
                if (t.texture_class[r] == g && std::isfinite(t.values[c][r])) v.push_back(t.values[c][r]);
            if (v.empty()) continue;
            BoxStats b = box_stats(v);
            b.group = g;
            b.column = t.columns[c];
            out.push_back(std::move(b));
        }
    }
    return out;
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m, std::span<const std::string> metadata) {
    for (const auto& s : metadata) out << "# " << s << '\n';
    out << "# method: " << to_string(m.method) << ", missing cells: pairwise deletion, joined rows: " << m.joined_rows
        << '\n';
    out << "feature";
    for (const auto& c : m.col_names) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.row_names.size(); ++r) {
        out << m.row_names[r];
        for (std::size_t c = 0; c < m.col_names.size(); ++c) out << ',' << csv::format_double(m.at(r, c));
        out << '\n';
    }
}

namespace {

std::string rgb(double r, double g, double b) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(r * 255)),
                  static_cast<int>(std::lround(g * 255)), static_cast<int>(std::lround(b * 255)));
    return buf;
}

// -1 red, 0 white, +1 blue.
std::string diverging(double v) {
    if (!std::isfinite(v)) return "#bdbdbd";
    const double t = std::clamp(std::fabs(v), 0.0, 1.0);
    return v >= 0 ? rgb(1 - 0.85 * t, 1 - 0.6 * t, 1 - 0.25 * t) : rgb(1 - 0.25 * t, 1 - 0.85 * t, 1 - 0.85 * t);
}

std::string xml_escape(std::string_view s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

std::string fmt(double v, const char* f = "%.4g") {
    char buf[32];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

void write_correlation_svg(std::ostream& out, const CorrelationMatrix& m) {
    const int cell = 14, left = 130, top = 130;
    const int w = left + cell * static_cast<int>(m.col_names.size()) + 80;
    const int h = top + cell * static_cast<int>(m.row_names.size()) + 20;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
    for (std::size_t c = 0; c < m.col_names.size(); ++c) {
        const int x = left + cell * static_cast<int>(c) + cell / 2;
        out << "<text transform=\"translate(" << x << ',' << top - 4 << ") rotate(-60)\">"
            << xml_escape(m.col_names[c]) << "</text>\n";
    }
    for (std::size_t r = 0; r < m.row_names.size(); ++r) {
        const int y = top + cell * static_cast<int>(r);
        out << "<text x=\"" << left - 4 << "\" y=\"" << y + cell - 3 << "\" text-anchor=\"end\">"
            << xml_escape(m.row_names[r]) << "</text>\n";
        for (std::size_t c = 0; c < m.col_names.size(); ++c) {
            const double v = m.at(r, c);
            out << "<rect x=\"" << left + cell * static_cast<int>(c) << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << diverging(v) << "\"><title>" << xml_escape(m.row_names[r])
                << " / " << xml_escape(m.col_names[c]) << ": " << (std::isfinite(v) ? fmt(v) : "n/a")
                << "</title></rect>\n";
        }
    }
    // colour bar
    const int bx = left + cell * static_cast<int>(m.col_names.size()) + 20;
    for (int k = 0; k <= 20; ++k) {
        const double v = 1.0 - k / 10.0;
        out << "<rect x=\"" << bx << "\" y=\"" << top + k * 6 << "\" width=\"12\" height=\"6\" fill=\"" << diverging(v)
            << "\"/>\n";
    }
    out << "<text x=\"" << bx + 16 << "\" y=\"" << top + 6 << "\">1</text>\n";
    out << "<text x=\"" << bx + 16 << "\" y=\"" << top + 126 << "\">-1</text>\n";
    out << "</svg>\n";
}

void write_box_csv(std::ostream& out, std::span<const BoxStats> boxes, std::span<const std::string> metadata) {
    for (const auto& s : metadata) out << "# " << s << '\n';
    out << "group,column,n,min,q1,median,q3,max,outliers\n";
    for (const auto& b : boxes) {
        out << b.group << ',' << b.column << ',' << b.n << ',' << csv::format_double(b.min) << ','
            << csv::format_double(b.q1) << ',' << csv::format_double(b.median) << ',' << csv::format_double(b.q3)
            << ',' << csv::format_double(b.max) << ',';
        for (std::size_t i = 0; i < b.outliers.size(); ++i)
            out << (i ? ";" : "") << csv::format_double(b.outliers[i]);
        out << '\n';
    }
}

void write_box_svg(std::ostream& out, std::span<const BoxStats> boxes) {
    std::vector<std::string> cols, groups;
    for (const auto& b : boxes) {
        if (std::find(cols.begin(), cols.end(), b.column) == cols.end()) cols.push_back(b.column);
        if (std::find(groups.begin(), groups.end(), b.group) == groups.end()) groups.push_back(b.group);
    }
    auto colour = [&](const std::string& g) -> std::string {
        if (g == "static") return "#f28e2b";
        if (g == "dynamic_continuous") return "#4e79a7";
        if (g == "dynamic_discrete") return "#59a14f";
        static const char* spare[] = {"#e15759", "#76b7b2", "#edc948", "#b07aa1"};
        const auto k = static_cast<std::size_t>(std::find(groups.begin(), groups.end(), g) - groups.begin());
        return spare[k % 4];
    };
    const int pw = 150, ph = 150, per_row = 6;
    const int nrows = (static_cast<int>(cols.size()) + per_row - 1) / per_row;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << per_row * pw << "\" height=\""
        << std::max(nrows, 1) * ph + 24 << "\" font-family=\"sans-serif\" font-size=\"9\">\n";
    for (std::size_t g = 0; g < groups.size(); ++g)
        out << "<text x=\"" << 10 + 140 * static_cast<int>(g) << "\" y=\"14\" fill=\"" << colour(groups[g]) << "\">"
            << xml_escape(groups[g]) << "</text>\n";
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const int px = static_cast<int>(c % per_row) * pw, py = 24 + static_cast<int>(c / per_row) * ph;
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& b : boxes)
            if (b.column == cols[c]) {
                lo = std::min(lo, b.min);
                hi = std::max(hi, b.max);
            }
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
        auto Y = [&](double v) { return py + ph - 20 - (v - lo) / (hi - lo) * (ph - 40); };
        out << "<g><text x=\"" << px + pw / 2 << "\" y=\"" << py + 12 << "\" text-anchor=\"middle\">"
            << xml_escape(cols[c]) << "</text>\n";
        const double slot = static_cast<double>(pw - 20) / static_cast<double>(std::max<std::size_t>(groups.size(), 1));
        for (const auto& b : boxes) {
            if (b.column != cols[c]) continue;
            const auto k = static_cast<double>(std::find(groups.begin(), groups.end(), b.group) - groups.begin());
            const double x0 = px + 10 + k * slot + slot * 0.2, x1 = px + 10 + (k + 1) * slot - slot * 0.2;
            const double xm = 0.5 * (x0 + x1);
            const std::string col = colour(b.group);
            // whiskers reach the most extreme non-outlier values
            const double iqr = b.q3 - b.q1;
            const double wlo = std::max(b.min, b.q1 - 1.5 * iqr);
            const double whi = std::min(b.max, b.q3 + 1.5 * iqr);
            out << "<line x1=\"" << fmt(xm) << "\" y1=\"" << fmt(Y(wlo)) << "\" x2=\"" << fmt(xm) << "\" y2=\""
                << fmt(Y(whi)) << "\" stroke=\"" << col << "\"/>\n";
            out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(Y(b.q3)) << "\" width=\"" << fmt(x1 - x0)
                << "\" height=\"" << fmt(std::max(Y(b.q1) - Y(b.q3), 0.5)) << "\" fill=\"" << col
                << "\" fill-opacity=\"0.5\" stroke=\"" << col << "\"/>\n";
            out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(Y(b.median)) << "\" x2=\"" << fmt(x1) << "\" y2=\""
                << fmt(Y(b.median)) << "\" stroke=\"black\"/>\n";
            for (double o : b.outliers)
                out << "<circle cx=\"" << fmt(xm) << "\" cy=\"" << fmt(Y(o)) << "\" r=\"1.5\" fill=\"none\" stroke=\""
                    << col << "\"/>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

}  // namespace texrd::analysis
