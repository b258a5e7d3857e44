#include "texrd/features.hpp"

#include <cmath>
#include <ostream>

#include "texrd/csv.hpp"
#include "texrd/error.hpp"
#include "texrd/stats.hpp"
#include "texrd/wavelet.hpp"

namespace texrd::features {

const std::array<std::string_view, kFeatureCount>& feature_mnemonics() {
    static const std::array<std::string_view, kFeatureCount> names{
        "meanGLCM_con", "stdGLCM_con", "meanGLCM_cor", "stdGLCM_cor", "meanGLCM_hom",  "stdGLCM_hom",
        "meanGLCM_enr", "stdGLCM_enr", "meanGLCM_ent", "stdGLCM_ent", "NCC_mean",      "NCC_std",
        "NCC_skw",      "NCC_kur",     "NCC_ent",      "ALPD_mean",   "ALPD_std",      "NLP_mean",
        "NLP_std",      "NLP_skw",     "NLP_kur",      "meanTC_mean", "stdTC_mean",    "meanTC_std",
        "stdTC_std",    "meanTC_skw",  "stdTC_skw",    "meanTC_kur",  "stdTC_kur",     "meanTC_ent",
        "stdTC_ent",    "meanOF_mag",  "stdOF_mag",    "meanOF_or",   "stdOF_or",      "meanOF_curl",
        "stdOF_curl",   "meanOF_ang",  "stdOF_ang",    "stdOF_covVx", "meanOF_covVy",  "stdOF_covVy",
        "meanOF_covVxVy", "stdOF_covVxVy"};
    return names;
}

std::string feature_id(std::size_t index) { return "F" + std::to_string(index + 1); }

std::size_t feature_index(std::string_view name) {
    if (name.size() >= 2 && name[0] == 'F' && name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
        const auto k = static_cast<std::size_t>(std::stoul(std::string(name.substr(1))));
        if (k >= 1 && k <= kFeatureCount) return k - 1;
    }
    const auto& names = feature_mnemonics();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw ValidationError("unknown feature '" + std::string(name) + "'");
}

namespace {

// Running per-feature sample with the non-finite guard applied on entry.
struct Collector {
    GopFeatures& out;
    double guard(std::size_t feature, double v) {
        if (std::isfinite(v)) return v;
        ++out.substitutions[feature];
        return 0.0;
    }
};

}  // namespace

GopFeatures extract_gop_features(std::span<const io::FramePlane> frames, const FeatureConfig& cfg) {
    if (frames.size() < 3) throw ValidationError("GoP feature extraction needs at least 3 frames");
    for (const auto& f : frames)
        if (f.width != frames[0].width || f.height != frames[0].height)
            throw ValidationError("GoP frames differ in size");

    GopFeatures out;
    Collector col{out};
    const std::size_t nframes = frames.size(), npairs = nframes - 1;
    auto& v = out.values;

    // F1..F10, F16..F17: per-frame spatial features.
    std::vector<double> con, cor, hom, enr, ent, alpds;
    for (const auto& f : frames) {
        const auto d = glcm_descriptors(compute_glcm(f, cfg.glcm_levels, cfg.glcm_offset));
        con.push_back(col.guard(0, d.contrast));
        cor.push_back(col.guard(2, d.correlation));
        hom.push_back(col.guard(4, d.homogeneity));
        enr.push_back(col.guard(6, d.energy));
        ent.push_back(col.guard(8, d.entropy));
        alpds.push_back(col.guard(15, alpd(f)));
    }
    const std::array<const std::vector<double>*, 5> glcm{&con, &cor, &hom, &enr, &ent};
    for (std::size_t k = 0; k < glcm.size(); ++k) {
        v[2 * k] = mean(*glcm[k]);
        v[2 * k + 1] = sample_std(*glcm[k]);
    }
    v[15] = mean(alpds);
    v[16] = sample_std(alpds);

    // Pairwise features.
    std::array<std::vector<double>, 5> ncc, tc;
    std::vector<double> nlp;
    std::vector<FlowField> flows;
    for (std::size_t t = 0; t < npairs; ++t) {
        const auto& a = frames[t];
        const auto& b = frames[t + 1];

        std::vector<double> peaks;
        for (const auto& pk : ncc_peaks(a, b, cfg.ncc)) peaks.push_back(pk.value);
        const StatMoments nm = describe(peaks, -1.0, 1.0, 64);
        const std::array<double, 5> nv{nm.mean, nm.std, nm.skewness, nm.kurtosis, nm.entropy};
        for (std::size_t k = 0; k < 5; ++k) ncc[k].push_back(col.guard(10 + k, nv[k]));

        nlp.push_back(col.guard(17, nlp_distance(a, b, cfg.nlp)));

        const StatMoments tm = temporal_coherence_stats(a, b, cfg.tc);
        const std::array<double, 5> tv{tm.mean, tm.std, tm.skewness, tm.kurtosis, tm.entropy};
        for (std::size_t k = 0; k < 5; ++k) tc[k].push_back(col.guard(21 + 2 * k, tv[k]));

        flows.push_back(farneback_flow(a, b, cfg.flow));
    }
    for (std::size_t k = 0; k < 5; ++k) v[10 + k] = mean(ncc[k]);

    const StatMoments nlpm = describe(nlp, 0.0, 1.0, 64);
    v[17] = nlpm.mean;
    v[18] = nlpm.std;
    v[19] = nlpm.skewness;
    v[20] = nlpm.kurtosis;

    for (std::size_t k = 0; k < 5; ++k) {
        v[21 + 2 * k] = mean(tc[k]);
        v[22 + 2 * k] = sample_std(tc[k]);
    }

    const auto fs = flow_statistics(flows);
    for (std::size_t k = 0; k < fs.size(); ++k) v[31 + k] = fs[k];

    for (std::size_t k = 0; k < kFeatureCount; ++k) v[k] = col.guard(k, v[k]);
    return out;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows, std::span<const std::string> metadata) {
    for (const auto& m : metadata) out << "# " << m << '\n';
    out << "# mnemonics: sequence_id,gop_index";
    for (const auto& n : feature_mnemonics()) out << ',' << n;
    out << '\n' << "sequence_id,gop_index";
    for (std::size_t i = 0; i < kFeatureCount; ++i) out << ',' << feature_id(i);
    out << '\n';
    for (const auto& r : rows) {
        out << r.sequence_id << ',' << r.gop_index;
        for (double x : r.values) out << ',' << csv::format_double(x);
        out << '\n';
    }
}

std::vector<FeatureVector> read_feature_csv(const std::filesystem::path& path) {
    const auto table = csv::read_file(path);
    const auto sid = table.column("sequence_id");
    const auto gid = table.column("gop_index");
    if (!sid || !gid) throw ParseError(path.string() + ": feature CSV needs sequence_id and gop_index columns");
    std::array<std::size_t, kFeatureCount> cols{};
    std::array<bool, kFeatureCount> found{};
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == *sid || c == *gid) continue;
        std::size_t k = 0;
        try {
            k = feature_index(table.header[c]);
        } catch (const ValidationError&) {
            continue;
        }
        cols[k] = c;
        found[k] = true;
    }
    for (std::size_t k = 0; k < kFeatureCount; ++k)
        if (!found[k]) throw ParseError(path.string() + ": missing feature column " + feature_id(k));

    std::vector<FeatureVector> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        FeatureVector fv;
        fv.sequence_id = r[*sid];
        fv.gop_index = static_cast<int>(csv::parse_int_strict(r[*gid], "gop_index"));
        for (std::size_t k = 0; k < kFeatureCount; ++k)
            fv.values[k] = csv::parse_double_strict(r[cols[k]], feature_id(k));
        rows.push_back(std::move(fv));
    }
    return rows;
}

}  // namespace texrd::features
