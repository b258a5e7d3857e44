#include "texrd/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "texrd/analysis.hpp"
#include "texrd/bd_metrics.hpp"
#include "texrd/config.hpp"
#include "texrd/csv.hpp"
#include "texrd/error.hpp"
#include "texrd/features.hpp"
#include "texrd/parallel.hpp"
#include "texrd/rd_model.hpp"
#include "texrd/regression.hpp"
#include "texrd/stats.hpp"
#include "texrd/video_io.hpp"

namespace texrd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string tool_string() { return std::string("texrd ") + kToolVersion; }

std::vector<std::string> csv_metadata(const PipelineConfig& c) {
    return {"tool: " + tool_string(), "config: " + config_to_json(c).dump()};
}

json json_header(const PipelineConfig& c) { return {{"tool", tool_string()}, {"config", config_to_json(c)}}; }

// Writes through a temporary sibling and renames, so a failed run leaves no partial file.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
    if (path.has_parent_path() && !fs::exists(path.parent_path()))
        throw IoError("output directory does not exist: " + path.parent_path().string());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + tmp.string());
        try {
            fn(f);
        } catch (...) {
            f.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
        f.flush();
        if (!f) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed: " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

void write_json(const fs::path& path, const json& j) {
    write_atomic(path, [&](std::ostream& o) { o << j.dump(1) << '\n'; });
}

json read_json(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string key_of(const std::string& seq, int gop) { return seq + ":" + std::to_string(gop); }

// Fit records from a fit or prediction JSON document.
std::vector<ml::FitRecord> read_fit_records(const fs::path& path, const std::string& kind_filter) {
    const json j = read_json(path);
    const char* arr = j.contains("fits") ? "fits" : (j.contains("predictions") ? "predictions" : nullptr);
    if (!arr) throw ParseError(path.string() + ": expected a 'fits' or 'predictions' array");
    std::vector<ml::FitRecord> out;
    std::set<std::string> kinds;
    try {
        for (const auto& r : j.at(arr)) {
            ml::FitRecord rec;
            rec.sequence_id = r.at("sequence_id").get<std::string>();
            rec.gop_index = r.at("gop_index").get<int>();
            rec.fit = rd::fit_from_json(r);
            kinds.insert(std::string(rd::to_string(rec.fit.kind)));
            out.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!kind_filter.empty()) {
        const auto k = rd::parse_kind(kind_filter);
        std::erase_if(out, [&](const ml::FitRecord& r) { return r.fit.kind != k; });
    } else if (kinds.size() > 1) {
        throw ValidationError(path.string() + ": holds several model kinds; choose one with --kind");
    }
    return out;
}

struct Shared {
    std::string config_path;
    int jobs = 1;
    std::uint64_t seed = 1;
};

void add_shared(CLI::App* sub, Shared& s) {
    sub->add_option("--config", s.config_path, "PipelineConfig JSON; flags override it");
    sub->add_option("--jobs", s.jobs, "worker threads (default $TEXRD_JOBS or 1)")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", s.seed, "random seed");
}

// Applies an option to the config only when it was given on the command line.
struct Overrides {
    std::vector<std::function<void(PipelineConfig&)>> apply;
    template <typename T, typename Set>
    void add(CLI::App* sub, const std::string& name, const std::string& help, Set set) {
        auto value = std::make_shared<T>();
        auto* opt = sub->add_option(name, *value, help);
        apply.push_back([opt, value, set](PipelineConfig& c) {
            if (opt->count()) set(c, *value);
        });
    }
};

PipelineConfig resolve(const Shared& s, const Overrides& o, const CLI::App* sub) {
    PipelineConfig c = s.config_path.empty() ? PipelineConfig{} : load_config(s.config_path);
    for (const auto& f : o.apply) f(c);
    if (sub->count("--seed")) c.seed = s.seed;
    c.validate();
    return c;
}

int default_jobs() {
    if (const char* e = std::getenv("TEXRD_JOBS")) {
        try {
            const int j = std::stoi(e);
            if (j >= 1) return j;
        } catch (...) {
        }
    }
    return 1;
}

// ---------------------------------------------------------------- extract

int cmd_extract(const PipelineConfig& cfg, int jobs, const fs::path& manifest, const fs::path& out_path,
                fs::path report_path, std::ostream& err) {
    const auto entries = io::load_manifest(manifest);
    struct Unit {
        std::size_t entry;
        io::GopView gop;
    };
    std::vector<Unit> units;
    for (std::size_t e = 0; e < entries.size(); ++e) {
        const int n = std::min(entries[e].frame_count, cfg.max_frames);
        if (n < cfg.gop_len) {
            err << "warning: " << entries[e].id << " has fewer than gop_len frames; skipped\n";
            continue;
        }
        for (const auto& g : io::segment_gops(n, cfg.gop_len, entries[e].id)) units.push_back({e, g});
    }
    err << "extract: " << units.size() << " GoPs from " << entries.size() << " sequence(s)\n";

    std::vector<features::FeatureVector> rows(units.size());
    std::vector<std::array<int, features::kFeatureCount>> subs(units.size());
    parallel_for(units.size(), jobs, [&](std::size_t i) {
        const auto& u = units[i];
        const auto frames = io::read_luma_frames(entries[u.entry], u.gop.frames);
        const auto g = features::extract_gop_features(frames, cfg.features);
        rows[i].sequence_id = u.gop.sequence_id;
        rows[i].gop_index = u.gop.gop_index;
        rows[i].values = g.values;
        subs[i] = g.substitutions;
    });

    std::array<long, features::kFeatureCount> total{};
    long all = 0;
    for (const auto& s : subs)
        for (std::size_t f = 0; f < s.size(); ++f) {
            total[f] += s[f];
            all += s[f];
        }
    write_atomic(out_path, [&](std::ostream& o) { features::write_feature_csv(o, rows, csv_metadata(cfg)); });

    json report = json_header(cfg);
    report["rows"] = rows.size();
    report["sequences"] = entries.size();
    json per = json::object();
    for (std::size_t f = 0; f < total.size(); ++f)
        if (total[f]) per[features::feature_id(f)] = total[f];
    report["substitutions"] = per;
    report["substitution_total"] = all;
    if (report_path.empty()) {
        report_path = out_path;
        report_path += ".report.json";
    }
    write_json(report_path, report);
    err << "extract: wrote " << rows.size() << " rows; " << all << " non-finite value(s) replaced by 0\n";
    return kOk;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const PipelineConfig& cfg, const fs::path& points, const std::string& kind_arg, const fs::path& out_path,
            std::ostream& err) {
    std::vector<rd::RdModelKind> kinds;
    if (kind_arg == "all") kinds.assign(std::begin(rd::kAllKinds), std::end(rd::kAllKinds));
    else kinds.push_back(rd::parse_kind(kind_arg));

    const auto curves = rd::read_rd_points(points);
    json fits = json::array(), failures = json::array(), warnings = json::array();
    std::map<rd::RdModelKind, std::vector<rd::RdFit>> by_kind;
    for (const auto& c : curves) {
        for (const auto& w : rd::check_curve(c)) {
            warnings.push_back(w);
            err << "warning: " << w << '\n';
        }
        for (auto k : kinds) {
            try {
                const auto f = rd::fit_rd(c, k);
                fits.push_back(rd::fit_to_json(f, c.sequence_id, c.gop_index));
                by_kind[k].push_back(f);
            } catch (const Error& e) {
                failures.push_back({{"sequence_id", c.sequence_id},
                                    {"gop_index", c.gop_index},
                                    {"kind", std::string(rd::to_string(k))},
                                    {"error", e.what()}});
                err << "error: " << c.sequence_id << "/" << c.gop_index << " " << rd::to_string(k) << ": " << e.what()
                    << '\n';
            }
        }
    }
    json summary = json::object();
    for (auto k : kinds) {
        std::vector<double> r2, rmse;
        for (const auto& f : by_kind[k]) {
            if (std::isfinite(f.r_squared)) r2.push_back(f.r_squared);
            rmse.push_back(f.rmse);
        }
        auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
        summary[std::string(rd::to_string(k))] = {
            {"count", by_kind[k].size()},
            {"r2_mean", r2.empty() ? json(nullptr) : num(mean(r2))},
            {"r2_std", r2.empty() ? json(nullptr) : num(sample_std(r2))},
            {"rmse_mean", rmse.empty() ? json(nullptr) : num(mean(rmse))},
            {"rmse_std", rmse.empty() ? json(nullptr) : num(sample_std(rmse))}};
    }
    json doc = json_header(cfg);
    doc["fits"] = fits;
    doc["failures"] = failures;
    doc["warnings"] = warnings;
    doc["summary"] = summary;
    write_json(out_path, doc);
    err << "fit: " << fits.size() << " fit(s), " << failures.size() << " failure(s)\n";
    return failures.empty() ? kOk : kPartial;
}

// ---------------------------------------------------------------- bd

std::map<std::string, rd::RdCurve> load_side(const fs::path& path, const std::string& kind,
                                             const std::map<std::string, rd::RdCurve>* rates,
                                             std::vector<std::string>& missing) {
    std::map<std::string, rd::RdCurve> out;
    if (path.extension() == ".json") {
        if (!rates) throw ValidationError(path.string() + ": fit input needs --rates to sample the models");
        for (const auto& r : read_fit_records(path, kind)) {
            const auto key = key_of(r.sequence_id, r.gop_index);
            auto it = rates->find(key);
            if (it == rates->end()) {
                missing.push_back(key + " (no rates)");
                continue;
            }
            out[key] = bd::sample_curve(r.fit, it->second);
        }
    } else {
        for (auto& c : rd::read_rd_points(path)) out[key_of(c.sequence_id, c.gop_index)] = std::move(c);
    }
    return out;
}

int cmd_bd(const PipelineConfig& cfg, const fs::path& ref_path, const fs::path& test_path, const fs::path& rates_path,
           const std::string& kind, bool mean_reference, const fs::path& out_path, std::ostream& err) {
    std::map<std::string, rd::RdCurve> rates;
    if (!rates_path.empty())
        for (auto& c : rd::read_rd_points(rates_path)) rates[key_of(c.sequence_id, c.gop_index)] = std::move(c);
    const auto* rp = rates_path.empty() ? nullptr : &rates;
    std::vector<std::string> problems;
    auto ref = load_side(ref_path, kind, rp, problems);
    const auto test = load_side(test_path, kind, rp, problems);

    std::map<std::string, rd::RdCurve> seq_mean;
    if (mean_reference) {
        std::map<std::string, std::vector<rd::RdCurve>> groups;
        for (const auto& [k, c] : ref) groups[c.sequence_id].push_back(c);
        for (const auto& [s, cs] : groups) seq_mean[s] = bd::mean_curve(cs);
    }

    std::vector<bd::BdRow> rows;
    for (const auto& [key, t] : test) {
        const rd::RdCurve* r = nullptr;
        if (mean_reference) {
            auto it = seq_mean.find(t.sequence_id);
            if (it != seq_mean.end()) r = &it->second;
        } else {
            auto it = ref.find(key);
            if (it != ref.end()) r = &it->second;
        }
        if (!r) {
            problems.push_back(key + " (no reference)");
            continue;
        }
        bd::BdRow row{t.sequence_id, t.gop_index, NAN, NAN};
        try {
            row.bd_psnr = bd::bd_psnr(*r, t).value;
        } catch (const Error& e) {
            problems.push_back(key + " BD-PSNR: " + e.what());
        }
        try {
            row.bd_rate = bd::bd_rate(*r, t).value;
        } catch (const Error& e) {
            problems.push_back(key + " BD-rate: " + e.what());
        }
        rows.push_back(row);
    }
    if (!mean_reference)
        for (const auto& [key, c] : ref)
            if (!test.count(key)) problems.push_back(key + " (no test curve)");

    auto meta = csv_metadata(cfg);
    meta.push_back(std::string("reference: ") + (mean_reference ? "per-sequence mean curve" : "per-curve"));
    for (const auto& p : problems) {
        meta.push_back("problem: " + p);
        err << "warning: " << p << '\n';
    }
    write_atomic(out_path, [&](std::ostream& o) { bd::write_bd_report(o, rows, meta); });

    // Cumulative distribution of each metric.
    fs::path cdf_path = out_path;
    cdf_path += ".cdf.csv";
    std::vector<double> ps, rs;
    for (const auto& r : rows) {
        if (std::isfinite(r.bd_psnr)) ps.push_back(r.bd_psnr);
        if (std::isfinite(r.bd_rate)) rs.push_back(r.bd_rate);
    }
    std::sort(ps.begin(), ps.end());
    std::sort(rs.begin(), rs.end());
    write_atomic(cdf_path, [&](std::ostream& o) {
        for (const auto& m : csv_metadata(cfg)) o << "# " << m << '\n';
        o << "metric,value,cumulative_fraction\n";
        for (std::size_t i = 0; i < ps.size(); ++i)
            o << "bd_psnr_db," << csv::format_double(ps[i]) << ','
              << csv::format_double(static_cast<double>(i + 1) / static_cast<double>(ps.size())) << '\n';
        for (std::size_t i = 0; i < rs.size(); ++i)
            o << "bd_rate_pct," << csv::format_double(rs[i]) << ','
              << csv::format_double(static_cast<double>(i + 1) / static_cast<double>(rs.size())) << '\n';
    });
    err << "bd: " << rows.size() << " pair(s), " << problems.size() << " problem(s)\n";
    return problems.empty() ? kOk : kPartial;
}

// ---------------------------------------------------------------- train

std::string join_ids(const std::vector<std::size_t>& idx) {
    std::string s;
    for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? ";" : "") + features::feature_id(idx[i]);
    return s;
}

int cmd_train(const PipelineConfig& cfg, int jobs, const fs::path& feat_path, const fs::path& fits_path,
              const std::string& kind_arg, const fs::path& out_path, fs::path report_path, std::ostream& err) {
    const auto kind = rd::parse_kind(kind_arg);
    const auto feats = features::read_feature_csv(feat_path);
    const auto fits = read_fit_records(fits_path, std::string(rd::to_string(kind)));
    if (fits.empty()) throw ValidationError(fits_path.string() + ": no fits of kind " + std::string(rd::to_string(kind)));

    ml::TrainConfig tc;
    tc.seed = cfg.seed;
    tc.hyper = cfg.forest;
    tc.rfe = cfg.rfe;
    tc.features = cfg.feature_mode;
    tc.split_by = cfg.split_by;
    tc.train_fraction = cfg.train_fraction;
    tc.relation_log_base = cfg.relation_log_base;
    tc.jobs = jobs;
    err << "train: " << fits.size() << " " << rd::to_string(kind) << " fit(s), feature mode "
        << ml::to_string(cfg.feature_mode) << ", split by " << ml::to_string(cfg.split_by) << '\n';
    const auto outcome = ml::train_predictor(feats, fits, kind, tc);

    json doc = ml::predictor_to_json(outcome.predictor);
    doc["tool"] = tool_string();
    doc["config"] = config_to_json(cfg);
    write_atomic(out_path, [&](std::ostream& o) { o << doc.dump() << '\n'; });

    if (report_path.empty()) {
        report_path = out_path;
        report_path += ".report.csv";
    }
    write_atomic(report_path, [&](std::ostream& o) {
        for (const auto& m : csv_metadata(cfg)) o << "# " << m << '\n';
        o << "# split_by: " << ml::to_string(cfg.split_by) << ", train rows: " << outcome.split.train.size()
          << ", test rows: " << outcome.split.test.size() << '\n';
        o << "model,param,source,pcc,srocc,r2,mae,nrmse\n";
        for (const auto& p : outcome.params) {
            std::string source = p.name + " relation";
            if (p.regressed)
                for (const auto& a : outcome.predictor.anchors)
                    if (a.name == p.name) source = join_ids(a.selected_features);
            o << rd::to_string(kind) << ',' << p.name << ',' << source << ',' << csv::format_double(p.test.pcc) << ','
              << csv::format_double(p.test.srocc) << ',' << csv::format_double(p.test.r2) << ','
              << csv::format_double(p.test.mae) << ',' << csv::format_double(p.test.nrmse) << '\n';
        }
    });
    err << "train: wrote " << out_path.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- predict

int cmd_predict(const PipelineConfig& cfg, const std::vector<std::string>& predictor_paths, const fs::path& feat_path,
                const fs::path& out_path, const fs::path& points_path, fs::path bd_path, const fs::path& timing_path,
                bool only_test, int timing_runs, std::ostream& err) {
    const auto feats = features::read_feature_csv(feat_path);
    std::map<std::string, rd::RdCurve> truth;
    if (!points_path.empty())
        for (auto& c : rd::read_rd_points(points_path)) truth[key_of(c.sequence_id, c.gop_index)] = std::move(c);

    json predictions = json::array(), summary = json::array();
    std::vector<std::pair<std::string, double>> timings;
    std::set<std::string> kinds_seen;
    bool partial = false;
    for (const auto& pp : predictor_paths) {
        const auto pred = ml::load_predictor(pp);
        const std::string kname(rd::to_string(pred.kind));
        if (!kinds_seen.insert(kname).second) throw ValidationError("two predictors of kind " + kname);

        std::vector<const features::FeatureVector*> batch;
        std::set<std::string> keep;
        if (only_test) {
            const auto& tk = pred.training_report.value("test_keys", json::array());
            for (const auto& k : tk) keep.insert(k.get<std::string>());
        }
        for (const auto& f : feats)
            if (!only_test || keep.count(key_of(f.sequence_id, f.gop_index))) batch.push_back(&f);

        std::vector<rd::RdFit> out(batch.size());
        std::vector<double> runs;
        for (int run = 0; run < std::max(timing_runs, 1); ++run) {
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < batch.size(); ++i) out[i] = ml::predict_rd_curve(pred, *batch[i]);
            runs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            if (timing_path.empty()) break;
        }
        std::sort(runs.begin(), runs.end());
        timings.emplace_back(kname, runs[runs.size() / 2]);

        std::vector<double> ps, rs;
        std::size_t failures = 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            json rec = rd::fit_to_json(out[i], batch[i]->sequence_id, batch[i]->gop_index);
            rec.erase("r2");
            rec.erase("rmse");
            auto it = truth.find(key_of(batch[i]->sequence_id, batch[i]->gop_index));
            if (it != truth.end()) {
                const auto predicted = bd::sample_curve(out[i], it->second);
                try {
                    const double p = bd::bd_psnr(it->second, predicted).value;
                    const double r = bd::bd_rate(it->second, predicted).value;
                    rec["bd_psnr_db"] = p;
                    rec["bd_rate_pct"] = r;
                    ps.push_back(p);
                    rs.push_back(r);
                } catch (const Error& e) {
                    rec["bd_error"] = e.what();
                    ++failures;
                }
            }
            predictions.push_back(std::move(rec));
        }
        if (!truth.empty()) {
            auto num = [](const std::vector<double>& v, bool sd) {
                if (v.size() < (sd ? 2u : 1u)) return json(nullptr);
                return json(sd ? sample_std(v) : mean(v));
            };
            std::vector<double> abs_rate;
            for (double r : rs) abs_rate.push_back(std::fabs(r));
            summary.push_back({{"kind", kname},
                               {"n", ps.size()},
                               {"failures", failures},
                               {"bd_psnr_mean", num(ps, false)},
                               {"bd_psnr_std", num(ps, true)},
                               {"bd_rate_mean", num(rs, false)},
                               {"bd_rate_std", num(rs, true)},
                               {"mean_abs_bd_rate", num(abs_rate, false)}});
            partial = partial || failures > 0;
        }
    }

    json doc = json_header(cfg);
    doc["predictions"] = predictions;
    if (!truth.empty()) doc["bd_summary"] = summary;
    write_json(out_path, doc);

    if (!truth.empty()) {
        if (bd_path.empty()) {
            bd_path = out_path;
            bd_path += ".bd.csv";
        }
        write_atomic(bd_path, [&](std::ostream& o) {
            for (const auto& m : csv_metadata(cfg)) o << "# " << m << '\n';
            o << "model,n,bd_psnr_mean_db,bd_psnr_std_db,bd_rate_mean_pct,bd_rate_std_pct,mean_abs_bd_rate_pct\n";
            auto f = [](const json& v) {
                return v.is_null() ? std::string("nan") : csv::format_double(v.get<double>());
            };
            for (const auto& s : summary)
                o << s["kind"].get<std::string>() << ',' << s["n"].get<std::size_t>() << ',' << f(s["bd_psnr_mean"])
                  << ',' << f(s["bd_psnr_std"]) << ',' << f(s["bd_rate_mean"]) << ',' << f(s["bd_rate_std"]) << ','
                  << f(s["mean_abs_bd_rate"]) << '\n';
        });
    }
    if (!timing_path.empty()) {
        double fastest = INFINITY;
        for (const auto& [k, t] : timings) fastest = std::min(fastest, t);
        write_atomic(timing_path, [&](std::ostream& o) {
            o << "# tool: " << tool_string() << "\n# wall-clock median of " << std::max(timing_runs, 1)
              << " run(s) of the full predict path\n";
            o << "model,median_seconds,rcr\n";
            for (const auto& [k, t] : timings)
                o << k << ',' << csv::format_double(t) << ','
                  << csv::format_double(fastest > 0.0 ? t / fastest : 1.0) << '\n';
        });
    }
    err << "predict: " << predictions.size() << " prediction(s)\n";
    return partial ? kPartial : kOk;
}

// ---------------------------------------------------------------- analyze

int cmd_analyze(const PipelineConfig& cfg, int jobs, const fs::path& feat_path, const fs::path& stats_path,
                const fs::path& manifest_path, const fs::path& out_dir, const std::string& method_arg,
                bool per_sequence, std::ostream& err) {
    const auto method = analysis::parse_method(method_arg);
    if (!fs::is_directory(out_dir)) throw IoError("output directory does not exist: " + out_dir.string());
    analysis::StatTable ft = analysis::feature_table(features::read_feature_csv(feat_path));

    std::map<std::string, std::string> classes;
    if (!manifest_path.empty()) {
        const json m = read_json(manifest_path);
        if (!m.is_array()) throw ParseError(manifest_path.string() + ": manifest must be a JSON array");
        for (const auto& e : m)
            if (e.contains("class") && e.contains("id")) classes[e.at("id").get<std::string>()] = e.at("class").get<std::string>();
    }

    std::optional<analysis::StatTable> et;
    if (!stats_path.empty()) {
        auto ing = analysis::ingest_encoder_stats(stats_path);
        for (const auto& w : ing.warnings) err << "warning: " << w << '\n';
        et = std::move(ing.table);
        for (std::size_t r = 0; r < et->rows(); ++r)
            if (!et->texture_class[r].empty()) classes.emplace(et->sequence_ids[r], et->texture_class[r]);
        bool keyed_by_gop = false;
        for (const auto& k : et->keys) keyed_by_gop = keyed_by_gop || k.find(':') != std::string::npos;
        if (per_sequence && keyed_by_gop) et = analysis::aggregate_by_sequence(*et);
        if (per_sequence || !keyed_by_gop) ft = analysis::aggregate_by_sequence(ft);
    } else if (per_sequence) {
        ft = analysis::aggregate_by_sequence(ft);
    }
    analysis::assign_classes(ft, classes);
    if (et) analysis::assign_classes(*et, classes);

    auto meta = csv_metadata(cfg);
    meta.push_back("missing data: pairwise deletion");
    auto emit_corr = [&](const analysis::CorrelationMatrix& m, const std::string& stem) {
        write_atomic(out_dir / (stem + ".csv"), [&](std::ostream& o) { analysis::write_correlation_csv(o, m, meta); });
        write_atomic(out_dir / (stem + ".svg"), [&](std::ostream& o) { analysis::write_correlation_svg(o, m); });
    };
    emit_corr(analysis::correlation_matrix(ft, ft, method, jobs), "feature_correlation");
    if (et) {
        const auto m = analysis::correlation_matrix(ft, *et, method, jobs);
        if (m.joined_rows < et->rows() || m.joined_rows < ft.rows())
            err << "warning: correlation joined " << m.joined_rows << " of " << ft.rows() << " feature rows and "
                << et->rows() << " statistic rows\n";
        emit_corr(m, "encoder_correlation");
    }
    auto emit_box = [&](const analysis::StatTable& t, const std::string& stem) {
        const auto boxes = analysis::box_summary(t);
        write_atomic(out_dir / (stem + ".csv"), [&](std::ostream& o) { analysis::write_box_csv(o, boxes, meta); });
        write_atomic(out_dir / (stem + ".svg"), [&](std::ostream& o) { analysis::write_box_svg(o, boxes); });
    };
    bool any_class = false;
    for (const auto& c : ft.texture_class) any_class = any_class || !c.empty();
    if (any_class) emit_box(ft, "feature_boxes");
    else err << "note: no texture classes known; box summaries skipped\n";
    if (et) {
        bool enc_class = false;
        for (const auto& c : et->texture_class) enc_class = enc_class || !c.empty();
        if (enc_class) emit_box(*et, "encoder_boxes");
    }
    err << "analyze: wrote outputs to " << out_dir.string() << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Texture features, RD model fitting and RD curve prediction for video", "texrd"};
    app.set_version_flag("--version", tool_string());
    app.require_subcommand(1);

    Shared sh;
    sh.jobs = default_jobs();

    // extract
    auto* ex = app.add_subcommand("extract", "per-GoP texture features from raw YUV sequences");
    std::string ex_manifest, ex_out, ex_report;
    Overrides ex_ov;
    ex->add_option("--manifest", ex_manifest, "video manifest JSON")->required();
    ex->add_option("--out", ex_out, "feature CSV")->required();
    ex->add_option("--report", ex_report, "substitution report JSON (default <out>.report.json)");
    ex_ov.add<int>(ex, "--gop-len", "GoP length", [](PipelineConfig& c, int v) { c.gop_len = v; });
    ex_ov.add<int>(ex, "--max-frames", "frames used per sequence", [](PipelineConfig& c, int v) { c.max_frames = v; });
    ex_ov.add<int>(ex, "--glcm-levels", "GLCM grey levels", [](PipelineConfig& c, int v) { c.features.glcm_levels = v; });
    ex_ov.add<int>(ex, "--ncc-window", "NCC template side", [](PipelineConfig& c, int v) { c.features.ncc.window = v; });
    ex_ov.add<int>(ex, "--ncc-stride", "NCC template step", [](PipelineConfig& c, int v) { c.features.ncc.stride = v; });
    ex_ov.add<int>(ex, "--ncc-search", "NCC search radius", [](PipelineConfig& c, int v) { c.features.ncc.search = v; });
    ex_ov.add<int>(ex, "--nlp-scales", "Laplacian pyramid scales", [](PipelineConfig& c, int v) { c.features.nlp.scales = v; });
    ex_ov.add<int>(ex, "--tc-block", "coherence tile side", [](PipelineConfig& c, int v) { c.features.tc.block = v; });
    ex_ov.add<int>(ex, "--flow-levels", "flow pyramid levels", [](PipelineConfig& c, int v) { c.features.flow.levels = v; });
    ex_ov.add<int>(ex, "--flow-window", "flow averaging window", [](PipelineConfig& c, int v) { c.features.flow.window = v; });
    add_shared(ex, sh);

    // fit
    auto* fi = app.add_subcommand("fit", "fit RD models to per-GoP rate/PSNR points");
    std::string fi_points, fi_kind = "all", fi_out;
    Overrides fi_ov;
    fi->add_option("--points", fi_points, "RD points CSV")->required();
    fi->add_option("--kind", fi_kind, "lin, poly2, poly3, exp or all");
    fi->add_option("--out", fi_out, "fit JSON")->required();
    add_shared(fi, sh);

    // bd
    auto* bdc = app.add_subcommand("bd", "Bjontegaard deltas between two sets of curves");
    std::string bd_ref, bd_test, bd_rates, bd_kind, bd_out;
    bool bd_mean = false;
    Overrides bd_ov;
    bdc->add_option("--reference", bd_ref, "RD points CSV or fit JSON")->required();
    bdc->add_option("--test", bd_test, "RD points CSV or fit JSON")->required();
    bdc->add_option("--rates", bd_rates, "RD points CSV whose rates are used to sample fitted models");
    bdc->add_option("--kind", bd_kind, "model kind to take from fit JSON inputs");
    bdc->add_flag("--mean-reference", bd_mean, "compare each test curve with its sequence's mean reference curve");
    bdc->add_option("--out", bd_out, "BD report CSV")->required();
    add_shared(bdc, sh);

    // train
    auto* tr = app.add_subcommand("train", "train an RD curve predictor");
    std::string tr_feat, tr_fits, tr_kind, tr_out, tr_report;
    Overrides tr_ov;
    tr->add_option("--features", tr_feat, "feature CSV")->required();
    tr->add_option("--fits", tr_fits, "fit JSON")->required();
    tr->add_option("--kind", tr_kind, "lin, poly2, poly3 or exp")->required();
    tr->add_option("--out", tr_out, "predictor JSON")->required();
    tr->add_option("--report", tr_report, "validation report CSV (default <out>.report.csv)");
    tr_ov.add<std::string>(tr, "--feature-mode", "rfe, paper or all",
                           [](PipelineConfig& c, const std::string& v) { c.feature_mode = ml::parse_feature_mode(v); });
    tr_ov.add<std::string>(tr, "--split-by", "gop or sequence",
                           [](PipelineConfig& c, const std::string& v) { c.split_by = ml::parse_split_by(v); });
    tr_ov.add<double>(tr, "--train-fraction", "training share of the rows", [](PipelineConfig& c, double v) { c.train_fraction = v; });
    tr_ov.add<int>(tr, "--trees", "forest size", [](PipelineConfig& c, int v) { c.forest.trees = v; });
    tr_ov.add<int>(tr, "--max-depth", "tree depth limit", [](PipelineConfig& c, int v) { c.forest.max_depth = v; });
    tr_ov.add<int>(tr, "--min-leaf", "minimum leaf size", [](PipelineConfig& c, int v) { c.forest.min_leaf = v; });
    tr_ov.add<int>(tr, "--rfe-trees", "forest size inside RFE", [](PipelineConfig& c, int v) { c.rfe.hyper.trees = v; });
    tr_ov.add<std::size_t>(tr, "--rfe-folds", "inner CV folds of RFE", [](PipelineConfig& c, std::size_t v) { c.rfe.folds = v; });
    tr_ov.add<double>(tr, "--relation-log-base", "log base assumed by the parameter relations",
                      [](PipelineConfig& c, double v) { c.relation_log_base = v; });
    add_shared(tr, sh);

    // predict
    auto* pr = app.add_subcommand("predict", "predict RD curves from features");
    std::vector<std::string> pr_pred;
    std::string pr_feat, pr_out, pr_points, pr_bd, pr_timing;
    bool pr_only_test = false;
    int pr_runs = 5;
    Overrides pr_ov;
    pr->add_option("--predictor", pr_pred, "predictor JSON (repeatable, one per model kind)")->required();
    pr->add_option("--features", pr_feat, "feature CSV")->required();
    pr->add_option("--out", pr_out, "prediction JSON")->required();
    pr->add_option("--points", pr_points, "ground-truth RD points for BD validation");
    pr->add_option("--bd-out", pr_bd, "BD summary CSV (default <out>.bd.csv)");
    pr->add_option("--timing", pr_timing, "relative complexity CSV");
    pr->add_option("--timing-runs", pr_runs, "timed repetitions")->check(CLI::Range(1, 100));
    pr->add_flag("--only-test", pr_only_test, "restrict to each predictor's held-out rows");
    add_shared(pr, sh);

    // analyze
    auto* an = app.add_subcommand("analyze", "correlation matrices and box summaries");
    std::string an_feat, an_stats, an_manifest, an_out, an_method = "pearson";
    bool an_seq = false;
    Overrides an_ov;
    an->add_option("--features", an_feat, "feature CSV")->required();
    an->add_option("--encoder-stats", an_stats, "encoder statistics CSV");
    an->add_option("--manifest", an_manifest, "video manifest with texture classes");
    an->add_option("--out-dir", an_out, "output directory")->required();
    an->add_option("--method", an_method, "pearson or spearman");
    an->add_flag("--per-sequence", an_seq, "average rows per sequence before correlating");
    add_shared(an, sh);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (ex->parsed())
            return cmd_extract(resolve(sh, ex_ov, ex), sh.jobs, ex_manifest, ex_out, ex_report, err);
        if (fi->parsed()) return cmd_fit(resolve(sh, fi_ov, fi), fi_points, fi_kind, fi_out, err);
        if (bdc->parsed())
            return cmd_bd(resolve(sh, bd_ov, bdc), bd_ref, bd_test, bd_rates, bd_kind, bd_mean, bd_out, err);
        if (tr->parsed()) return cmd_train(resolve(sh, tr_ov, tr), sh.jobs, tr_feat, tr_fits, tr_kind, tr_out, tr_report, err);
        if (pr->parsed())
            return cmd_predict(resolve(sh, pr_ov, pr), pr_pred, pr_feat, pr_out, pr_points, pr_bd, pr_timing, pr_only_test,
                               pr_runs, err);
        if (an->parsed())
            return cmd_analyze(resolve(sh, an_ov, an), sh.jobs, an_feat, an_stats, an_manifest, an_out, an_method, an_seq,
                               err);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace texrd::cli
