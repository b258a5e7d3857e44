#include "texrd/regression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "texrd/error.hpp"
#include "texrd/stats.hpp"

namespace texrd::ml {

void Dataset::validate(std::size_t min_rows) const {
    if (X.rows < min_rows)
        throw ValidationError("dataset has " + std::to_string(X.rows) + " rows, need at least " +
                              std::to_string(min_rows));
    if (y.size() != X.rows) throw ValidationError("dataset target length mismatch");
    if (!groups.empty() && groups.size() != X.rows) throw ValidationError("dataset group length mismatch");
    for (double v : X.data)
        if (!std::isfinite(v)) throw ValidationError("dataset contains a non-finite feature");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("dataset contains a non-finite target");
}

Normalizer Normalizer::fit(const Matrix& X) {
    if (X.rows == 0) throw ValidationError("normalizer: empty matrix");
    Normalizer n;
    n.means.resize(X.cols);
    n.stds.resize(X.cols);
    std::vector<double> col(X.rows);
    for (std::size_t f = 0; f < X.cols; ++f) {
        for (std::size_t r = 0; r < X.rows; ++r) col[r] = X(r, f);
        n.means[f] = mean(col);
        const double s = sample_std(col);
        if (!(s > 1e-12 * std::max(1.0, std::fabs(n.means[f])))) {
            n.stds[f] = 1.0;
            n.dropped.push_back(f);
        } else {
            n.stds[f] = s;
        }
    }
    return n;
}

bool Normalizer::is_dropped(std::size_t f) const {
    return std::binary_search(dropped.begin(), dropped.end(), f);
}

std::vector<double> Normalizer::normalize(std::span<const double> x) const {
    if (x.size() != means.size()) throw ValidationError("normalizer: dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) z[f] = is_dropped(f) ? 0.0 : (x[f] - means[f]) / stds[f];
    return z;
}

Matrix Normalizer::normalize(const Matrix& X) const {
    Matrix Z(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        const auto z = normalize(X.row(r));
        std::copy(z.begin(), z.end(), Z.data.begin() + static_cast<std::ptrdiff_t>(r * X.cols));
    }
    return Z;
}

std::vector<double> Normalizer::denormalize(std::span<const double> z) const {
    if (z.size() != means.size()) throw ValidationError("normalizer: dimension mismatch");
    std::vector<double> x(z.size());
    for (std::size_t f = 0; f < z.size(); ++f) x[f] = is_dropped(f) ? means[f] : z[f] * stds[f] + means[f];
    return x;
}

Metrics evaluate(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size() || truth.empty()) throw ValidationError("evaluate: size mismatch or empty");
    const std::size_t n = truth.size();
    Metrics m;
    double ae = 0.0, se = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = truth[i] - pred[i];
        ae += std::fabs(r);
        se += r * r;
    }
    m.mae = ae / static_cast<double>(n);
    const double rmse = std::sqrt(se / static_cast<double>(n));
    const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
    const double range = *hi - *lo;
    if (rmse == 0.0) m.nrmse = 0.0;
    else m.nrmse = range > 0.0 ? rmse / range : std::numeric_limits<double>::quiet_NaN();

    if (sample_std(truth) > 0.0) {
        const double ym = mean(truth);
        double tot = 0.0;
        for (double t : truth) tot += (t - ym) * (t - ym);
        m.r2 = 1.0 - se / tot;
        if (sample_std(pred) > 0.0) {
            m.pcc = pearson(truth, pred);
            m.srocc = spearman(truth, pred);
        }
    }
    return m;
}

Learner forest_learner(const ForestHyper& hyper, std::uint64_t seed, int jobs) {
    return [hyper, seed, jobs](const Matrix& Xtr, std::span<const double> ytr, const Matrix& Xte) {
        const auto model = train_forest(Xtr, ytr, hyper, seed, jobs);
        return predict_forest(model, Xte);
    };
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (n < folds) throw ValidationError("cross-validation needs at least as many rows as folds");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::size_t>> out(folds);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t size = n / folds + (k < n % folds ? 1 : 0);
        out[k].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                      perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
        std::sort(out[k].begin(), out[k].end());
        pos += size;
    }
    return out;
}

namespace {

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& sorted_subset) {
    std::vector<std::size_t> out;
    out.reserve(n - sorted_subset.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (k < sorted_subset.size() && sorted_subset[k] == i) ++k;
        else out.push_back(i);
    }
    return out;
}

std::vector<double> take(std::span<const double> v, std::span<const std::size_t> idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

double mean_defined(const std::vector<Metrics>& f, double Metrics::*field) {
    double s = 0.0;
    int c = 0;
    for (const auto& m : f)
        if (std::isfinite(m.*field)) {
            s += m.*field;
            ++c;
        }
    return c ? s / c : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

CvReport cross_validate(const Dataset& d, std::size_t folds, std::uint64_t seed, const Learner& learner) {
    d.validate(folds);
    CvReport rep;
    rep.fold_rows = kfold_partition(d.X.rows, folds, seed);
    for (std::size_t k = 0; k < folds; ++k) {
        const auto& test = rep.fold_rows[k];
        const auto train = complement(d.X.rows, test);
        const auto ytr = take(d.y, train);
        const auto pred = learner(d.X.select_rows(train), ytr, d.X.select_rows(test));
        const auto truth = take(d.y, test);
        const Metrics m = evaluate(truth, pred);
        if (!std::isfinite(m.pcc) && sample_std(truth) == 0.0) rep.excluded_folds.push_back(k);
        rep.folds.push_back(m);
    }
    rep.aggregate.pcc = mean_defined(rep.folds, &Metrics::pcc);
    rep.aggregate.srocc = mean_defined(rep.folds, &Metrics::srocc);
    rep.aggregate.r2 = mean_defined(rep.folds, &Metrics::r2);
    rep.aggregate.mae = mean_defined(rep.folds, &Metrics::mae);
    rep.aggregate.nrmse = mean_defined(rep.folds, &Metrics::nrmse);
    return rep;
}

RfeResult rfe_select(const Dataset& d, std::uint64_t seed, const RfeConfig& cfg, int jobs) {
    d.validate(cfg.folds);
    if (d.X.cols == 0) throw ValidationError("rfe_select: no features");
    if (!(cfg.drop_fraction > 0.0 && cfg.drop_fraction < 1.0))
        throw ValidationError("rfe drop fraction must be in (0, 1)");

    const auto parts = kfold_partition(d.X.rows, cfg.folds, seed);
    std::vector<std::size_t> current(d.X.cols);
    std::iota(current.begin(), current.end(), std::size_t{0});
    std::vector<std::size_t> eliminated;  // worst first
    RfeResult res;
    double best = std::numeric_limits<double>::infinity();

    for (std::uint64_t step = 0;; ++step) {
        const Matrix Xs = d.X.select_cols(current);
        double se = 0.0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const auto train = complement(d.X.rows, parts[k]);
            const auto model =
                train_forest(Xs.select_rows(train), take(d.y, train), cfg.hyper, derive_seed(seed, 2 * step + 1), jobs);
            for (auto i : parts[k]) {
                const double r = d.y[i] - predict_forest(model, Xs.row(i));
                se += r * r;
            }
        }
        const double mse = se / static_cast<double>(d.X.rows);
        res.cv_mse.emplace_back(current.size(), mse);
        if (mse <= best) {
            best = mse;
            res.selected = current;
        }

        const auto full = train_forest(Xs, d.y, cfg.hyper, derive_seed(seed, 2 * step + 2), jobs);
        std::vector<std::size_t> order(current.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return full.importance[a] < full.importance[b]; });
        if (current.size() == 1) {
            eliminated.push_back(current[0]);
            break;
        }
        const auto drop = std::min(current.size() - 1,
                                   static_cast<std::size_t>(std::ceil(cfg.drop_fraction * static_cast<double>(current.size()))));
        std::vector<bool> gone(current.size(), false);
        for (std::size_t k = 0; k < drop; ++k) {
            gone[order[k]] = true;
            eliminated.push_back(current[order[k]]);
        }
        std::vector<std::size_t> next;
        for (std::size_t k = 0; k < current.size(); ++k)
            if (!gone[k]) next.push_back(current[k]);
        current = std::move(next);
    }
    res.ranking.assign(eliminated.rbegin(), eliminated.rend());
    std::sort(res.selected.begin(), res.selected.end());
    return res;
}

std::string_view to_string(SplitBy s) { return s == SplitBy::Gop ? "gop" : "sequence"; }

SplitBy parse_split_by(std::string_view s) {
    if (s == "gop") return SplitBy::Gop;
    if (s == "sequence") return SplitBy::Sequence;
    throw ValidationError("split mode must be 'gop' or 'sequence'");
}

Split split_rows(std::span<const std::string> groups, double train_fraction, SplitBy by, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train fraction must be in (0, 1)");
    const std::size_t n = groups.size();
    if (n < 2) throw ValidationError("split needs at least 2 rows");
    std::mt19937_64 rng(seed);
    Split s;
    if (by == SplitBy::Gop) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        auto ntr = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
        ntr = std::clamp<std::size_t>(ntr, 1, n - 1);
        s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(ntr));
        s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(ntr), perm.end());
    } else {
        std::vector<std::string> ids(std::set<std::string>(groups.begin(), groups.end()).size());
        {
            std::set<std::string> u(groups.begin(), groups.end());
            std::copy(u.begin(), u.end(), ids.begin());
        }
        if (ids.size() < 2) throw ValidationError("split by sequence needs at least 2 sequences");
        std::shuffle(ids.begin(), ids.end(), rng);
        auto ntr = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
        ntr = std::clamp<std::size_t>(ntr, 1, ids.size() - 1);
        const std::set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(ntr));
        for (std::size_t i = 0; i < n; ++i) (train_ids.count(groups[i]) ? s.train : s.test).push_back(i);
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

FeatureMode parse_feature_mode(std::string_view s) {
    if (s == "rfe") return FeatureMode::Rfe;
    if (s == "paper") return FeatureMode::Preset;
    if (s == "all") return FeatureMode::All;
    throw ValidationError("feature mode must be 'rfe', 'paper' or 'all'");
}

std::string_view to_string(FeatureMode m) {
    switch (m) {
        case FeatureMode::Rfe: return "rfe";
        case FeatureMode::Preset: return "paper";
        case FeatureMode::All: return "all";
    }
    return "?";
}

std::vector<std::size_t> fixed_feature_preset(rd::RdModelKind kind, std::size_t param_index) {
    auto f = [](std::initializer_list<int> ids) {
        std::vector<std::size_t> v;
        for (int i : ids) v.push_back(static_cast<std::size_t>(i - 1));
        return v;
    };
    const auto common = f({1, 4, 15, 22, 24, 26, 28, 30, 32, 33, 34, 35, 37});
    using K = rd::RdModelKind;
    if ((kind == K::Lin && param_index == 0) || (kind == K::Poly2 && param_index == 1) ||
        (kind == K::Exp && param_index == 0))
        return common;
    if (kind == K::Poly3) {
        if (param_index == 0) return f({1, 3, 4, 15, 22, 24, 26, 28, 30, 32, 33, 34, 35});
        if (param_index == 1) return f({1, 4, 15, 22, 24, 26, 28, 30, 32, 33});
        if (param_index == 2) return f({1, 4, 5, 15, 22, 24, 26, 28, 30, 32, 33, 34, 35, 37});
    }
    throw ValidationError("no feature preset for " + rd::param_names(kind).at(param_index) +
                          " (not an anchor parameter)");
}

nlohmann::json metrics_to_json(const Metrics& m) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"pcc", num(m.pcc)}, {"srocc", num(m.srocc)}, {"r2", num(m.r2)}, {"mae", num(m.mae)},
            {"nrmse", num(m.nrmse)}};
}

namespace {

nlohmann::json feature_ids(const std::vector<std::size_t>& idx) {
    auto a = nlohmann::json::array();
    for (auto i : idx) a.push_back(features::feature_id(i));
    return a;
}

}  // namespace

TrainOutcome train_predictor(std::span<const features::FeatureVector> feats, std::span<const FitRecord> fits,
                             rd::RdModelKind kind, const TrainConfig& cfg) {
    std::map<std::pair<std::string, int>, std::size_t> by_key;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        if (!by_key.emplace(std::make_pair(feats[i].sequence_id, feats[i].gop_index), i).second)
            throw ValidationError("duplicate feature row " + feats[i].sequence_id + "/" +
                                  std::to_string(feats[i].gop_index));
    }
    TrainOutcome out;
    const std::size_t nf = features::kFeatureCount;
    std::vector<std::size_t> feat_row;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].fit.kind != kind)
            throw ValidationError("fit for " + fits[i].sequence_id + "/" + std::to_string(fits[i].gop_index) +
                                  " is " + std::string(rd::to_string(fits[i].fit.kind)) + ", expected " +
                                  std::string(rd::to_string(kind)));
        auto it = by_key.find({fits[i].sequence_id, fits[i].gop_index});
        if (it == by_key.end())
            throw ValidationError("join mismatch: no features for " + fits[i].sequence_id + "/" +
                                  std::to_string(fits[i].gop_index));
        out.joined_rows.push_back(i);
        feat_row.push_back(it->second);
    }
    const std::size_t n = out.joined_rows.size();
    if (n < 50) throw ValidationError("training needs at least 50 joined rows, got " + std::to_string(n));

    Matrix X(n, nf);
    std::vector<std::string> groups(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& fv = feats[feat_row[r]];
        for (std::size_t f = 0; f < nf; ++f) {
            if (!std::isfinite(fv.values[f]))
                throw ValidationError("non-finite feature " + features::feature_id(f) + " for " + fv.sequence_id);
            X(r, f) = fv.values[f];
        }
        groups[r] = fv.sequence_id;
    }
    out.split = split_rows(groups, cfg.train_fraction, cfg.split_by, derive_seed(cfg.seed, 0));
    const auto& tr = out.split.train;
    const auto& te = out.split.test;

    auto& P = out.predictor;
    P.kind = kind;
    P.relation_log_base = cfg.relation_log_base;
    P.normalizer = Normalizer::fit(X.select_rows(tr));
    const Matrix Z = P.normalizer.normalize(X);
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < nf; ++f)
        if (!P.normalizer.is_dropped(f)) candidates.push_back(f);
    if (candidates.empty()) throw ValidationError("every feature is constant on the training split");

    const auto names = rd::param_names(kind);
    const auto anchors = rd::anchor_indices(kind);
    nlohmann::json report_params = nlohmann::json::array();
    std::vector<std::vector<double>> truth(names.size()), anchor_pred(anchors.size());

    for (std::size_t a = 0; a < anchors.size(); ++a) {
        const std::size_t pi = anchors[a];
        std::vector<double> y(n);
        for (std::size_t r = 0; r < n; ++r) y[r] = fits[out.joined_rows[r]].fit.params[pi];
        const auto ytr = take(y, tr);

        AnchorModel am;
        am.param_index = pi;
        am.name = names[pi];
        nlohmann::json rfe_json;
        switch (cfg.features) {
            case FeatureMode::All: am.selected_features = candidates; break;
            case FeatureMode::Preset:
                for (auto f : fixed_feature_preset(kind, pi))
                    if (!P.normalizer.is_dropped(f)) am.selected_features.push_back(f);
                if (am.selected_features.empty())
                    throw ValidationError("every preset feature for " + am.name + " is constant");
                break;
            case FeatureMode::Rfe: {
                Dataset d;
                d.X = Z.select_rows(tr).select_cols(candidates);
                d.y = ytr;
                d.target_name = am.name;
                const auto rfe = rfe_select(d, derive_seed(cfg.seed, 10 + pi), cfg.rfe, cfg.jobs);
                for (auto c : rfe.selected) am.selected_features.push_back(candidates[c]);
                std::vector<std::size_t> rank;
                for (auto c : rfe.ranking) rank.push_back(candidates[c]);
                rfe_json["ranking"] = feature_ids(rank);
                auto curve = nlohmann::json::array();
                for (const auto& [k, mse] : rfe.cv_mse) curve.push_back({{"features", k}, {"cv_mse", mse}});
                rfe_json["cv"] = curve;
                break;
            }
        }
        const Matrix Xsel = Z.select_cols(am.selected_features);
        am.forest = train_forest(Xsel.select_rows(tr), ytr, cfg.hyper, derive_seed(cfg.seed, 100 + pi), cfg.jobs);
        anchor_pred[a] = predict_forest(am.forest, Xsel.select_rows(te));
        nlohmann::json pj{{"name", am.name}, {"selected_features", feature_ids(am.selected_features)}};
        if (!rfe_json.is_null()) pj["rfe"] = rfe_json;
        report_params.push_back(pj);
        P.anchors.push_back(std::move(am));
    }

    // Held-out evaluation of every parameter, relation-derived ones included.
    std::vector<std::vector<double>> pred(names.size());
    for (std::size_t r = 0; r < te.size(); ++r) {
        std::vector<double> an;
        for (std::size_t a = 0; a < anchors.size(); ++a) an.push_back(anchor_pred[a][r]);
        const auto full = rd::relation_complete(kind, an, cfg.relation_log_base);
        for (std::size_t p = 0; p < names.size(); ++p) {
            pred[p].push_back(full[p]);
            truth[p].push_back(fits[out.joined_rows[te[r]]].fit.params[p]);
        }
    }
    nlohmann::json eval = nlohmann::json::array();
    for (std::size_t p = 0; p < names.size(); ++p) {
        ParamReport pr;
        pr.name = names[p];
        pr.regressed = std::find(anchors.begin(), anchors.end(), p) != anchors.end();
        pr.test = evaluate(truth[p], pred[p]);
        eval.push_back({{"name", pr.name},
                        {"source", pr.regressed ? "regression" : "relation"},
                        {"test", metrics_to_json(pr.test)}});
        out.params.push_back(pr);
    }

    nlohmann::json test_keys = nlohmann::json::array();
    for (auto r : te) {
        const auto& rec = fits[out.joined_rows[r]];
        test_keys.push_back(rec.sequence_id + ":" + std::to_string(rec.gop_index));
    }
    P.training_report = {{"split_by", std::string(to_string(cfg.split_by))},
                         {"train_fraction", cfg.train_fraction},
                         {"train_rows", tr.size()},
                         {"test_rows", te.size()},
                         {"feature_mode", std::string(to_string(cfg.features))},
                         {"seed", cfg.seed},
                         {"anchors", report_params},
                         {"test_keys", test_keys},
                         {"evaluation", eval}};
    return out;
}

rd::RdFit predict_rd_curve(const TrainedPredictor& p, const features::FeatureVector& fv) {
    for (std::size_t f = 0; f < fv.values.size(); ++f)
        if (!std::isfinite(fv.values[f]))
            throw ValidationError("non-finite feature " + features::feature_id(f) + " for " + fv.sequence_id + "/" +
                                  std::to_string(fv.gop_index));
    const auto z = p.normalizer.normalize(fv.values);
    std::vector<double> anchors;
    for (const auto& am : p.anchors) {
        std::vector<double> x;
        x.reserve(am.selected_features.size());
        for (auto f : am.selected_features) x.push_back(z[f]);
        anchors.push_back(predict_forest(am.forest, x));
    }
    rd::RdFit fit;
    fit.kind = p.kind;
    fit.params = rd::relation_complete(p.kind, anchors, p.relation_log_base);
    return fit;
}

nlohmann::json predictor_to_json(const TrainedPredictor& p) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& am : p.anchors)
        params.push_back({{"name", am.name},
                          {"param_index", am.param_index},
                          {"selected_features", feature_ids(am.selected_features)},
                          {"forest", forest_to_json(am.forest)}});
    return {{"version", 1},
            {"rd_kind", std::string(rd::to_string(p.kind))},
            {"relation_log_base", p.relation_log_base},
            {"normalizer", {{"means", p.normalizer.means}, {"stds", p.normalizer.stds}, {"dropped", feature_ids(p.normalizer.dropped)}}},
            {"parameters", params},
            {"training_report", p.training_report}};
}

TrainedPredictor predictor_from_json(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != 1) throw ValidationError("unsupported predictor version");
        TrainedPredictor p;
        p.kind = rd::parse_kind(j.at("rd_kind").get<std::string>());
        p.relation_log_base = j.at("relation_log_base").get<double>();
        const auto& nz = j.at("normalizer");
        p.normalizer.means = nz.at("means").get<std::vector<double>>();
        p.normalizer.stds = nz.at("stds").get<std::vector<double>>();
        if (p.normalizer.means.size() != features::kFeatureCount || p.normalizer.stds.size() != features::kFeatureCount)
            throw ValidationError("normalizer must have 44 entries");
        for (const auto& id : nz.at("dropped")) p.normalizer.dropped.push_back(features::feature_index(id.get<std::string>()));
        std::sort(p.normalizer.dropped.begin(), p.normalizer.dropped.end());
        for (const auto& pj : j.at("parameters")) {
            AnchorModel am;
            am.name = pj.at("name").get<std::string>();
            am.param_index = pj.at("param_index").get<std::size_t>();
            for (const auto& id : pj.at("selected_features"))
                am.selected_features.push_back(features::feature_index(id.get<std::string>()));
            am.forest = forest_from_json(pj.at("forest"));
            if (am.forest.dim != am.selected_features.size())
                throw ValidationError("forest dimension does not match the selected features of " + am.name);
            p.anchors.push_back(std::move(am));
        }
        const auto expect = rd::anchor_indices(p.kind);
        if (p.anchors.size() != expect.size())
            throw ValidationError("predictor anchor set does not match " + std::string(rd::to_string(p.kind)));
        const auto names = rd::param_names(p.kind);
        for (std::size_t a = 0; a < expect.size(); ++a) {
            if (p.anchors[a].param_index != expect[a]) throw ValidationError("predictor anchor order mismatch");
            if (p.anchors[a].name != names[expect[a]])
                throw ValidationError("predictor parameter '" + p.anchors[a].name + "' does not match " +
                                      names[expect[a]]);
        }
        p.training_report = j.value("training_report", nlohmann::json::object());
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("predictor: ") + e.what());
    }
}

void save_predictor(const TrainedPredictor& p, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << predictor_to_json(p).dump() << '\n';
    if (!f) throw IoError("write failed: " + path.string());
}

TrainedPredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return predictor_from_json(j);
}

}  // namespace texrd::ml
