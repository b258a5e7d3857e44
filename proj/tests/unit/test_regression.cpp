#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "test_util.hpp"
#include "texrd/error.hpp"
#include "texrd/regression.hpp"

using namespace texrd;
using namespace texrd::ml;
using features::FeatureVector;
using features::kFeatureCount;

namespace {

Dataset noise_target_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    Dataset ds{Matrix(n, d), std::vector<double>(n), "y", {}};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = g(rng);
        ds.y[i] = ds.X(i, 0);
    }
    return ds;
}

// Synthetic GoP features; F1 in [0, 1] drives the generating model.
std::vector<FeatureVector> synthetic_features(std::size_t sequences, std::size_t gops, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<FeatureVector> out;
    for (std::size_t s = 0; s < sequences; ++s)
        for (std::size_t g = 0; g < gops; ++g) {
            FeatureVector fv;
            fv.sequence_id = "seq" + std::to_string(s);
            fv.gop_index = static_cast<int>(g);
            for (auto& v : fv.values) v = u(rng);
            out.push_back(fv);
        }
    return out;
}

std::vector<FitRecord> exp_fits(const std::vector<FeatureVector>& fv, bool constant = false) {
    std::vector<FitRecord> out;
    for (const auto& f : fv) {
        const double a = constant ? 33.0 : 20 + 10 * f.values[0];
        out.push_back({f.sequence_id, f.gop_index, {rd::RdModelKind::Exp, rd::relation_estimate(rd::RdModelKind::Exp, {{"alpha4", a}})}});
    }
    return out;
}

TrainConfig quick_config() {
    TrainConfig c;
    c.hyper = {40, 12, 3, 0};
    c.rfe.hyper = {15, 8, 3, 0};
    c.rfe.folds = 4;
    c.rfe.drop_fraction = 0.25;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_CASE("normalizer round trip and dropped features") {
    auto ds = noise_target_dataset(50, 4, 1);
    for (std::size_t i = 0; i < 50; ++i) ds.X(i, 2) = 5.0;
    auto n = Normalizer::fit(ds.X);
    CHECK(n.is_dropped(2));
    CHECK(n.dropped == std::vector<std::size_t>{2});
    for (std::size_t i = 0; i < 50; ++i) {
        auto z = n.normalize(ds.X.row(i));
        CHECK(z[2] == 0.0);
        auto back = n.denormalize(z);
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(back[j] - ds.X(i, j)) < 1e-12);
    }
    auto Z = n.normalize(ds.X);
    double m = 0, s = 0;
    for (std::size_t i = 0; i < 50; ++i) m += Z(i, 1);
    m /= 50;
    for (std::size_t i = 0; i < 50; ++i) s += (Z(i, 1) - m) * (Z(i, 1) - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::sqrt(s / 49) == doctest::Approx(1.0));
}

TEST_CASE("metrics") {
    std::vector<double> t{1, 2, 3, 4}, p{1, 2, 3, 5};
    auto m = evaluate(t, p);
    CHECK(m.mae == doctest::Approx(0.25));
    CHECK(m.nrmse == doctest::Approx(0.5 / 3));
    CHECK(m.r2 == doctest::Approx(1 - 1.0 / 5));
    CHECK(m.srocc == doctest::Approx(1.0));
    std::vector<double> c{2, 2, 2};
    auto mc = evaluate(c, c);
    CHECK(std::isnan(mc.pcc));
    CHECK(mc.mae == 0.0);
    CHECK(mc.nrmse == 0.0);
}

TEST_CASE("k-fold partition") {
    auto f = kfold_partition(100, 10, 3);
    REQUIRE(f.size() == 10);
    std::set<std::size_t> all;
    for (const auto& fold : f) {
        CHECK(fold.size() == 10);
        CHECK(std::is_sorted(fold.begin(), fold.end()));
        for (auto i : fold) CHECK(all.insert(i).second);
    }
    CHECK(all.size() == 100);
    auto g = kfold_partition(23, 5, 3);
    std::size_t lo = 100, hi = 0, tot = 0;
    for (const auto& fold : g) lo = std::min(lo, fold.size()), hi = std::max(hi, fold.size()), tot += fold.size();
    CHECK(hi - lo <= 1);
    CHECK(tot == 23);
    CHECK(kfold_partition(100, 10, 3) == f);
    CHECK(kfold_partition(100, 10, 4) != f);
}

TEST_CASE("cross validation with oracle injection and constant target") {
    auto ds = noise_target_dataset(60, 3, 2);
    // learner returns column 0, which equals the target
    Learner oracle = [](const Matrix&, std::span<const double>, const Matrix& Xte) {
        std::vector<double> out;
        for (std::size_t i = 0; i < Xte.rows; ++i) out.push_back(Xte(i, 0));
        return out;
    };
    auto r = cross_validate(ds, 5, 1, oracle);
    CHECK(r.folds.size() == 5);
    CHECK(r.aggregate.pcc == doctest::Approx(1.0));
    CHECK(r.aggregate.srocc == doctest::Approx(1.0));
    CHECK(r.aggregate.r2 == doctest::Approx(1.0));
    CHECK(r.aggregate.mae == 0.0);

    std::fill(ds.y.begin(), ds.y.end(), 4.0);
    auto c = cross_validate(ds, 5, 1, forest_learner({10, 4, 2, 0}, 1));
    for (const auto& m : c.folds) {
        CHECK(m.mae == 0.0);
        CHECK(m.nrmse == 0.0);
    }
    CHECK(c.excluded_folds.size() == 5);
}

TEST_CASE("RFE keeps the informative feature") {
    auto ds = noise_target_dataset(500, 10, 3);
    RfeConfig cfg{{30, 12, 5, 0}, 5, 0.1};
    auto r = rfe_select(ds, 9, cfg);
    CHECK(std::find(r.selected.begin(), r.selected.end(), 0u) != r.selected.end());
    REQUIRE(!r.ranking.empty());
    CHECK(r.ranking.front() == 0);
    CHECK(std::is_sorted(r.selected.begin(), r.selected.end()));

    // permutation-importance oracle agrees that column 0 matters most
    auto m = train_forest(ds.X, ds.y, {30, 12, 5, 0}, 4);
    auto base = predict_forest(m, ds.X);
    double base_mse = 0;
    for (std::size_t i = 0; i < 500; ++i) base_mse += (base[i] - ds.y[i]) * (base[i] - ds.y[i]);
    std::vector<double> increase;
    std::mt19937_64 rng(1);
    for (std::size_t j = 0; j < 10; ++j) {
        Matrix P = ds.X;
        std::vector<std::size_t> perm(500);
        for (std::size_t i = 0; i < 500; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < 500; ++i) P(i, j) = ds.X(perm[i], j);
        auto p = predict_forest(m, P);
        double mse = 0;
        for (std::size_t i = 0; i < 500; ++i) mse += (p[i] - ds.y[i]) * (p[i] - ds.y[i]);
        increase.push_back(mse - base_mse);
    }
    CHECK(std::max_element(increase.begin(), increase.end()) - increase.begin() == 0);
}

TEST_CASE("RFE with one feature and with duplicated columns") {
    auto one = noise_target_dataset(100, 1, 4);
    auto r1 = rfe_select(one, 1, {{10, 8, 3, 0}, 4, 0.1});
    CHECK(r1.selected == std::vector<std::size_t>{0});

    auto dup = noise_target_dataset(200, 1, 5);
    Dataset copies{Matrix(200, 4), dup.y, "y", {}};
    for (std::size_t i = 0; i < 200; ++i)
        for (std::size_t j = 0; j < 4; ++j) copies.X(i, j) = dup.X(i, 0);
    RfeConfig cfg{{20, 8, 3, 0}, 4, 0.25};
    auto rs = rfe_select(dup, 2, cfg);
    auto rc = rfe_select(copies, 2, cfg);
    CHECK(!rc.selected.empty());
    double single = rs.cv_mse.front().second;
    double best = 1e300;
    for (const auto& [k, e] : rc.cv_mse) best = std::min(best, e);
    CHECK(best == doctest::Approx(single).epsilon(0.25));
}

TEST_CASE("split rows") {
    std::vector<std::string> groups;
    for (int s = 0; s < 20; ++s)
        for (int g = 0; g < 5; ++g) groups.push_back("s" + std::to_string(s));
    auto gop = split_rows(groups, 0.8, SplitBy::Gop, 1);
    CHECK(gop.train.size() == 80);
    CHECK(gop.test.size() == 20);
    auto seq = split_rows(groups, 0.8, SplitBy::Sequence, 1);
    std::set<std::string> tr, te;
    for (auto i : seq.train) tr.insert(groups[i]);
    for (auto i : seq.test) te.insert(groups[i]);
    for (const auto& g : te) CHECK(tr.count(g) == 0);
    CHECK(seq.train.size() + seq.test.size() == 100);
    CHECK(te.size() == 4);
    CHECK(parse_split_by("sequence") == SplitBy::Sequence);
    CHECK_THROWS_AS(parse_split_by("random"), ValidationError);
}

TEST_CASE("fixed feature presets") {
    auto e = fixed_feature_preset(rd::RdModelKind::Exp, 0);
    CHECK(e == std::vector<std::size_t>{0, 3, 14, 21, 23, 25, 27, 29, 31, 32, 33, 34, 36});
    auto a3 = fixed_feature_preset(rd::RdModelKind::Poly3, 0);
    CHECK(a3 == std::vector<std::size_t>{0, 2, 3, 14, 21, 23, 25, 27, 29, 31, 32, 33, 34});
    auto b3 = fixed_feature_preset(rd::RdModelKind::Poly3, 1);
    CHECK(b3 == std::vector<std::size_t>{0, 3, 14, 21, 23, 25, 27, 29, 31, 32});
    auto g3 = fixed_feature_preset(rd::RdModelKind::Poly3, 2);
    CHECK(g3 == std::vector<std::size_t>{0, 3, 4, 14, 21, 23, 25, 27, 29, 31, 32, 33, 34, 36});
    CHECK_THROWS(fixed_feature_preset(rd::RdModelKind::Exp, 1));
}

TEST_CASE("anchor counts per model kind") {
    auto fv = synthetic_features(20, 4, 6);
    auto cfg = quick_config();
    cfg.features = FeatureMode::All;
    auto e = train_predictor(fv, exp_fits(fv), rd::RdModelKind::Exp, cfg);
    CHECK(e.predictor.anchors.size() == 1);
    CHECK(e.params.size() == 2);
    CHECK(e.params[0].regressed);
    CHECK_FALSE(e.params[1].regressed);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<FitRecord> p3;
    for (const auto& f : fv)
        p3.push_back({f.sequence_id, f.gop_index, {rd::RdModelKind::Poly3, {0.1 * u(rng), u(rng), 5 + u(rng), 40 + u(rng)}}});
    auto p = train_predictor(fv, p3, rd::RdModelKind::Poly3, cfg);
    CHECK(p.predictor.anchors.size() == 3);
    CHECK(p.params.size() == 4);
    CHECK_FALSE(p.params[3].regressed);
}

TEST_CASE("functional dependence on F1 is recovered") {
    auto fv = synthetic_features(50, 8, 7);
    auto out = train_predictor(fv, exp_fits(fv), rd::RdModelKind::Exp, quick_config());
    CHECK(out.params[0].test.r2 > 0.95);
    const auto& sel = out.predictor.anchors[0].selected_features;
    CHECK(std::find(sel.begin(), sel.end(), 0u) != sel.end());
}

TEST_CASE("constant target and determinism of predictions") {
    auto fv = synthetic_features(15, 4, 8);
    auto cfg = quick_config();
    auto out = train_predictor(fv, exp_fits(fv, true), rd::RdModelKind::Exp, cfg);
    auto f = predict_rd_curve(out.predictor, fv[0]);
    CHECK(f.params[0] == 33.0);
    CHECK(f.params[1] == rd::relation_estimate(rd::RdModelKind::Exp, {{"alpha4", 33.0}})[1]);
    CHECK(std::isnan(f.r_squared));
    auto g = predict_rd_curve(out.predictor, fv[0]);
    CHECK(f.params == g.params);

    auto bad = fv[0];
    bad.values[5] = std::nan("");
    CHECK_THROWS_AS(predict_rd_curve(out.predictor, bad), ValidationError);
}

TEST_CASE("predictor serialization and training determinism") {
    auto fv = synthetic_features(15, 4, 9);
    auto fits = exp_fits(fv);
    auto cfg = quick_config();
    auto a = train_predictor(fv, fits, rd::RdModelKind::Exp, cfg);
    cfg.jobs = 4;
    auto b = train_predictor(fv, fits, rd::RdModelKind::Exp, cfg);
    CHECK(predictor_to_json(a.predictor).dump() == predictor_to_json(b.predictor).dump());

    testutil::TempDir dir("reg");
    save_predictor(a.predictor, dir / "p.json");
    auto back = load_predictor(dir / "p.json");
    for (const auto& f : fv) CHECK(predict_rd_curve(back, f).params == predict_rd_curve(a.predictor, f).params);

    auto j = predictor_to_json(a.predictor);
    CHECK(j["version"] == 1);
    CHECK(j["rd_kind"] == "Exp");
    j["parameters"][0]["name"] = "beta4";
    CHECK_THROWS(predictor_from_json(j));
}

TEST_CASE("join and size errors") {
    auto fv = synthetic_features(10, 4, 10);
    auto fits = exp_fits(fv);
    auto cfg = quick_config();
    CHECK_THROWS_AS(train_predictor(fv, fits, rd::RdModelKind::Exp, cfg), ValidationError);  // 40 rows
    auto more = synthetic_features(15, 4, 10);
    auto mfits = exp_fits(more);
    mfits.push_back({"ghost", 0, mfits[0].fit});
    CHECK_THROWS_AS(train_predictor(more, mfits, rd::RdModelKind::Exp, cfg), ValidationError);
    auto wrong = exp_fits(more);
    CHECK_THROWS_AS(train_predictor(more, wrong, rd::RdModelKind::Lin, cfg), ValidationError);
}
