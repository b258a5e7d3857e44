#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include "test_util.hpp"
#include "texrd/error.hpp"
#include "texrd/rd_model.hpp"

using namespace texrd;
using namespace texrd::rd;

namespace {

const std::vector<double> kRates{0.02, 0.05, 0.11, 0.27, 0.6};

RdCurve make_curve(const std::vector<double>& rates, const std::function<double(double)>& q) {
    RdCurve c{"s", 0, {}};
    int qp = 42;
    for (double r : rates) {
        c.points.push_back({qp, r, q(r)});
        qp -= 5;
    }
    return c;
}

double sse(const RdFit& f, const RdCurve& c) {
    double s = 0;
    for (const auto& p : c.points) {
        const double e = eval_rd(f, p.rate) - p.psnr;
        s += e * e;
    }
    return s;
}

// OLS via normal equations, Gaussian elimination with partial pivoting in long double.
std::vector<double> normal_equations(const RdCurve& c, int degree) {
    const int m = degree + 1;
    std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0));
    for (const auto& p : c.points) {
        const long double x = std::log10(static_cast<long double>(p.rate));
        std::vector<long double> row(m);
        for (int j = 0; j < m; ++j) row[j] = std::pow(x, static_cast<long double>(degree - j));
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) a[i][j] += row[i] * row[j];
            a[i][m] += row[i] * p.psnr;
        }
    }
    for (int k = 0; k < m; ++k) {
        int piv = k;
        for (int i = k + 1; i < m; ++i)
            if (std::fabs(a[i][k]) > std::fabs(a[piv][k])) piv = i;
        std::swap(a[k], a[piv]);
        for (int i = k + 1; i < m; ++i) {
            const long double f = a[i][k] / a[k][k];
            for (int j = k; j <= m; ++j) a[i][j] -= f * a[k][j];
        }
    }
    std::vector<double> out(m);
    for (int i = m - 1; i >= 0; --i) {
        long double s = a[i][m];
        for (int j = i + 1; j < m; ++j) s -= a[i][j] * out[j];
        out[i] = static_cast<double>(s / a[i][i]);
    }
    return out;
}

}  // namespace

TEST_CASE("model kinds") {
    CHECK(param_count(RdModelKind::Lin) == 2);
    CHECK(param_count(RdModelKind::Poly2) == 3);
    CHECK(param_count(RdModelKind::Poly3) == 4);
    CHECK(param_count(RdModelKind::Exp) == 2);
    CHECK(parse_kind("poly3") == RdModelKind::Poly3);
    CHECK(parse_kind("EXP") == RdModelKind::Exp);
    CHECK_THROWS_AS(parse_kind("cubic"), ValidationError);
    CHECK(param_names(RdModelKind::Poly3) == std::vector<std::string>{"alpha3", "beta3", "gamma3", "delta3"});
    CHECK(anchor_indices(RdModelKind::Poly3) == std::vector<std::size_t>{0, 1, 2});
    CHECK(anchor_indices(RdModelKind::Exp) == std::vector<std::size_t>{0});
}

TEST_CASE("exact Lin recovery") {
    auto c = make_curve(kRates, [](double r) { return -5 * std::log10(r) + 40; });
    auto f = fit_rd(c, RdModelKind::Lin);
    CHECK(std::abs(f.params[0] + 5) < 1e-9);
    CHECK(std::abs(f.params[1] - 40) < 1e-9);
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.rmse < 1e-9);
}

TEST_CASE("exact Exp recovery") {
    auto c = make_curve(kRates, [](double r) { return 30 * std::exp(0.05 * std::log10(r)); });
    auto f = fit_rd(c, RdModelKind::Exp);
    CHECK(std::abs(f.params[0] - 30) < 1e-6);
    CHECK(std::abs(f.params[1] - 0.05) < 1e-6);
}

TEST_CASE("noisy Poly3 fits match the normal-equations oracle") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> noise(0.0, 0.04);
    std::vector<double> rates;
    for (int i = 0; i < 40; ++i) rates.push_back(0.01 * std::pow(1.12, i));
    double rmse_sum = 0;
    for (int k = 0; k < 20; ++k) {
        const double a = 0.2 + 0.01 * k, b = 1.1, g = 6.0 - 0.1 * k, d = 41.0;
        auto c = make_curve(rates, [&](double r) {
            const double x = std::log10(r);
            return a * x * x * x + b * x * x + g * x + d + noise(rng);
        });
        auto f = fit_rd(c, RdModelKind::Poly3);
        auto ref = normal_equations(c, 3);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(f.params[i] - ref[i]) < 1e-8 * std::max(1.0, std::abs(ref[i])));
        rmse_sum += f.rmse;
    }
    const double mean_rmse = rmse_sum / 20;
    CHECK(mean_rmse > 0.02);
    CHECK(mean_rmse < 0.06);
}

TEST_CASE("eval examples") {
    CHECK(eval_rd({RdModelKind::Lin, {-5, 40}}, 1.0) == 40.0);
    CHECK(eval_rd({RdModelKind::Poly2, {0, -5, 40}}, 1.0) == 40.0);
    CHECK(eval_rd({RdModelKind::Exp, {30, 0.05}}, 1.0) == 30.0);
    CHECK(eval_rd({RdModelKind::Poly3, {1, 2, 3, 4}}, 10.0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(eval_rd({RdModelKind::Lin, {-5, 40}}, 0.0), ValidationError);
}

TEST_CASE("goodness of fit") {
    auto c = make_curve({0.1, 0.2, 0.4}, [](double r) { return 30 + 10 * r; });
    // prediction is constant 33; residuals {1,-1,0} need PSNR {34, 32, 33}
    c.points[0].psnr = 34;
    c.points[1].psnr = 32;
    c.points[2].psnr = 33;
    auto g = goodness_of_fit({RdModelKind::Lin, {0, 33}}, c);
    CHECK(g.rmse == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(g.r_squared == doctest::Approx(0.0));

    auto flat = make_curve({0.1, 0.2, 0.4}, [](double) { return 35.0; });
    CHECK(goodness_of_fit({RdModelKind::Lin, {0, 35}}, flat).r_squared == 1.0);
    CHECK(std::isinf(goodness_of_fit({RdModelKind::Lin, {1, 35}}, flat).r_squared));
}

TEST_CASE("fit errors") {
    auto c = make_curve({0.1, 0.2, 0.4}, [](double r) { return 30 + r; });
    CHECK_THROWS_AS(fit_rd(c, RdModelKind::Poly3), ValidationError);
    auto same = make_curve({0.2, 0.2, 0.2, 0.2, 0.2}, [](double) { return 30.0; });
    CHECK_THROWS_AS(fit_rd(same, RdModelKind::Lin), NumericError);
    auto bad = make_curve(kRates, [](double) { return 30.0; });
    bad.points[2].rate = -1;
    CHECK_THROWS_AS(check_curve(bad), ValidationError);
    auto unsorted = make_curve(kRates, [](double r) { return 30 - r; });
    CHECK_FALSE(check_curve(unsorted).empty());  // PSNR does not fall with QP
}

TEST_CASE("OLS optimality, nesting and scale covariance") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 50; ++t) {
        auto c = make_curve(kRates, [&](double r) { return 38 + 4 * std::log10(r) + 0.5 * u(rng); });
        std::vector<double> rmse;
        for (auto k : {RdModelKind::Lin, RdModelKind::Poly2, RdModelKind::Poly3}) {
            auto f = fit_rd(c, k);
            rmse.push_back(f.rmse);
            const double base = sse(f, c);
            for (std::size_t i = 0; i < f.params.size(); ++i)
                for (double d : {-1e-3, 1e-3}) {
                    auto g = f;
                    g.params[i] += d;
                    CHECK(sse(g, c) >= base);
                }
        }
        CHECK(rmse[2] <= rmse[1] + 1e-12);
        CHECK(rmse[1] <= rmse[0] + 1e-12);

        auto f = fit_rd(c, RdModelKind::Lin);
        auto scaled = c;
        const double s = 3.7;
        for (auto& p : scaled.points) p.rate *= s;
        auto g = fit_rd(scaled, RdModelKind::Lin);
        CHECK(std::abs(g.params[0] - f.params[0]) < 1e-9);
        CHECK(std::abs(g.params[1] - (f.params[1] - f.params[0] * std::log10(s))) < 1e-9);
    }
}

TEST_CASE("relation probes") {
    auto e = relation_estimate(RdModelKind::Exp, {{"alpha4", 1.0}});
    CHECK(std::abs(e[1] - 0.16) < 1e-12);
    CHECK(e[0] == 1.0);
    auto l = relation_estimate(RdModelKind::Lin, {{"alpha1", 0.0}});
    CHECK(std::abs(l[1] - 40.95) < 1e-12);
    auto p2 = relation_estimate(RdModelKind::Poly2, {{"beta2", 0.0}});
    CHECK(std::abs(p2[0] - 5.21e-2) < 1e-12);
    CHECK(std::abs(p2[2] - 22.53) < 1e-12);
    CHECK(p2[1] == 0.0);
    auto p3 = relation_estimate(RdModelKind::Poly3, {{"alpha3", 0.1}, {"beta3", 1.0}, {"gamma3", 0.0}});
    CHECK(std::abs(p3[3] - 26.64) < 1e-12);
    CHECK(p3[0] == 0.1);

    // Lin at alpha1 = 1: .8571 - 6.796 - 8.117 + 40.95
    auto l1 = relation_estimate(RdModelKind::Lin, {{"alpha1", 1.0}});
    CHECK(std::abs(l1[1] - (0.8571 - 6.796 - 8.117 + 40.95)) < 1e-12);

    CHECK_THROWS_AS(relation_estimate(RdModelKind::Exp, {{"alpha4", 0.0}}), ValidationError);
    CHECK_THROWS_AS(relation_estimate(RdModelKind::Exp, {{"beta4", 1.0}}), ValidationError);
    CHECK_THROWS_AS(relation_estimate(RdModelKind::Lin, {{"alpha1", 1.0}, {"beta1", 2.0}}), ValidationError);
}

TEST_CASE("relation log base conversion") {
    const double a = -4.2;
    auto l = relation_estimate(RdModelKind::Lin, {{"alpha1", a}}, std::exp(1.0));
    const double x = a * std::log10(std::exp(1.0));
    const double ref = .8571 * x * x * x - 6.796 * x * x - 8.117 * x + 40.95;
    CHECK(l[0] == a);
    CHECK(std::abs(l[1] - ref) < 1e-12);
    auto same = relation_estimate(RdModelKind::Lin, {{"alpha1", a}}, 10.0);
    auto direct = relation_estimate(RdModelKind::Lin, {{"alpha1", a}});
    CHECK(same[1] == direct[1]);
    CHECK_THROWS_AS(relation_estimate(RdModelKind::Lin, {{"alpha1", a}}, 1.0), ValidationError);
}

TEST_CASE("relation estimate is continuous") {
    for (double a = 5; a < 60; a += 5) {
        auto x = relation_estimate(RdModelKind::Exp, {{"alpha4", a}});
        auto y = relation_estimate(RdModelKind::Exp, {{"alpha4", a + 1e-9}});
        CHECK(std::abs(x[1] - y[1]) < 1e-8);
    }
}

TEST_CASE("compiled coefficients match the golden transcription bit for bit") {
    std::ifstream in(std::string(TEXRD_GOLDEN_DIR) + "/relation_coefficients.txt");
    REQUIRE(in.good());
    std::string line;
    int seen = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, arg, tok;
        ls >> key >> arg;
        bool power = false;
        std::vector<double> coef;
        while (ls >> tok) {
            if (tok == "power") {
                power = true;
                continue;
            }
            coef.push_back(std::strtod(tok.c_str(), nullptr));
        }
        bool found = false;
        for (const auto& eq : relation_table()) {
            if (eq.key != key) continue;
            found = true;
            CHECK(eq.argument == arg);
            CHECK(eq.power_law == power);
            REQUIRE(eq.coefficients.size() == coef.size());
            for (std::size_t i = 0; i < coef.size(); ++i) CHECK(eq.coefficients[i] == coef[i]);
        }
        CHECK_MESSAGE(found, key);
        ++seen;
    }
    CHECK(seen == 6);
    CHECK(relation_table().size() == 6);
}

TEST_CASE("parameter correlations") {
    std::vector<RdFit> fits;
    for (double a : {1.0, 2.5, 3.0, 7.0, 9.5}) fits.push_back({RdModelKind::Lin, {a, -2 * a}});
    auto c = param_correlation(fits, 0, 1);
    CHECK(c.pcc == doctest::Approx(-1.0));
    CHECK(c.srocc == doctest::Approx(-1.0));
    CHECK(param_correlation(fits, 0, 0).pcc == doctest::Approx(1.0));

    // hand-computed: x = {1,2,3,4,5}, y = {2,1,4,3,5}
    // sxy = 8, sxx = 10, syy = 10 -> r = 0.8; ranks equal values -> rho = 0.8
    std::vector<RdFit> h;
    const double xs[] = {1, 2, 3, 4, 5}, ys[] = {2, 1, 4, 3, 5};
    for (int i = 0; i < 5; ++i) h.push_back({RdModelKind::Lin, {xs[i], ys[i]}});
    auto hc = param_correlation(h, 0, 1);
    CHECK(std::abs(hc.pcc - 0.8) < 1e-12);
    CHECK(std::abs(hc.srocc - 0.8) < 1e-12);
    CHECK(param_correlations(h).size() == 1);

    std::vector<RdFit> flat(3, RdFit{RdModelKind::Lin, {1, 2}});
    CHECK_THROWS_AS(param_correlations(flat), NumericError);
    CHECK_THROWS_AS(param_correlations(std::span<const RdFit>(fits.data(), 2)), ValidationError);
}

TEST_CASE("RD points CSV and fit JSON") {
    testutil::TempDir dir("rd");
    std::ofstream(dir / "p.csv") << "sequence_id,gop_index,qp,rate_bpp,psnr_db\n"
                                    "b,0,22,0.5,40\nb,0,42,0.05,30\na,1,22,0.4,39\na,1,32,0.1,34\n";
    auto curves = read_rd_points(dir / "p.csv");
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].sequence_id == "a");
    CHECK(curves[1].points[0].rate == 0.05);
    std::ofstream(dir / "q.csv") << "sequence_id,qp,rate_bpp,psnr_db\nb,22,0.5,40\n";
    CHECK_THROWS_AS(read_rd_points(dir / "q.csv"), ParseError);

    RdFit f{RdModelKind::Poly2, {0.1, -2.0, 35.0}, 0.99, 0.12};
    auto j = fit_to_json(f, "x", 4);
    CHECK(j["kind"] == "Poly2");
    auto g = fit_from_json(j);
    CHECK(g.params == f.params);
    CHECK(g.r_squared == f.r_squared);
    RdFit nan_fit{RdModelKind::Lin, {1, 2}};
    CHECK(fit_to_json(nan_fit, "x", 0)["r2"].is_null());
}
