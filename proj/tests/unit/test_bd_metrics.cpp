#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "texrd/bd_metrics.hpp"
#include "texrd/error.hpp"

using namespace texrd;
using namespace texrd::bd;
using rd::RdCurve;

namespace {

RdCurve curve(std::vector<double> rates, std::vector<double> psnr) {
    RdCurve c{"s", 0, {}};
    for (std::size_t i = 0; i < rates.size(); ++i) c.points.push_back({static_cast<int>(40 - 5 * i), rates[i], psnr[i]});
    return c;
}

double lagrange(const std::vector<double>& x, const std::vector<double>& y, double t) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double l = 1;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (j != i) l *= (t - x[j]) / (x[i] - x[j]);
        s += y[i] * l;
    }
    return s;
}

// Average of f over [a, b] by a 10^4-interval trapezoid rule.
template <typename F>
double trapezoid_mean(F f, double a, double b) {
    const int n = 10000;
    const double h = (b - a) / n;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) s += f(a + i * h);
    return s * h / (b - a);
}

double oracle_psnr(const RdCurve& r, const RdCurve& t) {
    std::vector<double> xr, yr, xt, yt;
    for (const auto& p : r.points) xr.push_back(std::log10(p.rate)), yr.push_back(p.psnr);
    for (const auto& p : t.points) xt.push_back(std::log10(p.rate)), yt.push_back(p.psnr);
    const double lo = std::max(*std::min_element(xr.begin(), xr.end()), *std::min_element(xt.begin(), xt.end()));
    const double hi = std::min(*std::max_element(xr.begin(), xr.end()), *std::max_element(xt.begin(), xt.end()));
    return trapezoid_mean([&](double x) { return lagrange(xt, yt, x) - lagrange(xr, yr, x); }, lo, hi);
}

double oracle_rate(const RdCurve& r, const RdCurve& t) {
    std::vector<double> xr, yr, xt, yt;
    for (const auto& p : r.points) yr.push_back(std::log10(p.rate)), xr.push_back(p.psnr);
    for (const auto& p : t.points) yt.push_back(std::log10(p.rate)), xt.push_back(p.psnr);
    const double lo = std::max(*std::min_element(xr.begin(), xr.end()), *std::min_element(xt.begin(), xt.end()));
    const double hi = std::min(*std::max_element(xr.begin(), xr.end()), *std::max_element(xt.begin(), xt.end()));
    const double d = trapezoid_mean([&](double x) { return lagrange(xt, yt, x) - lagrange(xr, yr, x); }, lo, hi);
    return (std::pow(10.0, d) - 1) * 100;
}

RdCurve random_curve(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> rates, psnr;
    double r = 0.01 + 0.02 * u(rng), q = 28 + 4 * u(rng);
    for (int i = 0; i < 5; ++i) {
        rates.push_back(r);
        psnr.push_back(q);
        r *= 1.8 + u(rng);
        q += 2 + 2 * u(rng);
    }
    return curve(rates, psnr);
}

}  // namespace

const RdCurve kRef = curve({0.05, 0.1, 0.2, 0.4, 0.8}, {30, 32.5, 35, 37, 38.5});

TEST_CASE("identical curves") {
    CHECK(std::abs(bd_psnr(kRef, kRef).value) < 1e-9);
    CHECK(std::abs(bd_rate(kRef, kRef).value) < 1e-6);
}

TEST_CASE("constant PSNR offset") {
    auto t = kRef;
    for (auto& p : t.points) p.psnr += 1;
    CHECK(std::abs(bd_psnr(kRef, t).value - 1.0) < 1e-9);
    CHECK(bd_rate(kRef, t).value < 0);
}

TEST_CASE("doubled rate at equal quality") {
    auto t = kRef;
    for (auto& p : t.points) p.rate *= 2;
    CHECK(std::abs(bd_rate(kRef, t).value - 100.0) < 1e-6);
    CHECK(bd_psnr(kRef, t).value < 0);
}

TEST_CASE("four-point curves against the quadrature oracle") {
    const RdCurve a = curve({0.04, 0.11, 0.3, 0.7}, {29.1, 32.8, 35.9, 38.2});
    const RdCurve b = curve({0.06, 0.13, 0.33, 0.9}, {29.9, 33.0, 36.4, 39.5});
    CHECK(std::abs(bd_psnr(a, b).value - oracle_psnr(a, b)) < 1e-6);
    CHECK(std::abs(bd_rate(a, b).value - oracle_rate(a, b)) < 1e-4);
    CHECK(std::abs(bd_psnr(b, a).value - oracle_psnr(b, a)) < 1e-6);
    CHECK(std::abs(bd_rate(b, a).value - oracle_rate(b, a)) < 1e-4);
}

TEST_CASE("antisymmetry and sign flip on random pairs") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 100; ++i) {
        auto a = random_curve(rng), b = random_curve(rng);
        double ab = 0, ba = 0;
        try {
            ab = bd_psnr(a, b).value;
            ba = bd_psnr(b, a).value;
        } catch (const NumericError&) {
            continue;  // disjoint rate ranges
        }
        CHECK(std::abs(ab + ba) < 1e-9);
        try {
            const double rab = bd_rate(a, b).value, rba = bd_rate(b, a).value;
            CHECK((rab > 0) == (rba < 0));
        } catch (const NumericError&) {
        }
    }
}

TEST_CASE("monotone dominance") {
    auto t = kRef;
    for (std::size_t i = 0; i < t.points.size(); ++i) t.points[i].psnr += 0.3 + 0.1 * i;
    CHECK(bd_psnr(kRef, t).value > 0);
    CHECK(bd_rate(kRef, t).value < 0);
}

TEST_CASE("errors") {
    auto three = curve({0.1, 0.2, 0.4}, {30, 32, 34});
    CHECK_THROWS_AS(bd_psnr(three, kRef), ValidationError);
    auto far = kRef;
    for (auto& p : far.points) p.rate *= 100;
    CHECK_THROWS_AS(bd_psnr(kRef, far), NumericError);
    auto high = kRef;
    for (auto& p : high.points) p.psnr += 20;
    CHECK_THROWS_AS(bd_rate(kRef, high), NumericError);
    auto bent = kRef;
    bent.points[2].psnr = 31;
    CHECK_THROWS_AS(bd_rate(kRef, bent), NumericError);
    std::vector<double> x{1, 1, 1, 1}, y{1, 2, 3, 4};
    CHECK_THROWS_AS(polyfit(x, y, 3), NumericError);
}

TEST_CASE("polyfit and polyint") {
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double v : x) y.push_back(1 - 2 * v + 0.5 * v * v * v);
    auto c = polyfit(x, y, 3);
    CHECK(c[0] == doctest::Approx(1));
    CHECK(c[1] == doctest::Approx(-2));
    CHECK(std::abs(c[2]) < 1e-9);
    CHECK(c[3] == doctest::Approx(0.5));
    // integral of 1 - 2x + x^3/2 over [0, 2]: 2 - 4 + 2 = 0
    CHECK(std::abs(polyint(c, 0, 2)) < 1e-9);
}

TEST_CASE("mean curve and sampling") {
    auto a = kRef, b = kRef;
    for (auto& p : b.points) {
        p.rate *= 3;
        p.psnr += 2;
    }
    std::vector<RdCurve> both{a, b};
    auto m = mean_curve(both);
    CHECK(m.gop_index == -1);
    CHECK(m.points[0].rate == doctest::Approx(0.1));
    CHECK(m.points[0].psnr == doctest::Approx(31));
    b.points.pop_back();
    std::vector<RdCurve> mismatch{a, b};
    CHECK_THROWS_AS(mean_curve(mismatch), ValidationError);

    rd::RdFit f{rd::RdModelKind::Lin, {5, 40}};
    auto s = sample_curve(f, kRef);
    REQUIRE(s.points.size() == kRef.points.size());
    CHECK(s.points[1].qp == kRef.points[1].qp);
    CHECK(s.points[1].psnr == doctest::Approx(5 * std::log10(0.1) + 40));
}

TEST_CASE("BD report") {
    std::vector<BdRow> rows{{"a", 0, 1.0, -10.0}, {"a", 1, 3.0, 10.0}};
    std::ostringstream os;
    write_bd_report(os, rows);
    const std::string s = os.str();
    CHECK(s.find("sequence_id,gop_index,bd_psnr_db,bd_rate_pct\n") != std::string::npos);
    CHECK(s.find("\nmean,,2,0\n") != std::string::npos);
    CHECK(s.find("\nstd,,1.4142135623730951,14.142135623730951\n") != std::string::npos);
}
