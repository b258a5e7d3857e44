#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "texrd/csv.hpp"
#include "texrd/stats.hpp"

using namespace texrd;

TEST_CASE("mean and sample std") {
    std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(mean(v) == doctest::Approx(5.0));
    // population std is 2, sample std is sqrt(32/7)
    CHECK(sample_std(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
    std::vector<double> one{3.0};
    CHECK(sample_std(one) == 0.0);
    std::vector<double> none;
    CHECK(std::isnan(mean(none)));
}

TEST_CASE("describe: skewness and kurtosis against hand values") {
    // {0, 0, 0, 1}: mean .25, m2 = 3/16, m3 = 3/32, m4 = 21/256
    std::vector<double> v{0, 0, 0, 1};
    auto m = describe(v, 0.0, 1.0, 2);
    const double m2 = 3.0 / 16, m3 = 3.0 / 32, m4 = 21.0 / 256;
    CHECK(m.mean == doctest::Approx(0.25));
    CHECK(m.skewness == doctest::Approx(m3 / std::pow(m2, 1.5)));
    CHECK(m.kurtosis == doctest::Approx(m4 / (m2 * m2)));
    // two bins with 3:1 split
    const double h = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    CHECK(m.entropy == doctest::Approx(h));
    CHECK_FALSE(m.degenerate);
}

TEST_CASE("describe: zero variance is flagged") {
    std::vector<double> v(10, 3.5);
    auto m = describe(v, 0.0, 10.0);
    CHECK(m.degenerate);
    CHECK(m.std == 0.0);
    CHECK(m.kurtosis == 0.0);
    CHECK(m.skewness == 0.0);
    CHECK(m.entropy == 0.0);
}

TEST_CASE("kurtosis of a symmetric two-point population is 1") {
    std::vector<double> v{-1, 1, -1, 1, -1, 1};
    auto m = describe(v, -1.0, 1.0);
    CHECK(m.kurtosis == doctest::Approx(1.0));
    CHECK(m.skewness == doctest::Approx(0.0));
}

TEST_CASE("histogram entropy clamps out-of-range values") {
    std::vector<double> v{-5, 5};
    CHECK(histogram_entropy(v, 0.0, 1.0, 4) == doctest::Approx(1.0));
}

TEST_CASE("pearson and spearman") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y{2, 4, 6, 8, 10};
    std::vector<double> z{5, 4, 3, 2, 1};
    std::vector<double> c{1, 1, 1, 1, 1};
    CHECK(pearson(x, y) == doctest::Approx(1.0));
    CHECK(pearson(x, z) == doctest::Approx(-1.0));
    CHECK(std::isnan(pearson(x, c)));
    std::vector<double> cube{1, 8, 27, 64, 125};
    CHECK(spearman(x, cube) == doctest::Approx(1.0));
    CHECK(pearson(x, cube) < 1.0);
}

TEST_CASE("average ranks with ties") {
    std::vector<double> v{10, 20, 20, 5};
    auto r = average_ranks(v);
    REQUIRE(r.size() == 4);
    CHECK(r[0] == 2.0);
    CHECK(r[1] == 3.5);
    CHECK(r[2] == 3.5);
    CHECK(r[3] == 1.0);
}

TEST_CASE("type 7 quantiles") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(3.0));
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(5.0));
    CHECK(quantile_type7(v, 0.75) == doctest::Approx(7.0));
    std::vector<double> w{1, 2, 3, 100};
    CHECK(quantile_type7(w, 0.25) == doctest::Approx(1.75));
    CHECK(quantile_type7(w, 0.75) == doctest::Approx(27.25));
}

TEST_CASE("derived seeds differ per stream and are stable") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("csv parsing and formatting") {
    auto t = csv::parse("# hello\na,b\n1,\"x,y\"\n\n2,3\n");
    REQUIRE(t.header.size() == 2);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.comments.size() == 1);
    CHECK(t.rows[0][1] == "x,y");
    CHECK(t.column("b").value() == 1);
    CHECK_FALSE(t.column("c").has_value());
    CHECK_THROWS(csv::parse("a,b\n1\n"));
    const double x = 0.1 + 0.2;
    CHECK(csv::parse_double(csv::format_double(x)).value() == x);
    CHECK_FALSE(csv::parse_double("NaN").has_value());
    CHECK_FALSE(csv::parse_double("").has_value());
    CHECK_THROWS(csv::parse_double_strict("abc", "cell"));
    CHECK(csv::parse_int_strict("42", "n") == 42);
}
