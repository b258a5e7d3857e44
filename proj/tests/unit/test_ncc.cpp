#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "texrd/error.hpp"
#include "texrd/ncc.hpp"

using namespace texrd;
using namespace texrd::features;

namespace {

// Direct two-pass ZNCC in double precision.
double zncc(const io::FramePlane& a, int ar, int ac, const io::FramePlane& b, int br, int bc, int w) {
    double ma = 0, mb = 0;
    for (int r = 0; r < w; ++r)
        for (int c = 0; c < w; ++c) {
            ma += a.at(ar + r, ac + c);
            mb += b.at(br + r, bc + c);
        }
    ma /= w * w;
    mb /= w * w;
    double sab = 0, saa = 0, sbb = 0;
    for (int r = 0; r < w; ++r)
        for (int c = 0; c < w; ++c) {
            const double x = a.at(ar + r, ac + c) - ma, y = b.at(br + r, bc + c) - mb;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
    if (sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("self match peaks at one") {
    auto f = testutil::noise_frame(64, 64, 11);
    auto m = ncc_peak_stats(f, f, {});
    CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.std < 1e-9);
    for (const auto& pk : ncc_peaks(f, f, {})) {
        CHECK(pk.dy == 0);
        CHECK(pk.dx == 0);
    }
}

TEST_CASE("negated frame peaks at minus one") {
    auto f = testutil::noise_frame(64, 64, 12);
    io::FramePlane g = f;
    for (auto& s : g.samples) s = static_cast<std::uint8_t>(255 - s);
    for (const auto& pk : ncc_peaks(f, g, {})) CHECK(pk.value == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("circular shift is found at its offset") {
    auto f = testutil::noise_frame(96, 80, 13);
    auto g = testutil::circ_shift(f, 2, 3);
    auto peaks = ncc_peaks(f, g, {});
    REQUIRE(!peaks.empty());
    double sum = 0;
    for (const auto& pk : peaks) {
        sum += pk.value;
        CHECK(pk.dy == 2);
        CHECK(pk.dx == 3);
        // dense oracle over every offset in the search window agrees on the argmax
        double best = 0;
        bool have = false;
        int by = 0, bx = 0;
        for (int dy = -8; dy <= 8; ++dy)
            for (int dx = -8; dx <= 8; ++dx) {
                const int r0 = pk.row + dy, c0 = pk.col + dx;
                if (r0 < 0 || c0 < 0 || r0 + 16 > g.height || c0 + 16 > g.width) continue;
                const double v = zncc(f, pk.row, pk.col, g, r0, c0, 16);
                if (!have || std::abs(v) > std::abs(best)) {
                    have = true;
                    best = v;
                    by = dy;
                    bx = dx;
                }
            }
        CHECK(by == pk.dy);
        CHECK(bx == pk.dx);
    }
    CHECK(sum / static_cast<double>(peaks.size()) >= 0.99);
}

TEST_CASE("matches direct dense correlation on small frames") {
    NccParams p{4, 3, 2};
    for (int trial = 0; trial < 20; ++trial) {
        auto a = testutil::noise_frame(16, 16, 900 + trial);
        auto b = testutil::noise_frame(16, 16, 1900 + trial);
        auto peaks = ncc_peaks(a, b, p);
        for (const auto& pk : peaks) {
            double best = 0;
            bool have = false;
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx) {
                    const int r0 = pk.row + dy, c0 = pk.col + dx;
                    if (r0 < 0 || c0 < 0 || r0 + 4 > 16 || c0 + 4 > 16) continue;
                    const double v = zncc(a, pk.row, pk.col, b, r0, c0, 4);
                    if (!have || std::abs(v) > std::abs(best) || (std::abs(v) == std::abs(best) && v > best)) best = v;
                    have = true;
                }
            CHECK(std::abs(pk.value - best) < 1e-9);
            CHECK(pk.value >= -1.0);
            CHECK(pk.value <= 1.0);
            CHECK(std::abs(zncc(a, pk.row, pk.col, b, pk.row + pk.dy, pk.col + pk.dx, 4) - pk.value) < 1e-9);
        }
    }
}

TEST_CASE("template origins keep the search region inside the frame") {
    NccParams p;
    auto o = ncc_template_origins(256, p);
    REQUIRE(!o.empty());
    CHECK(o.front() == 8);
    CHECK(o.back() + p.window + p.search <= 256);
    // too small for a margin: templates start at 0
    auto s = ncc_template_origins(20, p);
    REQUIRE(!s.empty());
    CHECK(s.front() == 0);
}

TEST_CASE("intensity shift leaves peaks unchanged") {
    auto f = testutil::noise_frame(64, 64, 14, 0, 200);
    auto g = testutil::noise_frame(64, 64, 15, 0, 200);
    auto f2 = f, g2 = g;
    for (auto& s : f2.samples) s = static_cast<std::uint8_t>(s + 40);
    for (auto& s : g2.samples) s = static_cast<std::uint8_t>(s + 40);
    auto a = ncc_peak_stats(f, g, {});
    auto b = ncc_peak_stats(f2, g2, {});
    CHECK(std::abs(a.mean - b.mean) < 1e-6);
    CHECK(std::abs(a.std - b.std) < 1e-6);
    CHECK(std::abs(a.skewness - b.skewness) < 1e-6);
}

TEST_CASE("errors") {
    io::FramePlane flat(32, 32, 9);
    CHECK_THROWS_AS(ncc_peak_stats(flat, flat, {}), NumericError);
    auto f = testutil::noise_frame(32, 32, 3);
    CHECK_THROWS_AS(ncc_peaks(f, testutil::noise_frame(32, 31, 3), {}), ValidationError);
    CHECK_THROWS_AS(ncc_peaks(f, f, {64, 16, 8}), ValidationError);
}
