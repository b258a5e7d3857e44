#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "test_util.hpp"
#include "texrd/coherence.hpp"
#include "texrd/error.hpp"

using namespace texrd;
using namespace texrd::features;

namespace {

// Naive 2-D DFT Welch estimate, same windowing and mean removal.
std::vector<double> coherence_oracle(const io::FramePlane& a, const io::FramePlane& b, int n) {
    using C = std::complex<double>;
    std::vector<double> pxx(n * n, 0), pyy(n * n, 0);
    std::vector<C> pxy(n * n, 0);
    auto hann = [n](int i) { return 0.5 - 0.5 * std::cos(2 * M_PI * i / n); };
    for (int r0 = 0; r0 < a.height; r0 += n)
        for (int c0 = 0; c0 < a.width; c0 += n) {
            double ma = 0, mb = 0;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    ma += a.at(r0 + r, c0 + c);
                    mb += b.at(r0 + r, c0 + c);
                }
            ma /= n * n;
            mb /= n * n;
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    C x = 0, y = 0;
                    for (int r = 0; r < n; ++r)
                        for (int c = 0; c < n; ++c) {
                            const C e = std::polar(1.0, -2 * M_PI * (double(u * r) / n + double(v * c) / n));
                            const double w = hann(r) * hann(c);
                            x += (a.at(r0 + r, c0 + c) - ma) * w * e;
                            y += (b.at(r0 + r, c0 + c) - mb) * w * e;
                        }
                    pxx[u * n + v] += std::norm(x);
                    pyy[u * n + v] += std::norm(y);
                    pxy[u * n + v] += std::conj(x) * y;
                }
        }
    std::vector<double> out(n * n);
    for (int i = 0; i < n * n; ++i) out[i] = std::norm(pxy[i]) / (pxx[i] * pyy[i]);
    return out;
}

}  // namespace

TEST_CASE("identical frames are fully coherent") {
    auto f = testutil::noise_frame(128, 128, 31);
    auto m = temporal_coherence_stats(f, f, {32});
    CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("circular translation stays coherent") {
    auto f = testutil::smooth_frame(256, 256);
    auto g = testutil::circ_shift(f, 0, 1);
    auto m = temporal_coherence_stats(f, g, {64});
    CHECK(m.mean >= 0.99);
}

TEST_CASE("independent noise has low coherence") {
    // Monte-Carlo level: with K tiles the expected coherence is about 1/K.
    double worst = 0, avg = 0;
    for (int t = 0; t < 100; ++t) {
        auto a = testutil::noise_frame(256, 256, 10000 + t);
        auto b = testutil::noise_frame(256, 256, 20000 + t);
        const double v = temporal_coherence_stats(a, b, {32}).mean;
        worst = std::max(worst, v);
        avg += v / 100;
    }
    CHECK(avg == doctest::Approx(1.0 / 64).epsilon(0.2));
    CHECK(worst < 0.2);
}

TEST_CASE("matches a naive DFT estimate") {
    for (int trial = 0; trial < 3; ++trial) {
        auto a = testutil::noise_frame(16, 16, 50 + trial);
        auto b = testutil::noise_frame(16, 16, 60 + trial);
        auto coh = temporal_coherence(a, b, {8});
        auto ref = coherence_oracle(a, b, 8);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            CHECK(std::abs(coh.data[i] - ref[i]) < 1e-9);
            CHECK(coh.data[i] >= 0.0);
            CHECK(coh.data[i] <= 1.0);
        }
    }
}

TEST_CASE("intensity shift does not change coherence") {
    auto a = testutil::noise_frame(64, 64, 1, 0, 200);
    auto b = testutil::noise_frame(64, 64, 2, 0, 200);
    auto a2 = a, b2 = b;
    for (auto& s : a2.samples) s = static_cast<std::uint8_t>(s + 55);
    for (auto& s : b2.samples) s = static_cast<std::uint8_t>(s + 55);
    auto x = temporal_coherence_stats(a, b, {16});
    auto y = temporal_coherence_stats(a2, b2, {16});
    CHECK(std::abs(x.mean - y.mean) < 1e-6);
    CHECK(std::abs(x.std - y.std) < 1e-6);
}

TEST_CASE("block must tile the frame") {
    io::FramePlane f(96, 96);
    CHECK_THROWS_AS(temporal_coherence(f, f, {64}), ValidationError);
    CHECK_THROWS_AS(temporal_coherence(f, f, {4}), ValidationError);
}
