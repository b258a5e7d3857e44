#include "texrd/coherence.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "texrd/error.hpp"

namespace texrd::features {

namespace {

struct FftwBuffer {
    fftw_complex* ptr = nullptr;
    explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
        if (!ptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
};

// The FFTW planner is not thread-safe; executing an existing plan on new
// arrays is. Plans are created once per block size and kept for the process.
fftw_plan forward_plan(int block) {
    static std::mutex mutex;
    static std::map<int, fftw_plan> plans;
    std::lock_guard lock(mutex);
    auto it = plans.find(block);
    if (it != plans.end()) return it->second;
    FftwBuffer in(static_cast<std::size_t>(block) * static_cast<std::size_t>(block));
    FftwBuffer out(static_cast<std::size_t>(block) * static_cast<std::size_t>(block));
    fftw_plan plan = fftw_plan_dft_2d(block, block, in.ptr, out.ptr, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plan) throw NumericError("FFTW planning failed");
    plans.emplace(block, plan);
    return plan;
}

}  // namespace

Image temporal_coherence(const io::FramePlane& prev, const io::FramePlane& cur, const CoherenceParams& p) {
    if (prev.width != cur.width || prev.height != cur.height)
        throw ValidationError("coherence frames differ in size");
    const int b = p.block;
    if (b < 8) throw ValidationError("coherence block must be at least 8");
    if (prev.width % b != 0 || prev.height % b != 0)
        throw ValidationError("coherence block " + std::to_string(b) + " does not tile a " +
                              std::to_string(prev.width) + "x" + std::to_string(prev.height) + " frame");

    const auto nbins = static_cast<std::size_t>(b) * static_cast<std::size_t>(b);
    std::vector<double> window(static_cast<std::size_t>(b));
    for (int i = 0; i < b; ++i)
        window[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / b);

    const fftw_plan plan = forward_plan(b);
    FftwBuffer xin(nbins), xout(nbins), yin(nbins), yout(nbins);
    std::vector<double> pxx(nbins, 0.0), pyy(nbins, 0.0), cre(nbins, 0.0), cim(nbins, 0.0);

    auto load_tile = [&](const io::FramePlane& f, int r0, int c0, fftw_complex* dst) {
        double s = 0.0;
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c) s += f.at(r0 + r, c0 + c);
        const double m = s / static_cast<double>(nbins);
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c) {
                const auto i = static_cast<std::size_t>(r * b + c);
                dst[i][0] = (f.at(r0 + r, c0 + c) - m) * window[static_cast<std::size_t>(r)] *
                            window[static_cast<std::size_t>(c)];
                dst[i][1] = 0.0;
            }
    };

    for (int r0 = 0; r0 < prev.height; r0 += b) {
        for (int c0 = 0; c0 < prev.width; c0 += b) {
            load_tile(prev, r0, c0, xin.ptr);
            load_tile(cur, r0, c0, yin.ptr);
            fftw_execute_dft(plan, xin.ptr, xout.ptr);
            fftw_execute_dft(plan, yin.ptr, yout.ptr);
            for (std::size_t i = 0; i < nbins; ++i) {
                const double xr = xout.ptr[i][0], xi = xout.ptr[i][1];
                const double yr = yout.ptr[i][0], yi = yout.ptr[i][1];
                pxx[i] += xr * xr + xi * xi;
                pyy[i] += yr * yr + yi * yi;
                // conj(X) * Y
                cre[i] += xr * yr + xi * yi;
                cim[i] += xr * yi - xi * yr;
            }
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < nbins; ++i) total += pxx[i] + pyy[i];
    const double eps = 1e-12 * total / static_cast<double>(nbins) + 1e-300;

    Image coh(b, b);
    for (std::size_t i = 0; i < nbins; ++i) {
        const bool x0 = pxx[i] <= eps, y0 = pyy[i] <= eps;
        if (x0 && y0) {
            coh.data[i] = 1.0;
        } else if (x0 || y0) {
            coh.data[i] = 0.0;
        } else {
            const double v = (cre[i] * cre[i] + cim[i] * cim[i]) / (pxx[i] * pyy[i]);
            coh.data[i] = std::clamp(v, 0.0, 1.0);
        }
    }
    return coh;
}

StatMoments temporal_coherence_stats(const io::FramePlane& prev, const io::FramePlane& cur,
                                     const CoherenceParams& p) {
    const Image coh = temporal_coherence(prev, cur, p);
    return describe(coh.data, 0.0, 1.0, 64);
}

}  // namespace texrd::features
