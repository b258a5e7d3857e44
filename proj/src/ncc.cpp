#include "texrd/ncc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "texrd/error.hpp"

namespace texrd::features {

namespace {

// (h+1) x (w+1) summed-area tables of values and squared values.
struct IntegralImage {
    int width = 0;
    std::vector<std::int64_t> sum;
    std::vector<std::int64_t> sq;

    explicit IntegralImage(const io::FramePlane& f) : width(f.width + 1) {
        const auto n = static_cast<std::size_t>(f.width + 1) * static_cast<std::size_t>(f.height + 1);
        sum.assign(n, 0);
        sq.assign(n, 0);
        for (int r = 0; r < f.height; ++r) {
            std::int64_t rs = 0, rq = 0;
            for (int c = 0; c < f.width; ++c) {
                const std::int64_t v = f.at(r, c);
                rs += v;
                rq += v * v;
                sum[idx(r + 1, c + 1)] = sum[idx(r, c + 1)] + rs;
                sq[idx(r + 1, c + 1)] = sq[idx(r, c + 1)] + rq;
            }
        }
    }
    std::size_t idx(int r, int c) const {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c);
    }
    std::int64_t box(const std::vector<std::int64_t>& t, int r, int c, int h, int w) const {
        return t[idx(r + h, c + w)] - t[idx(r, c + w)] - t[idx(r + h, c)] + t[idx(r, c)];
    }
};

}  // namespace

std::vector<int> ncc_template_origins(int extent, const NccParams& p) {
    std::vector<int> origins;
    const int margin = extent >= p.window + 2 * p.search ? p.search : 0;
    for (int o = margin; o + p.window + margin <= extent; o += p.stride) origins.push_back(o);
    return origins;
}

std::vector<NccPeak> ncc_peaks(const io::FramePlane& prev, const io::FramePlane& cur, const NccParams& p) {
    if (prev.width != cur.width || prev.height != cur.height)
        throw ValidationError("NCC frames differ in size");
    if (p.window < 2 || p.window > std::min(prev.width, prev.height))
        throw ValidationError("NCC window must be in [2, min(width, height)]");
    if (p.stride < 1 || p.search < 0) throw ValidationError("NCC stride/search out of range");

    const IntegralImage cur_ii(cur);
    const int w = p.window;
    const std::int64_t n = static_cast<std::int64_t>(w) * w;
    const auto rows = ncc_template_origins(prev.height, p);
    const auto cols = ncc_template_origins(prev.width, p);

    std::vector<NccPeak> peaks;
    std::vector<std::int64_t> tmpl(static_cast<std::size_t>(n));
    for (int tr : rows) {
        for (int tc : cols) {
            std::int64_t ts = 0, tq = 0;
            for (int r = 0; r < w; ++r)
                for (int c = 0; c < w; ++c) {
                    const std::int64_t v = prev.at(tr + r, tc + c);
                    tmpl[static_cast<std::size_t>(r * w + c)] = v;
                    ts += v;
                    tq += v * v;
                }
            const std::int64_t tvar = n * tq - ts * ts;  // n^2 * variance, exact
            if (tvar == 0) continue;

            NccPeak best;
            bool have = false;
            for (int dy = -p.search; dy <= p.search; ++dy) {
                const int r0 = tr + dy;
                if (r0 < 0 || r0 + w > cur.height) continue;
                for (int dx = -p.search; dx <= p.search; ++dx) {
                    const int c0 = tc + dx;
                    if (c0 < 0 || c0 + w > cur.width) continue;
                    const std::int64_t is = cur_ii.box(cur_ii.sum, r0, c0, w, w);
                    const std::int64_t iq = cur_ii.box(cur_ii.sq, r0, c0, w, w);
                    const std::int64_t ivar = n * iq - is * is;
                    double v = 0.0;
                    if (ivar != 0) {
                        std::int64_t ti = 0;
                        for (int r = 0; r < w; ++r) {
                            const std::uint8_t* row = &cur.samples[static_cast<std::size_t>(r0 + r) *
                                                                       static_cast<std::size_t>(cur.width) +
                                                                   static_cast<std::size_t>(c0)];
                            const std::int64_t* trow = &tmpl[static_cast<std::size_t>(r * w)];
                            for (int c = 0; c < w; ++c) ti += trow[c] * row[c];
                        }
                        const double num = static_cast<double>(n * ti - ts * is);
                        v = num / std::sqrt(static_cast<double>(tvar) * static_cast<double>(ivar));
                        v = std::clamp(v, -1.0, 1.0);
                    }
                    const bool better = !have || std::abs(v) > std::abs(best.value) ||
                                        (std::abs(v) == std::abs(best.value) && v > best.value);
                    if (better) {
                        best = {v, dy, dx, tr, tc};
                        have = true;
                    }
                }
            }
            if (have) peaks.push_back(best);
        }
    }
    return peaks;
}

StatMoments ncc_peak_stats(const io::FramePlane& prev, const io::FramePlane& cur, const NccParams& p) {
    const auto peaks = ncc_peaks(prev, cur, p);
    if (peaks.empty()) throw NumericError("NCC: every template has zero variance");
    std::vector<double> values;
    values.reserve(peaks.size());
    for (const auto& pk : peaks) values.push_back(pk.value);
    return describe(values, -1.0, 1.0, 64);
}

}  // namespace texrd::features
