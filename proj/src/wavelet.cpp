#include "texrd/wavelet.hpp"

#include <cmath>

#include "texrd/error.hpp"
#include "texrd/stats.hpp"

namespace texrd::features {

std::vector<HaarLevel> haar_decompose(const Image& img, int levels) {
    std::vector<HaarLevel> out;
    const Image* src = &img;
    for (int l = 0; l < levels; ++l) {
        const int w = src->width / 2, h = src->height / 2;
        if (w < 1 || h < 1) throw ValidationError("frame too small for requested Haar levels");
        HaarLevel lev{Image(w, h), Image(w, h), Image(w, h), Image(w, h)};
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double a = (*src)(2 * r, 2 * c), b = (*src)(2 * r, 2 * c + 1);
                const double cc = (*src)(2 * r + 1, 2 * c), d = (*src)(2 * r + 1, 2 * c + 1);
                lev.ll(r, c) = 0.5 * (a + b + cc + d);
                lev.hl(r, c) = 0.5 * (a - b + cc - d);
                lev.lh(r, c) = 0.5 * (a + b - cc - d);
                lev.hh(r, c) = 0.5 * (a - b - cc + d);
            }
        }
        out.push_back(std::move(lev));
        src = &out.back().ll;
    }
    return out;
}

Image detail_magnitude(const HaarLevel& level) {
    Image m(level.hl.width, level.hl.height);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data[i] = std::abs(level.hl.data[i]) + std::abs(level.lh.data[i]) + std::abs(level.hh.data[i]);
    return m;
}

std::vector<int> scan_peaks(const Image& map) {
    std::vector<int> peaks;
    const auto& v = map.data;
    const int n = static_cast<int>(v.size());
    if (n == 0) return peaks;
    const double threshold = mean(v) + sample_std(v);
    for (int p = 0; p < n; ++p) {
        const double x = v[static_cast<std::size_t>(p)];
        if (!(x > threshold)) continue;
        const bool left = p == 0 || x > v[static_cast<std::size_t>(p - 1)];
        const bool right = p == n - 1 || x > v[static_cast<std::size_t>(p + 1)];
        if (left && right && n > 1) peaks.push_back(p);
    }
    return peaks;
}

double alpd(const io::FramePlane& frame) {
    if (frame.width < 32 || frame.height < 32) throw ValidationError("ALPD needs a frame of at least 32x32");
    const auto levels = haar_decompose(to_image(frame), 3);
    const auto peaks = scan_peaks(detail_magnitude(levels.back()));
    if (peaks.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t k = 1; k < peaks.size(); ++k) total += std::abs(peaks[k] - peaks[k - 1]);
    return total / static_cast<double>(peaks.size() - 1);
}

}  // namespace texrd::features
