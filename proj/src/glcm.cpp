#include "texrd/glcm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "texrd/error.hpp"

namespace texrd::features {

Glcm compute_glcm(const io::FramePlane& frame, int levels, PixelOffset offset) {
    if (levels < 2 || levels > 256) throw ValidationError("GLCM levels must be in [2, 256]");
    if (offset.row == 0 && offset.col == 0) throw ValidationError("GLCM offset must be nonzero");
    if (std::abs(offset.row) >= frame.height || std::abs(offset.col) >= frame.width)
        throw ValidationError("frame smaller than GLCM offset");

    Glcm g;
    g.levels = levels;
    g.offset = offset;
    const auto L = static_cast<std::size_t>(levels);
    g.counts.assign(L * L, 0);

    std::vector<int> q(256);
    for (int y = 0; y < 256; ++y) q[static_cast<std::size_t>(y)] = y * levels / 256;

    const int r0 = std::max(0, -offset.row), r1 = std::min(frame.height, frame.height - offset.row);
    const int c0 = std::max(0, -offset.col), c1 = std::min(frame.width, frame.width - offset.col);
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            const auto i = static_cast<std::size_t>(q[frame.at(r, c)]);
            const auto j = static_cast<std::size_t>(q[frame.at(r + offset.row, c + offset.col)]);
            ++g.counts[i * L + j];
            ++g.total;
        }
    }
    g.probabilities.resize(L * L);
    const double k = static_cast<double>(g.total);
    for (std::size_t idx = 0; idx < g.counts.size(); ++idx)
        g.probabilities[idx] = static_cast<double>(g.counts[idx]) / k;
    return g;
}

GlcmDescriptors glcm_descriptors(const Glcm& glcm) {
    const int L = glcm.levels;
    GlcmDescriptors d;
    double mr = 0.0, mc = 0.0;
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const double p = glcm.p(i, j);
            mr += i * p;
            mc += j * p;
        }
    double vr = 0.0, vc = 0.0, cov = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const double p = glcm.p(i, j);
            if (p == 0.0) continue;
            const double di = i - mr, dj = j - mc;
            vr += di * di * p;
            vc += dj * dj * p;
            cov += di * dj * p;
            d.contrast += static_cast<double>((i - j) * (i - j)) * p;
            d.energy += p * p;
            d.homogeneity += p / (1.0 + std::abs(i - j));
            d.entropy -= p * std::log2(p);
        }
    }
    const double denom = std::sqrt(vr) * std::sqrt(vc);
    d.correlation = denom > 1e-15 ? std::clamp(cov / denom, -1.0, 1.0) : 0.0;
    return d;
}

}  // namespace texrd::features
