#pragma once

#include <cstdint>
#include <vector>

#include "texrd/video_io.hpp"

namespace texrd::features {

struct PixelOffset {
    int row = 0;
    int col = 1;
};

/// Gray-level co-occurrence matrix. counts(i, j) is the number of pixel pairs
/// whose first pixel quantizes to level i and whose offset partner to level j;
/// the matrix is not symmetrized.
struct Glcm {
    int levels = 0;
    PixelOffset offset;
    std::uint64_t total = 0;  // K, number of valid pairs
    std::vector<std::uint64_t> counts;
    std::vector<double> probabilities;

    double p(int i, int j) const {
        return probabilities[static_cast<std::size_t>(i) * static_cast<std::size_t>(levels) +
                             static_cast<std::size_t>(j)];
    }
};

struct GlcmDescriptors {
    double contrast = 0.0;
    double correlation = 0.0;
    double energy = 0.0;
    double homogeneity = 0.0;
    double entropy = 0.0;  // bits
};

/// Quantizes with floor(y * levels / 256) and counts every in-bounds pair at
/// `offset`. Requires levels in [2, 256] and a nonzero offset that leaves at
/// least one pair inside the frame.
Glcm compute_glcm(const io::FramePlane& frame, int levels, PixelOffset offset);

/// Correlation is 0 when either marginal has zero spread; 0 log 0 := 0.
GlcmDescriptors glcm_descriptors(const Glcm& glcm);

}  // namespace texrd::features
