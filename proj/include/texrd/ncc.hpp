#pragma once

#include <vector>

#include "texrd/stats.hpp"
#include "texrd/video_io.hpp"

namespace texrd::features {

struct NccParams {
    int window = 16;  // template side w
    int stride = 16;  // template tiling step
    int search = 8;   // +/- search radius around the template origin
};

/// Best match of one template from the previous frame inside the current one.
struct NccPeak {
    double value = 0.0;  // zero-normalized cross-correlation in [-1, 1]
    int dy = 0;          // displacement of the best match
    int dx = 0;
    int row = 0;  // template origin in the previous frame
    int col = 0;
};

/// Origins of the w x w templates tiled from a frame of the given size. When
/// the frame is large enough every template keeps its full search region.
std::vector<int> ncc_template_origins(int extent, const NccParams& p);

/// Zero-normalized cross-correlation of every template tiled from `prev`
/// against `cur` over the search region. The peak is the correlation of largest
/// magnitude (positive wins ties). Templates with zero variance are skipped;
/// candidate windows with zero variance score 0.
std::vector<NccPeak> ncc_peaks(const io::FramePlane& prev, const io::FramePlane& cur,
                               const NccParams& p);

/// Moments plus 64-bin entropy over [-1, 1] of the peak population. Throws
/// NumericError when every template was skipped.
StatMoments ncc_peak_stats(const io::FramePlane& prev, const io::FramePlane& cur,
                           const NccParams& p);

}  // namespace texrd::features
