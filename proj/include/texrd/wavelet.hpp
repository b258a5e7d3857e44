#pragma once

#include <vector>

#include "texrd/image.hpp"
#include "texrd/video_io.hpp"

namespace texrd::features {

/// Sub-bands of one orthonormal 2-D Haar analysis step. For a 2x2 block
/// [a b; c d]: ll = (a+b+c+d)/2, hl = (a-b+c-d)/2 (high-pass across columns),
/// lh = (a+b-c-d)/2 (high-pass across rows), hh = (a-b-c+d)/2.
struct HaarLevel {
    Image ll, hl, lh, hh;
};

/// Multilevel decomposition; level k operates on the ll band of level k-1.
/// An odd trailing row or column is dropped at each level.
std::vector<HaarLevel> haar_decompose(const Image& img, int levels);

/// |hl| + |lh| + |hh| of one level.
Image detail_magnitude(const HaarLevel& level);

/// Positions (row-major scan index) of the strict local maxima of `map` that
/// exceed mean + one standard deviation of the map. Endpoints compare against
/// their single neighbour.
std::vector<int> scan_peaks(const Image& map);

/// Average local peak distance on the level-3 Haar detail magnitude: mean gap,
/// in scan positions, between consecutive peaks. 0 when fewer than two peaks.
double alpd(const io::FramePlane& frame);

}  // namespace texrd::features
