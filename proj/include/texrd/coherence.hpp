#pragma once

#include "texrd/image.hpp"
#include "texrd/stats.hpp"
#include "texrd/video_io.hpp"

namespace texrd::features {

struct CoherenceParams {
    int block = 64;  // tile side; must divide both frame dimensions
};

/// Per-bin magnitude-squared coherence between two frames, Welch-averaged over
/// non-overlapping block x block tiles. Each tile is mean-removed and Hann
/// windowed before its 2-D DFT. Bins where both auto-spectra vanish score 1,
/// bins where exactly one vanishes score 0. Returned map is block x block with
/// every value in [0, 1].
Image temporal_coherence(const io::FramePlane& prev, const io::FramePlane& cur, const CoherenceParams& p);

/// Moments plus 64-bin entropy over [0, 1] of the coherence map.
StatMoments temporal_coherence_stats(const io::FramePlane& prev, const io::FramePlane& cur,
                                     const CoherenceParams& p);

}  // namespace texrd::features
