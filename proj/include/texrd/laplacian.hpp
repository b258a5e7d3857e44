#pragma once

#include <vector>

#include "texrd/image.hpp"
#include "texrd/video_io.hpp"

namespace texrd::features {

/// Blur with the separable 5-tap binomial kernel [1 4 6 4 1]/16 and keep every
/// second sample; output is ceil(n/2) per axis. Borders reflect (101).
Image pyr_reduce(const Image& img);

/// Zero-insertion upsampling to width x height followed by the same kernel
/// scaled by 2 per axis.
Image pyr_expand(const Image& small, int width, int height);

/// `scales` bands: band k = G_k - expand(G_{k+1}); the last band is the low-pass
/// residual G_{scales-1}.
std::vector<Image> laplacian_pyramid(const Image& img, int scales);

struct NlpParams {
    int scales = 4;
    double stabilizer_ratio = 0.17;  // times the band's joint dynamic range
};

/// Normalized Laplacian pyramid distance between two frames: each band is
/// divided by (local amplitude + stabilizer), per-scale RMS of the difference
/// is taken, and the scales are averaged. Symmetric in its arguments.
double nlp_distance(const io::FramePlane& prev, const io::FramePlane& cur, const NlpParams& p = {});

}  // namespace texrd::features
