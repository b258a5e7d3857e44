#pragma once

#include <array>
#include <span>
#include <vector>

#include "texrd/image.hpp"
#include "texrd/video_io.hpp"

namespace texrd::features {

struct FlowParams {
    int levels = 3;          // pyramid levels including full resolution
    int window = 15;         // neighbourhood averaging window (pixels)
    int iterations = 3;      // refinement iterations per level
    double poly_sigma = 1.5; // Gaussian applicability of the polynomial expansion
    int poly_radius = 3;     // applicability support, (2r+1) taps
};

/// Dense displacement field: cur(y + v, x + u) ~ prev(y, x).
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;
    std::vector<double> v;
    bool degenerate = false;  // a constant input frame; field is all zero
};

/// Quadratic polynomial expansion f(x) ~ x^T A x + b^T x + c under a Gaussian
/// applicability, per pixel. Columns are x, rows are y.
struct PolyExpansion {
    Image bx, by;        // linear terms
    Image axx, ayy, axy; // A = [axx axy; axy ayy]
};

PolyExpansion polynomial_expansion(const Image& img, double sigma, int radius);

/// Two-frame dense flow by polynomial expansion, coarse to fine. Components
/// are clamped to +/- window * 2^(levels-1) pixels.
FlowField farneback_flow(const io::FramePlane& prev, const io::FramePlane& cur, const FlowParams& p = {});

/// Statistics F32..F44 in table order:
/// meanOF_mag, stdOF_mag, meanOF_or, stdOF_or, meanOF_curl, stdOF_curl,
/// meanOF_ang, stdOF_ang, stdOF_covVx, meanOF_covVy, stdOF_covVy,
/// meanOF_covVxVy, stdOF_covVxVy.
/// Per-field spatial mean/std are averaged over fields; covariance statistics
/// are mean/std over fields of each field's (co)variance. Needs >= 2 fields.
std::array<double, 13> flow_statistics(std::span<const FlowField> flows);

/// Central-difference curl dv/dx - du/dy (one-sided at the borders).
std::vector<double> flow_curl(const FlowField& f);

}  // namespace texrd::features
