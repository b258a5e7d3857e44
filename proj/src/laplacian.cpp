#include "texrd/laplacian.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "texrd/error.hpp"

namespace texrd::features {

namespace {

constexpr std::array<double, 5> kBinomial{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

// Separable filtering with the binomial kernel times `gain` per axis.
Image binomial_filter(const Image& in, double gain) {
    Image tmp(in.width, in.height), out(in.width, in.height);
    for (int r = 0; r < in.height; ++r)
        for (int c = 0; c < in.width; ++c) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += kBinomial[static_cast<std::size_t>(k)] * in(r, reflect101(c + k - 2, in.width));
            tmp(r, c) = gain * s;
        }
    for (int r = 0; r < in.height; ++r)
        for (int c = 0; c < in.width; ++c) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k) s += kBinomial[static_cast<std::size_t>(k)] * tmp(reflect101(r + k - 2, in.height), c);
            out(r, c) = gain * s;
        }
    return out;
}

}  // namespace

Image pyr_reduce(const Image& img) {
    const Image blurred = binomial_filter(img, 1.0);
    Image out((img.width + 1) / 2, (img.height + 1) / 2);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) out(r, c) = blurred(2 * r, 2 * c);
    return out;
}

Image pyr_expand(const Image& small, int width, int height) {
    Image up(width, height, 0.0);
    for (int r = 0; r < small.height && 2 * r < height; ++r)
        for (int c = 0; c < small.width && 2 * c < width; ++c) up(2 * r, 2 * c) = small(r, c);
    return binomial_filter(up, 2.0);
}

std::vector<Image> laplacian_pyramid(const Image& img, int scales) {
    if (scales < 1) throw ValidationError("pyramid needs at least one scale");
    std::vector<Image> gauss{img};
    for (int s = 1; s < scales; ++s) {
        if (gauss.back().width < 2 || gauss.back().height < 2)
            throw ValidationError("frame too small for requested pyramid scales");
        gauss.push_back(pyr_reduce(gauss.back()));
    }
    std::vector<Image> bands;
    for (int s = 0; s + 1 < scales; ++s) {
        const Image e = pyr_expand(gauss[static_cast<std::size_t>(s + 1)], gauss[static_cast<std::size_t>(s)].width,
                                   gauss[static_cast<std::size_t>(s)].height);
        Image band = gauss[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < band.size(); ++i) band.data[i] -= e.data[i];
        bands.push_back(std::move(band));
    }
    bands.push_back(gauss.back());
    return bands;
}

double nlp_distance(const io::FramePlane& prev, const io::FramePlane& cur, const NlpParams& p) {
    if (prev.width != cur.width || prev.height != cur.height)
        throw ValidationError("NLP frames differ in size");
    if (p.scales < 1) throw ValidationError("NLP needs at least one scale");
    const int coarsest = std::min(prev.width, prev.height) >> (p.scales - 1);
    if (coarsest < 2) throw ValidationError("frame too small for requested NLP scales");

    const auto a = laplacian_pyramid(to_image(prev), p.scales);
    const auto b = laplacian_pyramid(to_image(cur), p.scales);
    double total = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) {
        const Image& ba = a[s];
        const Image& bb = b[s];
        const auto [amin, amax] = std::minmax_element(ba.data.begin(), ba.data.end());
        const auto [bmin, bmax] = std::minmax_element(bb.data.begin(), bb.data.end());
        const double range = std::max(*amax, *bmax) - std::min(*amin, *bmin);
        const double stabilizer = p.stabilizer_ratio * range;

        Image abs_a = ba, abs_b = bb;
        for (auto& v : abs_a.data) v = std::abs(v);
        for (auto& v : abs_b.data) v = std::abs(v);
        const Image amp_a = binomial_filter(abs_a, 1.0);
        const Image amp_b = binomial_filter(abs_b, 1.0);

        double ss = 0.0;
        for (std::size_t i = 0; i < ba.size(); ++i) {
            const double da = stabilizer + amp_a.data[i];
            const double db = stabilizer + amp_b.data[i];
            const double za = da > 0.0 ? ba.data[i] / da : 0.0;
            const double zb = db > 0.0 ? bb.data[i] / db : 0.0;
            ss += (za - zb) * (za - zb);
        }
        total += std::sqrt(ss / static_cast<double>(ba.size()));
    }
    return total / static_cast<double>(a.size());
}

}  // namespace texrd::features
