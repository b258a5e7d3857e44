#pragma once

#include <cstddef>
#include <vector>

#include "texrd/video_io.hpp"

namespace texrd::features {

/// Double-precision working plane used by the filter-based features.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& operator()(int row, int col) {
        return data[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)];
    }
    double operator()(int row, int col) const {
        return data[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)];
    }
    std::size_t size() const { return data.size(); }
};

inline Image to_image(const io::FramePlane& f) {
    Image img(f.width, f.height);
    for (std::size_t i = 0; i < f.samples.size(); ++i) img.data[i] = f.samples[i];
    return img;
}

/// Mirror index without repeating the edge sample: -1 -> 1, n -> n-2.
inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

}  // namespace texrd::features
