#include "texrd/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "texrd/error.hpp"
#include "texrd/laplacian.hpp"
#include "texrd/stats.hpp"

namespace texrd::features {

namespace {

bool is_constant(const io::FramePlane& f) {
    return std::all_of(f.samples.begin(), f.samples.end(), [&](std::uint8_t s) { return s == f.samples[0]; });
}

// Mean over a (2r+1) window along rows then columns, borders reflected.
void box_mean(Image& img, int radius) {
    const int w = img.width, h = img.height;
    const double inv = 1.0 / (2 * radius + 1);
    std::vector<double> line, prefix;
    auto run = [&](int n, auto get, auto set) {
        line.resize(static_cast<std::size_t>(n + 2 * radius));
        for (int i = -radius; i < n + radius; ++i) line[static_cast<std::size_t>(i + radius)] = get(reflect101(i, n));
        prefix.assign(line.size() + 1, 0.0);
        for (std::size_t i = 0; i < line.size(); ++i) prefix[i + 1] = prefix[i] + line[i];
        for (int i = 0; i < n; ++i)
            set(i, (prefix[static_cast<std::size_t>(i + 2 * radius + 1)] - prefix[static_cast<std::size_t>(i)]) * inv);
    };
    for (int r = 0; r < h; ++r)
        run(w, [&](int c) { return img(r, c); }, [&](int c, double v) { img(r, c) = v; });
    for (int c = 0; c < w; ++c)
        run(h, [&](int r) { return img(r, c); }, [&](int r, double v) { img(r, c) = v; });
}

double sample_bilinear(const Image& img, double y, double x) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0, fy = y - y0;
    return (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) + fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
}

Image resize_bilinear(const Image& src, int width, int height) {
    Image out(width, height);
    const double sx = static_cast<double>(src.width) / width, sy = static_cast<double>(src.height) / height;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) out(r, c) = sample_bilinear(src, (r + 0.5) * sy - 0.5, (c + 0.5) * sx - 0.5);
    return out;
}

double wrap_angle(double a) {
    constexpr double pi = std::numbers::pi;
    while (a <= -pi) a += 2 * pi;
    while (a > pi) a -= 2 * pi;
    return a;
}

}  // namespace

PolyExpansion polynomial_expansion(const Image& img, double sigma, int radius) {
    if (radius < 1 || !(sigma > 0)) throw ValidationError("polynomial expansion needs radius >= 1 and sigma > 0");
    const int n = 2 * radius + 1;
    std::vector<double> g(static_cast<std::size_t>(n));
    double s0 = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        g[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
        s0 += g[static_cast<std::size_t>(k + radius)];
    }
    double s2 = 0.0, s4 = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        auto& gk = g[static_cast<std::size_t>(k + radius)];
        gk /= s0;
        s2 += k * k * gk;
        s4 += static_cast<double>(k) * k * k * k * gk;
    }

    const int w = img.width, h = img.height;
    // Vertical pass: moments 0, 1, 2 along rows (y).
    Image v0(w, h), v1(w, h), v2(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double a0 = 0, a1 = 0, a2 = 0;
            for (int k = -radius; k <= radius; ++k) {
                const double f = g[static_cast<std::size_t>(k + radius)] * img(reflect101(r + k, h), c);
                a0 += f;
                a1 += k * f;
                a2 += k * k * f;
            }
            v0(r, c) = a0;
            v1(r, c) = a1;
            v2(r, c) = a2;
        }

    PolyExpansion pe{Image(w, h), Image(w, h), Image(w, h), Image(w, h), Image(w, h)};
    const double d4 = s4 - s2 * s2;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double c1 = 0, cx = 0, cy = 0, cxx = 0, cyy = 0, cxy = 0;
            for (int k = -radius; k <= radius; ++k) {
                const int cc = reflect101(c + k, w);
                const double gk = g[static_cast<std::size_t>(k + radius)];
                const double a0 = gk * v0(r, cc), a1 = gk * v1(r, cc), a2 = gk * v2(r, cc);
                c1 += a0;
                cx += k * a0;
                cxx += k * k * a0;
                cy += a1;
                cxy += k * a1;
                cyy += a2;
            }
            // Dual basis of {1, x, y, x^2, y^2, xy} under separable applicability.
            const double sum = (cxx + cyy - 2 * s2 * c1) / d4;
            const double diff = (cxx - cyy) / d4;
            pe.bx(r, c) = cx / s2;
            pe.by(r, c) = cy / s2;
            pe.axx(r, c) = 0.5 * (sum + diff);
            pe.ayy(r, c) = 0.5 * (sum - diff);
            pe.axy(r, c) = 0.5 * cxy / (s2 * s2);
        }
    return pe;
}

FlowField farneback_flow(const io::FramePlane& prev, const io::FramePlane& cur, const FlowParams& p) {
    if (prev.width != cur.width || prev.height != cur.height) throw ValidationError("flow frames differ in size");
    if (prev.width < 32 || prev.height < 32) throw ValidationError("optical flow needs frames of at least 32x32");
    if (p.levels < 1 || p.window < 1 || p.iterations < 1) throw ValidationError("invalid flow parameters");

    FlowField out;
    out.width = prev.width;
    out.height = prev.height;
    const auto npx = prev.samples.size();
    if (is_constant(prev) || is_constant(cur)) {
        out.u.assign(npx, 0.0);
        out.v.assign(npx, 0.0);
        out.degenerate = true;
        return out;
    }

    std::vector<Image> pyr_a{to_image(prev)}, pyr_b{to_image(cur)};
    for (int l = 1; l < p.levels; ++l) {
        if (pyr_a.back().width < 8 || pyr_a.back().height < 8) break;
        pyr_a.push_back(pyr_reduce(pyr_a.back()));
        pyr_b.push_back(pyr_reduce(pyr_b.back()));
    }
    const int nlev = static_cast<int>(pyr_a.size());
    const double full_extent = p.window * std::ldexp(1.0, p.levels - 1);
    const int radius = p.window / 2;

    Image u, v;
    for (int l = nlev - 1; l >= 0; --l) {
        const Image& ia = pyr_a[static_cast<std::size_t>(l)];
        const Image& ib = pyr_b[static_cast<std::size_t>(l)];
        const int w = ia.width, h = ia.height;
        if (u.width == 0) {
            u = Image(w, h, 0.0);
            v = Image(w, h, 0.0);
        } else {
            const double sx = static_cast<double>(w) / u.width, sy = static_cast<double>(h) / u.height;
            u = resize_bilinear(u, w, h);
            v = resize_bilinear(v, w, h);
            for (auto& x : u.data) x *= sx;
            for (auto& x : v.data) x *= sy;
        }
        const double extent = full_extent / std::ldexp(1.0, l);

        const PolyExpansion ea = polynomial_expansion(ia, p.poly_sigma, p.poly_radius);
        const PolyExpansion eb = polynomial_expansion(ib, p.poly_sigma, p.poly_radius);

        Image g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);
        for (int it = 0; it < p.iterations; ++it) {
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    const double du = u(r, c), dv = v(r, c);
                    const double y = r + dv, x = c + du;
                    const double a11 = 0.5 * (ea.axx(r, c) + sample_bilinear(eb.axx, y, x));
                    const double a22 = 0.5 * (ea.ayy(r, c) + sample_bilinear(eb.ayy, y, x));
                    const double a12 = 0.5 * (ea.axy(r, c) + sample_bilinear(eb.axy, y, x));
                    const double db1 = -0.5 * (sample_bilinear(eb.bx, y, x) - ea.bx(r, c)) + a11 * du + a12 * dv;
                    const double db2 = -0.5 * (sample_bilinear(eb.by, y, x) - ea.by(r, c)) + a12 * du + a22 * dv;
                    g11(r, c) = a11 * a11 + a12 * a12;
                    g12(r, c) = a12 * (a11 + a22);
                    g22(r, c) = a12 * a12 + a22 * a22;
                    h1(r, c) = a11 * db1 + a12 * db2;
                    h2(r, c) = a12 * db1 + a22 * db2;
                }
            box_mean(g11, radius);
            box_mean(g12, radius);
            box_mean(g22, radius);
            box_mean(h1, radius);
            box_mean(h2, radius);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double det = g11.data[i] * g22.data[i] - g12.data[i] * g12.data[i] + 1e-3;
                const double nu = (g22.data[i] * h1.data[i] - g12.data[i] * h2.data[i]) / det;
                const double nv = (g11.data[i] * h2.data[i] - g12.data[i] * h1.data[i]) / det;
                u.data[i] = std::isfinite(nu) ? std::clamp(nu, -extent, extent) : 0.0;
                v.data[i] = std::isfinite(nv) ? std::clamp(nv, -extent, extent) : 0.0;
            }
        }
    }
    out.u = std::move(u.data);
    out.v = std::move(v.data);
    return out;
}

std::vector<double> flow_curl(const FlowField& f) {
    const int w = f.width, h = f.height;
    auto at = [&](const std::vector<double>& a, int r, int c) {
        return a[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)];
    };
    auto deriv = [](auto get, int i, int n) {
        if (n < 2) return 0.0;
        if (i == 0) return get(1) - get(0);
        if (i == n - 1) return get(n - 1) - get(n - 2);
        return 0.5 * (get(i + 1) - get(i - 1));
    };
    std::vector<double> curl(f.u.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double dvdx = deriv([&](int cc) { return at(f.v, r, cc); }, c, w);
            const double dudy = deriv([&](int rr) { return at(f.u, rr, c); }, r, h);
            curl[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) + static_cast<std::size_t>(c)] = dvdx - dudy;
        }
    return curl;
}

std::array<double, 13> flow_statistics(std::span<const FlowField> flows) {
    if (flows.size() < 2) throw ValidationError("flow statistics need at least two flow fields");
    const std::size_t nf = flows.size();
    std::vector<double> mag_mean(nf), mag_std(nf), or_mean(nf), or_std(nf), curl_mean(nf), curl_std(nf);
    std::vector<double> var_u(nf), var_v(nf), cov_uv(nf);
    std::vector<std::vector<double>> orientation(nf);

    for (std::size_t t = 0; t < nf; ++t) {
        const auto& f = flows[t];
        if (f.u.size() != flows[0].u.size() || f.u.size() != f.v.size() || f.u.empty())
            throw ValidationError("flow fields differ in size");
        const std::size_t n = f.u.size();
        std::vector<double> mag(n), ori(n);
        for (std::size_t i = 0; i < n; ++i) {
            mag[i] = std::hypot(f.u[i], f.v[i]);
            ori[i] = mag[i] == 0.0 ? 0.0 : std::atan2(f.v[i], f.u[i]);
        }
        const auto curl = flow_curl(f);
        mag_mean[t] = mean(mag);
        mag_std[t] = sample_std(mag);
        or_mean[t] = mean(ori);
        or_std[t] = sample_std(ori);
        curl_mean[t] = mean(curl);
        curl_std[t] = sample_std(curl);

        const double mu = mean(f.u), mv = mean(f.v);
        double suu = 0, svv = 0, suv = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double du = f.u[i] - mu, dv = f.v[i] - mv;
            suu += du * du;
            svv += dv * dv;
            suv += du * dv;
        }
        const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
        var_u[t] = suu / denom;
        var_v[t] = svv / denom;
        cov_uv[t] = suv / denom;
        orientation[t] = std::move(ori);
    }

    std::vector<double> ang_mean(nf - 1), ang_std(nf - 1);
    for (std::size_t t = 0; t + 1 < nf; ++t) {
        const auto& a = orientation[t];
        const auto& b = orientation[t + 1];
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = wrap_angle(b[i] - a[i]);
        ang_mean[t] = mean(d);
        ang_std[t] = sample_std(d);
    }

    return {mean(mag_mean),  mean(mag_std),   mean(or_mean),   mean(or_std),      mean(curl_mean),
            mean(curl_std),  mean(ang_mean),  mean(ang_std),   sample_std(var_u), mean(var_v),
            sample_std(var_v), mean(cov_uv), sample_std(cov_uv)};
}

}  // namespace texrd::features
