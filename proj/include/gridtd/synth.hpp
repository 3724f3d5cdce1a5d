#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

namespace detail {

// Rescales a tensor linearly onto [0,1] (constant tensors map to 0.5).
inline void normalize_01(DenseTensor& t) {
    double lo = t[0], hi = t[0];
    for (std::size_t i = 0; i < t.numel(); ++i) {
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
    }
    if (hi == lo) {
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = 0.5;
        return;
    }
    const double s = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = (t[i] - lo) * s;
}

// A smooth random 1D profile on [0,1): a few low-frequency sinusoids.
inline std::vector<double> smooth_profile(std::size_t n, Rng& rng) {
    std::vector<double> amp(3), freq(3), phase(3);
    for (std::size_t k = 0; k < 3; ++k) {
        amp[k] = rng.uniform(0.3, 1.0);
        freq[k] = rng.uniform(0.5, static_cast<double>(k + 2));
        phase[k] = rng.uniform(0.0, kTwoPi);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        double v = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
            v += amp[k] * std::sin(kTwoPi * freq[k] * x + phase[k]);
        out[i] = v;
    }
    return out;
}

}  // namespace detail

// 1D sum of low-frequency sinusoids, scaled to [0,1].
inline DenseTensor sum_of_sinusoids_1d(std::size_t n, std::uint64_t seed) {
    Rng rng(seed, "synth/sinusoids1d");
    DenseTensor t({n}, detail::smooth_profile(n, rng));
    detail::normalize_01(t);
    return t;
}

// 2D field of smooth Gaussian bumps, scaled to [0,1].
inline DenseTensor smooth_bumps_2d(std::size_t n1, std::size_t n2,
                                   std::uint64_t seed) {
    Rng rng(seed, "synth/bumps2d");
    DenseTensor t({n1, n2});
    const std::size_t bumps = 6;
    for (std::size_t k = 0; k < bumps; ++k) {
        const double cx = rng.uniform(0.1, 0.9);
        const double cy = rng.uniform(0.1, 0.9);
        const double s = rng.uniform(0.08, 0.25);
        const double a = rng.uniform(0.4, 1.0);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                const double x = static_cast<double>(i) / static_cast<double>(n1);
                const double y = static_cast<double>(j) / static_cast<double>(n2);
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                t(i, j) += a * std::exp(-d2 / (2.0 * s * s));
            }
    }
    detail::normalize_01(t);
    return t;
}

// 3D low-CP-rank smooth phantom: a few separable products of smooth 1D
// profiles, scaled to [0,1].
inline DenseTensor separable_smooth_3d(std::size_t n1, std::size_t n2,
                                       std::size_t n3, std::uint64_t seed) {
    Rng rng(seed, "synth/separable3d");
    DenseTensor t({n1, n2, n3});
    for (std::size_t r = 0; r < 3; ++r) {
        const std::vector<double> u = detail::smooth_profile(n1, rng);
        const std::vector<double> v = detail::smooth_profile(n2, rng);
        const std::vector<double> w = detail::smooth_profile(n3, rng);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                for (std::size_t k = 0; k < n3; ++k)
                    t(i, j, k) += u[i] * v[j] * w[k];
    }
    detail::normalize_01(t);
    return t;
}

// Bright square translating across a dark background at constant velocity.
// Pixel intensity is the square's coverage fraction, so integer positions
// give hard 0/1 edges and fractional ones clean subpixel ramps.
inline DenseTensor moving_square_video(std::size_t n1, std::size_t n2,
                                       std::size_t n3, double x0, double y0,
                                       double vx, double vy, double side) {
    require(side > 0.0, "square side must be positive");
    DenseTensor t({n1, n2, n3});
    const auto coverage = [](double lo, double hi, double p) {
        // overlap of [p, p+1) with [lo, hi)
        return std::max(0.0, std::min(hi, p + 1.0) - std::max(lo, p));
    };
    for (std::size_t f = 0; f < n3; ++f) {
        const double px = x0 + vx * static_cast<double>(f);
        const double py = y0 + vy * static_cast<double>(f);
        for (std::size_t i = 0; i < n1; ++i) {
            const double ci = coverage(px, px + side, static_cast<double>(i));
            if (ci == 0.0) continue;
            for (std::size_t j = 0; j < n2; ++j) {
                const double cj = coverage(py, py + side, static_cast<double>(j));
                if (cj == 0.0) continue;
                t(i, j, f) = ci * cj;
            }
        }
    }
    return t;
}

// Low-rank-plus-smooth spectral cube: two spatial bump maps, each modulated
// by a smooth spectral curve, scaled to [0,1].
inline DenseTensor spectral_phantom(std::size_t n1, std::size_t n2,
                                    std::size_t n3, std::uint64_t seed) {
    Rng rng(seed, "synth/spectral");
    DenseTensor t({n1, n2, n3});
    for (std::size_t r = 0; r < 2; ++r) {
        DenseTensor map({n1, n2});
        for (std::size_t k = 0; k < 4; ++k) {
            const double cx = rng.uniform(0.15, 0.85);
            const double cy = rng.uniform(0.15, 0.85);
            const double s = rng.uniform(0.1, 0.3);
            const double a = rng.uniform(0.4, 1.0);
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    const double x = static_cast<double>(i) / static_cast<double>(n1);
                    const double y = static_cast<double>(j) / static_cast<double>(n2);
                    const double d2 =
                        (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    map(i, j) += a * std::exp(-d2 / (2.0 * s * s));
                }
        }
        const std::vector<double> spectrum = detail::smooth_profile(n3, rng);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                for (std::size_t k = 0; k < n3; ++k)
                    t(i, j, k) += map(i, j) * (1.2 + spectrum[k]);
    }
    detail::normalize_01(t);
    return t;
}

}  // namespace gridtd
