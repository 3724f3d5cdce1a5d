#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "gridtd/tensor.hpp"

namespace gridtd {

// 10*log10(peak^2 / MSE); identical inputs report +infinity.
inline double psnr(const DenseTensor& x, const DenseTensor& ref, double peak = 1.0) {
    check_same_shape(x, ref, "psnr");
    require(peak > 0.0, "psnr peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double d = x[i] - ref[i];
        mse += d * d;
    }
    mse /= static_cast<double>(x.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized to sum 1.
inline const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> k(11 * 11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
                const double di = i - 5, dj = j - 5;
                k[i * 11 + j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
                sum += k[i * 11 + j];
            }
        for (double& v : k) v /= sum;
        return k;
    }();
    return w;
}

inline double ssim_frame(const double* a, const double* b, std::size_t n1,
                         std::size_t n2, double c1, double c2) {
    const std::vector<double>& w = ssim_window();
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t ci = 0; ci + 11 <= n1; ++ci)
        for (std::size_t cj = 0; cj + 11 <= n2; ++cj) {
            double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
            for (std::size_t i = 0; i < 11; ++i)
                for (std::size_t j = 0; j < 11; ++j) {
                    const double wi = w[i * 11 + j];
                    const double va = a[(ci + i) * n2 + (cj + j)];
                    const double vb = b[(ci + i) * n2 + (cj + j)];
                    mx += wi * va;
                    my += wi * vb;
                    xx += wi * va * va;
                    yy += wi * vb * vb;
                    xy += wi * va * vb;
                }
            const double sx = xx - mx * mx;
            const double sy = yy - my * my;
            const double sxy = xy - mx * my;
            acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
                   ((mx * mx + my * my + c1) * (sx + sy + c2));
            ++count;
        }
    require(count > 0, "ssim needs spatial extents >= 11");
    return acc / static_cast<double>(count);
}

}  // namespace detail

// Windowed structural similarity (11x11 Gaussian, sigma 1.5,
// C1=(0.01*peak)^2, C2=(0.03*peak)^2).  2D inputs score directly; 3rd-order
// inputs average the per-frame scores.
inline double ssim(const DenseTensor& x, const DenseTensor& ref, double peak = 1.0) {
    check_same_shape(x, ref, "ssim");
    require(peak > 0.0, "ssim peak must be positive");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    if (x.order() == 2)
        return detail::ssim_frame(x.data(), ref.data(), x.dim(0), x.dim(1), c1, c2);
    require(x.order() == 3, "ssim expects a 2nd- or 3rd-order tensor");
    const std::size_t n1 = x.dim(0), n2 = x.dim(1), n3 = x.dim(2);
    std::vector<double> fa(n1 * n2), fb(n1 * n2);
    double acc = 0.0;
    for (std::size_t t = 0; t < n3; ++t) {
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                fa[i * n2 + j] = x(i, j, t);
                fb[i * n2 + j] = ref(i, j, t);
            }
        acc += detail::ssim_frame(fa.data(), fb.data(), n1, n2, c1, c2);
    }
    return acc / static_cast<double>(n3);
}

}  // namespace gridtd
