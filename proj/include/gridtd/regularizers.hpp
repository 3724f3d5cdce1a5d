#pragma once

#include <cmath>

#include "gridtd/tensor.hpp"

namespace gridtd {

// Smoothing constant for the differentiable |x| surrogate used inside
// gradient-based optimization.
inline constexpr double kSmoothEps = 1e-8;

// sqrt(x^2 + eps^2) - eps: matches |x| to O(eps) and is smooth at 0.
inline double smooth_abs(double x, double eps = kSmoothEps) {
    return std::sqrt(x * x + eps * eps) - eps;
}

inline double smooth_abs_grad(double x, double eps = kSmoothEps) {
    return x / std::sqrt(x * x + eps * eps);
}

inline void check_tv_shape(const DenseTensor& X, bool need_frames) {
    require(X.order() == 3, "TV penalties expect a 3rd-order tensor");
    require(X.dim(0) >= 2 && X.dim(1) >= 2,
            "TV penalties need spatial extents >= 2");
    if (need_frames)
        require(X.dim(2) >= 2, "SSTV needs at least 2 frames");
}

// Spatial total variation: smoothed L1 of the first differences along the two
// spatial axes (valid region only, no wraparound).
inline double tv(const DenseTensor& X, double eps = kSmoothEps) {
    check_tv_shape(X, false);
    const std::size_t n1 = X.dim(0), n2 = X.dim(1), n3 = X.dim(2);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t t = 0; t < n3; ++t)
                s += smooth_abs(X(i + 1, j, t) - X(i, j, t), eps);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j + 1 < n2; ++j)
            for (std::size_t t = 0; t < n3; ++t)
                s += smooth_abs(X(i, j + 1, t) - X(i, j, t), eps);
    return s;
}

// g += weight * d(tv)/dX
inline void tv_add_grad(const DenseTensor& X, double weight, DenseTensor& g,
                        double eps = kSmoothEps) {
    check_tv_shape(X, false);
    check_same_shape(X, g, "tv_add_grad");
    const std::size_t n1 = X.dim(0), n2 = X.dim(1), n3 = X.dim(2);
    for (std::size_t i = 0; i + 1 < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t t = 0; t < n3; ++t) {
                const double s =
                    weight * smooth_abs_grad(X(i + 1, j, t) - X(i, j, t), eps);
                g(i + 1, j, t) += s;
                g(i, j, t) -= s;
            }
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j + 1 < n2; ++j)
            for (std::size_t t = 0; t < n3; ++t) {
                const double s =
                    weight * smooth_abs_grad(X(i, j + 1, t) - X(i, j, t), eps);
                g(i, j + 1, t) += s;
                g(i, j, t) -= s;
            }
}

// Second-order spatial-temporal variation: smoothed L1 of the spatial
// differences of the frame differences.
inline double sstv(const DenseTensor& X, double eps = kSmoothEps) {
    check_tv_shape(X, true);
    const std::size_t n1 = X.dim(0), n2 = X.dim(1), n3 = X.dim(2);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t t = 0; t + 1 < n3; ++t) {
                const double dz1 = X(i + 1, j, t + 1) - X(i + 1, j, t);
                const double dz0 = X(i, j, t + 1) - X(i, j, t);
                s += smooth_abs(dz1 - dz0, eps);
            }
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j + 1 < n2; ++j)
            for (std::size_t t = 0; t + 1 < n3; ++t) {
                const double dz1 = X(i, j + 1, t + 1) - X(i, j + 1, t);
                const double dz0 = X(i, j, t + 1) - X(i, j, t);
                s += smooth_abs(dz1 - dz0, eps);
            }
    return s;
}

// g += weight * d(sstv)/dX
inline void sstv_add_grad(const DenseTensor& X, double weight, DenseTensor& g,
                          double eps = kSmoothEps) {
    check_tv_shape(X, true);
    check_same_shape(X, g, "sstv_add_grad");
    const std::size_t n1 = X.dim(0), n2 = X.dim(1), n3 = X.dim(2);
    for (std::size_t i = 0; i + 1 < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j)
            for (std::size_t t = 0; t + 1 < n3; ++t) {
                const double d = (X(i + 1, j, t + 1) - X(i + 1, j, t)) -
                                 (X(i, j, t + 1) - X(i, j, t));
                const double s = weight * smooth_abs_grad(d, eps);
                g(i + 1, j, t + 1) += s;
                g(i + 1, j, t) -= s;
                g(i, j, t + 1) -= s;
                g(i, j, t) += s;
            }
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j + 1 < n2; ++j)
            for (std::size_t t = 0; t + 1 < n3; ++t) {
                const double d = (X(i, j + 1, t + 1) - X(i, j + 1, t)) -
                                 (X(i, j, t + 1) - X(i, j, t));
                const double s = weight * smooth_abs_grad(d, eps);
                g(i, j + 1, t + 1) += s;
                g(i, j + 1, t) -= s;
                g(i, j, t + 1) -= s;
                g(i, j, t) += s;
            }
}

// lambda1 * tv + lambda2 * sstv; zero weights skip their term entirely (so
// the shape preconditions only apply to active terms).
inline double reg_loss(const DenseTensor& X, double lambda1, double lambda2,
                       double eps = kSmoothEps) {
    require(lambda1 >= 0.0 && lambda2 >= 0.0,
            "regularizer weights must be nonnegative");
    double s = 0.0;
    if (lambda1 > 0.0) s += lambda1 * tv(X, eps);
    if (lambda2 > 0.0) s += lambda2 * sstv(X, eps);
    return s;
}

inline void reg_add_grad(const DenseTensor& X, double lambda1, double lambda2,
                         DenseTensor& g, double eps = kSmoothEps) {
    require(lambda1 >= 0.0 && lambda2 >= 0.0,
            "regularizer weights must be nonnegative");
    if (lambda1 > 0.0) tv_add_grad(X, lambda1, g, eps);
    if (lambda2 > 0.0) sstv_add_grad(X, lambda2, g, eps);
}

}  // namespace gridtd
