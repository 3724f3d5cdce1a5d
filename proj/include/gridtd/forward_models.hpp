#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gridtd/rng.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

// Linear measurement operator with its adjoint and the closed-form solution
// of  min_X 1/2||forward(X) - Y||^2 + rho/2||X - (V - U)||^2.
class MeasurementOp {
public:
    virtual ~MeasurementOp() = default;
    virtual const char* name() const = 0;
    virtual const std::vector<std::size_t>& signal_shape() const = 0;
    virtual std::vector<std::size_t> measurement_shape() const = 0;
    virtual DenseTensor forward(const DenseTensor& x) const = 0;
    virtual DenseTensor adjoint(const DenseTensor& y) const = 0;
    virtual DenseTensor x_update(const DenseTensor& v, const DenseTensor& u,
                                 const DenseTensor& y, double rho) const = 0;

protected:
    void check_signal(const DenseTensor& x, const char* what) const {
        if (x.shape() != signal_shape())
            throw std::invalid_argument(std::string(what) + ": signal shape mismatch");
    }
    void check_measurement(const DenseTensor& y, const char* what) const {
        if (y.shape() != measurement_shape())
            throw std::invalid_argument(std::string(what) +
                                        ": measurement shape mismatch");
    }
    static void check_rho(double rho) {
        require(rho > 0.0, "rho must be positive");
    }
};

inline void check_binary_masks(const DenseTensor& masks) {
    require(masks.order() == 3, "modulation masks must be a 3rd-order tensor");
    for (std::size_t i = 0; i < masks.numel(); ++i)
        require(masks[i] == 0.0 || masks[i] == 1.0,
                "mask entries must be exactly 0 or 1");
}

// ---- video snapshot compressive imaging -------------------------------------
// Y = sum_t M_t (.) X_t : all frames collapse into one coded 2D measurement.
class VideoSciOperator : public MeasurementOp {
public:
    explicit VideoSciOperator(DenseTensor masks) : masks_(std::move(masks)) {
        check_binary_masks(masks_);
        shape_ = masks_.shape();
    }

    const char* name() const override { return "video-sci"; }
    const std::vector<std::size_t>& signal_shape() const override { return shape_; }
    const DenseTensor& masks() const { return masks_; }

    std::vector<std::size_t> measurement_shape() const override {
        return {shape_[0], shape_[1]};
    }

    DenseTensor forward(const DenseTensor& x) const override {
        check_signal(x, "video_sci_forward");
        const std::size_t n1 = shape_[0], n2 = shape_[1], n3 = shape_[2];
        DenseTensor y({n1, n2});
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                double s = 0.0;
                for (std::size_t t = 0; t < n3; ++t)
                    s += masks_(i, j, t) * x(i, j, t);
                y(i, j) = s;
            }
        return y;
    }

    DenseTensor adjoint(const DenseTensor& y) const override {
        check_measurement(y, "video_sci_adjoint");
        DenseTensor x(shape_);
        const std::size_t n1 = shape_[0], n2 = shape_[1], n3 = shape_[2];
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                for (std::size_t t = 0; t < n3; ++t)
                    x(i, j, t) = masks_(i, j, t) * y(i, j);
        return x;
    }

    // X_t = B_t/rho - (sum_t M_t(.)B_t) / (rho^2 + rho*sum_t M_t^2) (.) M_t,
    // with B_t = rho(V_t - U_t) + M_t (.) Y.  The per-pixel systems are rank-1
    // perturbations of rho*I, hence this closed form.
    DenseTensor x_update(const DenseTensor& v, const DenseTensor& u,
                         const DenseTensor& y, double rho) const override {
        check_rho(rho);
        check_signal(v, "x_update");
        check_signal(u, "x_update");
        check_measurement(y, "x_update");
        const std::size_t n1 = shape_[0], n2 = shape_[1], n3 = shape_[2];
        DenseTensor x(shape_);
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                double numer = 0.0, msq = 0.0;
                for (std::size_t t = 0; t < n3; ++t) {
                    const double m = masks_(i, j, t);
                    const double b = rho * (v(i, j, t) - u(i, j, t)) + m * y(i, j);
                    numer += m * b;
                    msq += m * m;
                }
                const double denom = rho * rho + rho * msq;
                for (std::size_t t = 0; t < n3; ++t) {
                    const double m = masks_(i, j, t);
                    const double b = rho * (v(i, j, t) - u(i, j, t)) + m * y(i, j);
                    x(i, j, t) = b / rho - numer / denom * m;
                }
            }
        return x;
    }

private:
    DenseTensor masks_;
    std::vector<std::size_t> shape_;
};

// ---- spectral snapshot compressive imaging ----------------------------------
// Band t is masked, displaced `step` columns per band (the dispersion), and
// summed:  Y(i, j + step*t) += M_t(i,j) * X_t(i,j).
class SpectralSciOperator : public MeasurementOp {
public:
    SpectralSciOperator(DenseTensor masks, std::size_t step = 2)
        : masks_(std::move(masks)), step_(step) {
        check_binary_masks(masks_);
        require(step_ >= 1, "spectral shift step must be >= 1");
        shape_ = masks_.shape();
    }

    const char* name() const override { return "spectral-sci"; }
    const std::vector<std::size_t>& signal_shape() const override { return shape_; }
    std::size_t step() const { return step_; }
    const DenseTensor& masks() const { return masks_; }

    std::vector<std::size_t> measurement_shape() const override {
        return {shape_[0], shape_[1] + step_ * (shape_[2] - 1)};
    }

    DenseTensor forward(const DenseTensor& x) const override {
        check_signal(x, "spectral_sci_forward");
        const std::size_t n1 = shape_[0], n2 = shape_[1], n3 = shape_[2];
        DenseTensor y(measurement_shape());
        for (std::size_t t = 0; t < n3; ++t)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j)
                    y(i, j + step_ * t) += masks_(i, j, t) * x(i, j, t);
        return y;
    }

    DenseTensor adjoint(const DenseTensor& y) const override {
        check_measurement(y, "spectral_sci_adjoint");
        const std::size_t n1 = shape_[0], n2 = shape_[1], n3 = shape_[2];
        DenseTensor x(shape_);
        for (std::size_t t = 0; t < n3; ++t)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j)
                    x(i, j, t) = masks_(i, j, t) * y(i, j + step_ * t);
        return x;
    }

    // Measurement entries couple the signal only along shifted-column
    // diagonals, so after aligning bands by the inverse shift the per-entry
    // systems have the same rank-1 structure as the video case.
    DenseTensor x_update(const DenseTensor& v, const DenseTensor& u,
                         const DenseTensor& y, double rho) const override {
        check_rho(rho);
        check_signal(v, "x_update");
        check_signal(u, "x_update");
        check_measurement(y, "x_update");
        const std::size_t n1 = shape_[0], n2 = shape_[1], n3 = shape_[2];
        DenseTensor numer(measurement_shape());
        DenseTensor msq(measurement_shape());
        for (std::size_t t = 0; t < n3; ++t)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    const double m = masks_(i, j, t);
                    const double b =
                        rho * (v(i, j, t) - u(i, j, t)) + m * y(i, j + step_ * t);
                    numer(i, j + step_ * t) += m * b;
                    msq(i, j + step_ * t) += m * m;
                }
        DenseTensor x(shape_);
        for (std::size_t t = 0; t < n3; ++t)
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    const double m = masks_(i, j, t);
                    const double b =
                        rho * (v(i, j, t) - u(i, j, t)) + m * y(i, j + step_ * t);
                    const double denom =
                        rho * rho + rho * msq(i, j + step_ * t);
                    x(i, j, t) = b / rho - m * numer(i, j + step_ * t) / denom;
                }
        return x;
    }

private:
    DenseTensor masks_;
    std::size_t step_;
    std::vector<std::size_t> shape_;
};

// ---- masked inpainting --------------------------------------------------------
// Observes a fixed subset of tensor entries; the measurement is the vector of
// observed values in flat-index order.
class InpaintingOperator : public MeasurementOp {
public:
    InpaintingOperator(std::vector<std::size_t> signal_shape,
                       std::vector<std::size_t> observed_flat_indices)
        : shape_(std::move(signal_shape)), observed_(std::move(observed_flat_indices)) {
        require(!shape_.empty(), "inpainting needs a signal shape");
        std::size_t numel = 1;
        for (const std::size_t s : shape_) {
            require(s >= 1, "signal dims must be >= 1");
            numel *= s;
        }
        require(!observed_.empty(), "inpainting needs at least one observed entry");
        for (std::size_t i = 0; i < observed_.size(); ++i) {
            require(observed_[i] < numel, "observed index out of range");
            if (i > 0)
                require(observed_[i] > observed_[i - 1],
                        "observed indices must be strictly increasing");
        }
        numel_ = numel;
    }

    const char* name() const override { return "inpaint"; }
    const std::vector<std::size_t>& signal_shape() const override { return shape_; }
    const std::vector<std::size_t>& observed() const { return observed_; }
    double sampling_rate() const {
        return static_cast<double>(observed_.size()) / static_cast<double>(numel_);
    }

    std::vector<std::size_t> measurement_shape() const override {
        return {observed_.size()};
    }

    DenseTensor forward(const DenseTensor& x) const override {
        check_signal(x, "inpaint_forward");
        DenseTensor y({observed_.size()});
        for (std::size_t k = 0; k < observed_.size(); ++k) y[k] = x[observed_[k]];
        return y;
    }

    DenseTensor adjoint(const DenseTensor& y) const override {
        check_measurement(y, "inpaint_adjoint");
        DenseTensor x(shape_);
        for (std::size_t k = 0; k < observed_.size(); ++k) x[observed_[k]] = y[k];
        return x;
    }

    // Per-entry scalar quadratics: observed entries blend measurement and
    // consensus, unobserved entries copy V - U.
    DenseTensor x_update(const DenseTensor& v, const DenseTensor& u,
                         const DenseTensor& y, double rho) const override {
        check_rho(rho);
        check_signal(v, "x_update");
        check_signal(u, "x_update");
        check_measurement(y, "x_update");
        DenseTensor x(shape_);
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] = v[i] - u[i];
        for (std::size_t k = 0; k < observed_.size(); ++k) {
            const std::size_t i = observed_[k];
            x[i] = (y[k] + rho * (v[i] - u[i])) / (1.0 + rho);
        }
        return x;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<std::size_t> observed_;
    std::size_t numel_ = 0;
};

// ---- mask generation -----------------------------------------------------------

// I.i.d. 0/1 entries with P(1) = p, from the "masks/bernoulli" substream.
inline DenseTensor make_bernoulli_masks(const std::vector<std::size_t>& shape,
                                        double p, std::uint64_t seed) {
    require(p > 0.0 && p < 1.0, "Bernoulli p must lie in (0,1)");
    DenseTensor m(shape);
    Rng rng(seed, "masks/bernoulli");
    for (std::size_t i = 0; i < m.numel(); ++i)
        m[i] = rng.uniform() < p ? 1.0 : 0.0;
    return m;
}

// Exactly round(sr * numel) observed entries, sampled without replacement
// (partial Fisher-Yates), returned strictly increasing.
inline std::vector<std::size_t> make_inpainting_indices(
    const std::vector<std::size_t>& shape, double sr, std::uint64_t seed) {
    require(sr > 0.0 && sr <= 1.0, "sampling rate must lie in (0,1]");
    std::size_t numel = 1;
    for (const std::size_t s : shape) numel *= s;
    const std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(sr * static_cast<double>(numel))));
    require(k <= numel, "sampling rate selects more entries than exist");
    std::vector<std::size_t> idx(numel);
    for (std::size_t i = 0; i < numel; ++i) idx[i] = i;
    Rng rng(seed, "masks/inpaint");
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(numel - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Zero-mean Gaussian measurement noise (the operators stay noise-free and
// adjoint-testable; the harness perturbs Y).
inline void add_gaussian_noise(DenseTensor& y, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0, "noise sigma must be nonnegative");
    if (sigma == 0.0) return;
    Rng rng(seed, "noise/measurement");
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] += sigma * rng.normal();
}

// Smoothness constant of the SCI data-fidelity term:
// (sqrt(n3)*||X||_F + ||Y||_F) * sqrt(sum_t ||M_t||_F^2).
inline double fidelity_lipschitz_bound(const DenseTensor& masks,
                                       const DenseTensor& x,
                                       const DenseTensor& y) {
    require(masks.order() == 3, "fidelity bound expects 3rd-order masks");
    const double n3 = static_cast<double>(masks.dim(2));
    double msq = 0.0;
    for (std::size_t i = 0; i < masks.numel(); ++i) msq += masks[i] * masks[i];
    return (std::sqrt(n3) * fro_norm(x) + fro_norm(y)) * std::sqrt(msq);
}

}  // namespace gridtd
