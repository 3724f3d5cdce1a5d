#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gridtd/decoder.hpp"
#include "gridtd/encoding.hpp"
#include "gridtd/forward_models.hpp"
#include "gridtd/regularizers.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

// Thrown when an optimization objective stops being finite; the CLI maps it
// to its runtime-abort exit code.
struct NonFiniteLossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar objective attached to a recorded forward pass:
//   prox_weight/2 * ||V - prox_target||^2
// + data_weight/2 * ||op(V) - measurement||^2
// + lambda1 * tv(V) + lambda2 * sstv(V)
struct LossTerms {
    double prox_weight = 0.0;
    const DenseTensor* prox_target = nullptr;
    double data_weight = 0.0;
    const MeasurementOp* op = nullptr;
    const DenseTensor* measurement = nullptr;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct LossBreakdown {
    double total = 0.0, prox = 0.0, data = 0.0, tv_term = 0.0, sstv_term = 0.0;
};

// Records one forward pass of the full pipeline (per-axis or dense encoding ->
// rank fusion -> MLP decode -> optional temporal affine warp) with enough
// intermediates to run the exact reverse pass.  Gradients accumulate into the
// model's ParamStore buffers in a fixed single-threaded order, so identical
// inputs give bit-identical gradients.
class GradientTape {
public:
    explicit GradientTape(Model& model) : model_(&model) {}

    // ---- full-grid forward -------------------------------------------------

    const DenseTensor& forward(const CoordinateGrid& coords, bool use_affine) {
        Model& M = *model_;
        coords.validate();
        const EncoderConfig& ec = M.config().encoder;
        if (coords.order() != ec.dims)
            throw std::invalid_argument("tape forward: coordinate order mismatch");
        if (use_affine && !M.has_adapter())
            throw std::logic_error("tape forward: model has no affine adapter");
        coords_ = coords;
        use_affine_ = use_affine;
        subset_mode_ = false;
        point_shape_ = coords.shape();
        numel_ = 1;
        for (const std::size_t n : point_shape_) numel_ *= n;
        stats_ = EncodeStats{};
        const std::size_t R = M.encoder().rank();

        if (ec.mode == EncoderMode::Decomposed) {
            axis_tables_.clear();
            for (std::size_t d = 0; d < ec.dims; ++d)
                axis_tables_.push_back(M.encoder().encode_axis_table(
                    M.params(), d, coords_.axes[d], &stats_));
            H_ = DenseTensor({numel_, R});
            Encoder::fuse_tables(axis_tables_, point_shape_, H_);
        } else {
            H_ = M.encoder().encode_batch(M.params(), coords_, &stats_);
        }

        hidden_ = DenseTensor({numel_, M.mlp().hidden_width});
        L_ = DenseTensor(point_shape_);
        const std::size_t hw = M.mlp().hidden_width;
        for (std::size_t i = 0; i < numel_; ++i)
            L_[i] = M.mlp().forward(
                M.params(), std::span<const double>(H_.data() + i * R, R),
                std::span<double>(hidden_.data() + i * hw, hw));

        if (use_affine_)
            affine_forward();
        else
            V_ = L_;
        have_forward_ = true;
        have_loss_ = false;
        return V_;
    }

    const DenseTensor& output() const {
        check_forward("output");
        return V_;
    }

    // Decoded tensor before the affine warp (equals output() without affine).
    const DenseTensor& latent() const {
        check_forward("latent");
        return L_;
    }

    const EncodeStats& stats() const { return stats_; }

    // ---- losses and reverse pass --------------------------------------------

    LossBreakdown loss(const LossTerms& terms) {
        check_forward("loss");
        if (subset_mode_)
            throw std::logic_error("loss: tape holds a subset forward; use loss_subset");
        validate_terms(terms);
        LossBreakdown b;
        if (terms.prox_weight > 0.0)
            b.prox = 0.5 * terms.prox_weight * sq_diff(V_, *terms.prox_target);
        if (terms.data_weight > 0.0) {
            DenseTensor yhat = terms.op->forward(V_);
            check_same_shape(yhat, *terms.measurement, "loss measurement");
            residual_ = yhat;
            for (std::size_t i = 0; i < residual_.numel(); ++i)
                residual_[i] -= (*terms.measurement)[i];
            b.data = 0.5 * terms.data_weight * fro_norm(residual_) *
                     fro_norm(residual_);
        }
        if (terms.lambda1 > 0.0) b.tv_term = terms.lambda1 * tv(V_);
        if (terms.lambda2 > 0.0) b.sstv_term = terms.lambda2 * sstv(V_);
        b.total = b.prox + b.data + b.tv_term + b.sstv_term;
        if (!std::isfinite(b.total))
            throw NonFiniteLossError("objective became non-finite");
        terms_ = terms;
        have_loss_ = true;
        return b;
    }

    // Accumulates d(seed * loss)/d(params) into the ParamStore gradients.
    void backward(double seed = 1.0) {
        check_forward("backward");
        if (!have_loss_)
            throw std::logic_error("backward: no loss recorded on this tape");
        DenseTensor dv(V_.shape());
        if (terms_.prox_weight > 0.0)
            for (std::size_t i = 0; i < dv.numel(); ++i)
                dv[i] += terms_.prox_weight * (V_[i] - (*terms_.prox_target)[i]);
        if (terms_.data_weight > 0.0) {
            DenseTensor adj = terms_.op->adjoint(residual_);
            axpy(dv, terms_.data_weight, adj);
        }
        reg_add_grad(V_, terms_.lambda1, terms_.lambda2, dv);
        if (seed != 1.0)
            for (std::size_t i = 0; i < dv.numel(); ++i) dv[i] *= seed;
        backward_output(dv);
    }

    // Reverse pass from an explicit d(loss)/d(output) tensor.
    void backward_output(const DenseTensor& dv) {
        check_forward("backward_output");
        if (subset_mode_)
            throw std::logic_error("backward_output: tape holds a subset forward");
        check_same_shape(dv, V_, "backward_output");
        Model& M = *model_;
        const EncoderConfig& ec = M.config().encoder;
        const std::size_t R = M.encoder().rank();

        DenseTensor dL;
        prepare_axis_grads();
        if (use_affine_) {
            dL = DenseTensor(point_shape_);
            affine_backward(dv, dL);
        } else {
            dL = dv;
        }

        std::vector<double> dh(R), pre(ec.dims * R), suf(ec.dims * R);
        std::vector<std::size_t> idx(ec.dims, 0);
        std::size_t flat = 0;
        do {
            const double dy = dL[flat];
            if (dy != 0.0) backprop_point(flat, idx.data(), dy, dh, pre, suf);
            ++flat;
        } while (next_index(idx, point_shape_));

        scatter_axis_grads();
    }

    // ---- subset fitting path -------------------------------------------------
    // Evaluates only the listed grid points (flat row-major indices into the
    // coordinate grid).  Used by the fitting benchmarks, where the loss is a
    // plain 1/2 sum of squared errors on the observed entries.  No affine.

    const std::vector<double>& forward_subset(const CoordinateGrid& coords,
                                              const std::vector<std::size_t>& flat) {
        Model& M = *model_;
        coords.validate();
        const EncoderConfig& ec = M.config().encoder;
        if (coords.order() != ec.dims)
            throw std::invalid_argument("tape forward: coordinate order mismatch");
        coords_ = coords;
        use_affine_ = false;
        subset_mode_ = true;
        point_shape_ = coords.shape();
        numel_ = 1;
        for (const std::size_t n : point_shape_) numel_ *= n;
        stats_ = EncodeStats{};
        const std::size_t R = M.encoder().rank();
        const std::size_t D = ec.dims;

        subset_flat_ = flat;
        subset_idx_.resize(flat.size() * D);
        for (std::size_t k = 0; k < flat.size(); ++k) {
            std::size_t rem = flat[k];
            if (rem >= numel_)
                throw std::invalid_argument("subset index out of range");
            for (std::size_t d = D; d-- > 0;) {
                subset_idx_[k * D + d] = rem % point_shape_[d];
                rem /= point_shape_[d];
            }
        }

        H_ = DenseTensor({std::max<std::size_t>(flat.size(), 1), R});
        hidden_ = DenseTensor(
            {std::max<std::size_t>(flat.size(), 1), M.mlp().hidden_width});
        values_.assign(flat.size(), 0.0);

        if (ec.mode == EncoderMode::Decomposed) {
            axis_tables_.clear();
            for (std::size_t d = 0; d < D; ++d)
                axis_tables_.push_back(M.encoder().encode_axis_table(
                    M.params(), d, coords_.axes[d], &stats_));
            for (std::size_t k = 0; k < flat.size(); ++k) {
                double* h = H_.data() + k * R;
                const double* t0 =
                    axis_tables_[0].data() + subset_idx_[k * D] * R;
                for (std::size_t r = 0; r < R; ++r) h[r] = t0[r];
                for (std::size_t d = 1; d < D; ++d) {
                    const double* td =
                        axis_tables_[d].data() + subset_idx_[k * D + d] * R;
                    for (std::size_t r = 0; r < R; ++r) h[r] *= td[r];
                }
            }
        } else {
            std::vector<double> v(D);
            for (std::size_t k = 0; k < flat.size(); ++k) {
                for (std::size_t d = 0; d < D; ++d)
                    v[d] = coords_.axes[d][subset_idx_[k * D + d]];
                M.encoder().encode_point(M.params(), v,
                                         std::span<double>(H_.data() + k * R, R),
                                         &stats_);
            }
        }

        const std::size_t hw = M.mlp().hidden_width;
        for (std::size_t k = 0; k < flat.size(); ++k)
            values_[k] = M.mlp().forward(
                M.params(), std::span<const double>(H_.data() + k * R, R),
                std::span<double>(hidden_.data() + k * hw, hw));
        have_forward_ = true;
        have_loss_ = false;
        return values_;
    }

    // 1/2 sum_k (value_k - target_k)^2
    double loss_subset(const std::vector<double>& targets) {
        check_forward("loss_subset");
        if (!subset_mode_)
            throw std::logic_error("loss_subset: tape holds a full forward");
        if (targets.size() != values_.size())
            throw std::invalid_argument("loss_subset: target length mismatch");
        subset_residual_.resize(values_.size());
        double s = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            subset_residual_[k] = values_[k] - targets[k];
            s += subset_residual_[k] * subset_residual_[k];
        }
        s *= 0.5;
        if (!std::isfinite(s)) throw NonFiniteLossError("objective became non-finite");
        have_loss_ = true;
        return s;
    }

    void backward_subset() {
        check_forward("backward_subset");
        if (!subset_mode_ || !have_loss_)
            throw std::logic_error("backward_subset: no subset loss recorded");
        Model& M = *model_;
        const EncoderConfig& ec = M.config().encoder;
        const std::size_t R = M.encoder().rank();
        prepare_axis_grads();
        std::vector<double> dh(R), pre(ec.dims * R), suf(ec.dims * R);
        for (std::size_t k = 0; k < subset_flat_.size(); ++k) {
            const double dy = subset_residual_[k];
            if (dy != 0.0)
                backprop_point(k, subset_idx_.data() + k * ec.dims, dy, dh, pre, suf);
        }
        scatter_axis_grads();
    }

private:
    void check_forward(const char* op) const {
        if (!have_forward_)
            throw std::logic_error(std::string(op) +
                                   ": tape has no recorded forward pass");
    }

    void validate_terms(const LossTerms& t) const {
        require(t.prox_weight >= 0.0 && t.data_weight >= 0.0,
                "loss weights must be nonnegative");
        require(t.lambda1 >= 0.0 && t.lambda2 >= 0.0,
                "regularizer weights must be nonnegative");
        if (t.prox_weight > 0.0) {
            require(t.prox_target != nullptr, "prox term needs a target tensor");
            check_same_shape(*t.prox_target, V_, "prox target");
        }
        if (t.data_weight > 0.0) {
            require(t.op != nullptr && t.measurement != nullptr,
                    "data term needs an operator and a measurement");
            if (t.op->signal_shape() != V_.shape())
                throw std::invalid_argument("data term: operator signal shape mismatch");
        }
    }

    static double sq_diff(const DenseTensor& a, const DenseTensor& b) {
        check_same_shape(a, b, "sq_diff");
        double s = 0.0;
        for (std::size_t i = 0; i < a.numel(); ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        return s;
    }

    // ---- affine stage ---------------------------------------------------------

    void affine_forward() {
        Model& M = *model_;
        const AffineAdapter& A = M.adapter();
        const std::size_t n1 = point_shape_[0], n2 = point_shape_[1],
                          n3 = point_shape_[2];
        if (A.frames != n3)
            throw std::invalid_argument(
                "affine adapter frame count does not match the grid");
        for (std::size_t t = 0; t < n3; ++t) {
            const double canonical =
                static_cast<double>(t) / static_cast<double>(n3);
            if (coords_.axes[2][t] != canonical)
                throw std::invalid_argument(
                    "affine adapter requires the canonical temporal sampling t/n3");
        }
        const std::size_t R = M.encoder().rank();
        const double cx = 0.5 * static_cast<double>(n1 - 1);
        const double cy = 0.5 * static_cast<double>(n2 - 1);
        ft_.resize(n3);
        hx_.assign(n3, std::vector<double>(A.fx.hidden));
        hy_.assign(n3, std::vector<double>(A.fy.hidden));
        frames_.assign(n3, std::vector<double>(n1 * n2));
        V_ = DenseTensor(point_shape_);
        const ParamStore& store = M.params();
        for (std::size_t t = 0; t < n3; ++t) {
            const std::span<const double> h3(axis_tables_[2].data() + t * R, R);
            FrameTransform& ft = ft_[t];
            ft.scale = std::exp(store.value(A.log_scale)[t]);
            ft.angle = store.value(A.angle)[t];
            ft.raw_bx = A.fx.forward(store, h3, std::span<double>(hx_[t]));
            ft.raw_by = A.fy.forward(store, h3, std::span<double>(hy_[t]));
            ft.bx = 0.25 * static_cast<double>(n1) * std::tanh(ft.raw_bx);
            ft.by = 0.25 * static_cast<double>(n2) * std::tanh(ft.raw_by);
            std::vector<double>& frame = frames_[t];
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j)
                    frame[i * n2 + j] = L_(i, j, t);
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    double x, y;
                    affine_source_pos(ft, cx, cy, static_cast<double>(i),
                                      static_cast<double>(j), x, y);
                    V_(i, j, t) = bilinear_sample(frame.data(), n1, n2, x, y);
                }
        }
    }

    void affine_backward(const DenseTensor& dv, DenseTensor& dL) {
        Model& M = *model_;
        const AffineAdapter& A = M.adapter();
        ParamStore& store = M.params();
        const std::size_t n1 = point_shape_[0], n2 = point_shape_[1],
                          n3 = point_shape_[2];
        const std::size_t R = M.encoder().rank();
        const double cx = 0.5 * static_cast<double>(n1 - 1);
        const double cy = 0.5 * static_cast<double>(n2 - 1);
        std::vector<double> dframe(n1 * n2), dh3(R);
        for (std::size_t t = 0; t < n3; ++t) {
            const FrameTransform& ft = ft_[t];
            const std::vector<double>& frame = frames_[t];
            const double c = std::cos(ft.angle), sn = std::sin(ft.angle);
            const double S = ft.scale;
            double d_bx = 0.0, d_by = 0.0, d_theta = 0.0, d_ls = 0.0;
            std::fill(dframe.begin(), dframe.end(), 0.0);
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j) {
                    const double g = dv(i, j, t);
                    if (g == 0.0) continue;
                    double x, y;
                    affine_source_pos(ft, cx, cy, static_cast<double>(i),
                                      static_cast<double>(j), x, y);
                    bilinear_scatter(dframe.data(), n1, n2, x, y, g);
                    double gx, gy;
                    bilinear_coord_grad(frame.data(), n1, n2, x, y, gx, gy);
                    const double qx = static_cast<double>(i) - cx;
                    const double qy = static_cast<double>(j) - cy;
                    d_theta += g * (gx * S * (-sn * qx - c * qy) +
                                    gy * S * (c * qx - sn * qy));
                    d_ls += g * (gx * S * (c * qx - sn * qy) +
                                 gy * S * (sn * qx + c * qy));
                    d_bx += g * gx;
                    d_by += g * gy;
                }
            for (std::size_t i = 0; i < n1; ++i)
                for (std::size_t j = 0; j < n2; ++j)
                    dL(i, j, t) = dframe[i * n2 + j];
            store.grad(A.log_scale)[t] += d_ls;
            store.grad(A.angle)[t] += d_theta;
            const double tx = std::tanh(ft.raw_bx), ty = std::tanh(ft.raw_by);
            const double draw_x =
                d_bx * 0.25 * static_cast<double>(n1) * (1.0 - tx * tx);
            const double draw_y =
                d_by * 0.25 * static_cast<double>(n2) * (1.0 - ty * ty);
            std::fill(dh3.begin(), dh3.end(), 0.0);
            const std::span<const double> h3(axis_tables_[2].data() + t * R, R);
            A.fx.backward(store, h3, hx_[t], draw_x, std::span<double>(dh3));
            A.fy.backward(store, h3, hy_[t], draw_y, std::span<double>(dh3));
            double* da = axis_grads_[2].data() + t * R;
            for (std::size_t r = 0; r < R; ++r) da[r] += dh3[r];
        }
    }

    // ---- shared per-point reverse step ----------------------------------------

    void prepare_axis_grads() {
        const EncoderConfig& ec = model_->config().encoder;
        axis_grads_.clear();
        if (ec.mode != EncoderMode::Decomposed) return;
        for (std::size_t d = 0; d < ec.dims; ++d)
            axis_grads_.push_back(DenseTensor(axis_tables_[d].shape()));
    }

    void backprop_point(std::size_t row, const std::size_t* idx, double dy,
                        std::vector<double>& dh, std::vector<double>& pre,
                        std::vector<double>& suf) {
        Model& M = *model_;
        const EncoderConfig& ec = M.config().encoder;
        const std::size_t R = M.encoder().rank();
        const std::size_t hw = M.mlp().hidden_width;
        std::fill(dh.begin(), dh.end(), 0.0);
        M.mlp().backward(M.params(),
                         std::span<const double>(H_.data() + row * R, R),
                         std::span<const double>(hidden_.data() + row * hw, hw),
                         dy, std::span<double>(dh));
        if (ec.mode == EncoderMode::Decomposed) {
            const std::size_t D = ec.dims;
            // prefix/suffix products over the per-axis encoding rows, so each
            // axis gets dh * (product of the other axes)
            for (std::size_t r = 0; r < R; ++r) pre[r] = 1.0;
            for (std::size_t d = 1; d < D; ++d) {
                const double* prev = axis_tables_[d - 1].data() + idx[d - 1] * R;
                for (std::size_t r = 0; r < R; ++r)
                    pre[d * R + r] = pre[(d - 1) * R + r] * prev[r];
            }
            for (std::size_t r = 0; r < R; ++r) suf[(D - 1) * R + r] = 1.0;
            for (std::size_t d = D - 1; d-- > 0;) {
                const double* nxt = axis_tables_[d + 1].data() + idx[d + 1] * R;
                for (std::size_t r = 0; r < R; ++r)
                    suf[d * R + r] = suf[(d + 1) * R + r] * nxt[r];
            }
            for (std::size_t d = 0; d < D; ++d) {
                double* da = axis_grads_[d].data() + idx[d] * R;
                for (std::size_t r = 0; r < R; ++r)
                    da[r] += dh[r] * pre[d * R + r] * suf[d * R + r];
            }
        } else {
            std::vector<double> v(ec.dims);
            for (std::size_t d = 0; d < ec.dims; ++d)
                v[d] = coords_.axes[d][idx[d]];
            M.encoder().encode_point_backward(M.params(), v,
                                              std::span<const double>(dh));
        }
    }

    void scatter_axis_grads() {
        const EncoderConfig& ec = model_->config().encoder;
        if (ec.mode != EncoderMode::Decomposed) return;
        Model& M = *model_;
        const std::size_t R = M.encoder().rank();
        for (std::size_t d = 0; d < ec.dims; ++d)
            for (std::size_t i = 0; i < coords_.axes[d].size(); ++i)
                M.encoder().encode_axis_backward(
                    M.params(), d, coords_.axes[d][i],
                    std::span<const double>(axis_grads_[d].data() + i * R, R));
    }

    Model* model_;
    CoordinateGrid coords_;
    std::vector<std::size_t> point_shape_;
    std::size_t numel_ = 0;
    bool use_affine_ = false;
    bool subset_mode_ = false;
    bool have_forward_ = false;
    bool have_loss_ = false;
    EncodeStats stats_;

    std::vector<DenseTensor> axis_tables_;  // decomposed: per-axis n_d x R
    std::vector<DenseTensor> axis_grads_;
    DenseTensor H_;       // (points x R) encodings
    DenseTensor hidden_;  // (points x n1) post-activation
    DenseTensor L_;       // decoded tensor (pre-affine)
    DenseTensor V_;       // output

    // affine intermediates
    std::vector<FrameTransform> ft_;
    std::vector<std::vector<double>> hx_, hy_, frames_;

    // loss state
    LossTerms terms_;
    DenseTensor residual_;

    // subset state
    std::vector<std::size_t> subset_flat_, subset_idx_;
    std::vector<double> values_, subset_residual_;
};

// Convenience no-gradient full forward (single code path with the tape).
inline DenseTensor forward_full(Model& model, const CoordinateGrid& coords,
                                bool use_affine) {
    GradientTape tape(model);
    return tape.forward(coords, use_affine);
}

}  // namespace gridtd
