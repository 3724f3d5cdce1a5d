#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gridtd/adam.hpp"
#include "gridtd/autodiff.hpp"
#include "gridtd/decoder.hpp"
#include "gridtd/forward_models.hpp"
#include "gridtd/metrics.hpp"
#include "gridtd/regularizers.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

struct SolverConfig {
    std::size_t outer_iters = 100;  // K
    std::size_t inner_steps = 50;   // Adam steps per V-update
    std::size_t init_steps = 0;     // network warm start before iteration 1
    double rho0 = 1e-2;
    double kappa = 1.1;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    bool use_affine = false;
    bool early_stop = false;
    double early_stop_rel = 1e-4;  // stop when ||X-V|| < rel*||X||
    std::uint64_t seed = 0;

    void validate() const {
        require(outer_iters >= 1, "outer_iters must be >= 1");
        require(inner_steps >= 1, "inner_steps must be >= 1");
        require(rho0 > 0.0, "rho0 must be positive");
        require(kappa > 1.0, "kappa must exceed 1");
        require(lambda1 >= 0.0 && lambda2 >= 0.0,
                "regularizer weights must be nonnegative");
        require(early_stop_rel > 0.0, "early_stop_rel must be positive");
    }
};

// The consensus triple plus penalty state.
struct AdmmState {
    DenseTensor x, v, u;
    double rho = 0.0;
    double kappa = 1.0;
    std::size_t k = 0;  // completed outer iterations
};

// U <- U + X - V;  rho <- kappa * rho.
inline void multiplier_update(AdmmState& s) {
    check_same_shape(s.x, s.v, "multiplier_update");
    check_same_shape(s.x, s.u, "multiplier_update");
    for (std::size_t i = 0; i < s.u.numel(); ++i) s.u[i] += s.x[i] - s.v[i];
    s.rho *= s.kappa;
    ++s.k;
}

// rho_k * ||V^{k+1} - (X^{k+1} + U^k)||_F: bounded over the run when the
// V-subproblem is solved accurately enough (fixed-point prerequisite).
inline double boundedness_monitor(double rho, const DenseTensor& v,
                                  const DenseTensor& x, const DenseTensor& u_prev) {
    check_same_shape(v, x, "boundedness_monitor");
    check_same_shape(v, u_prev, "boundedness_monitor");
    double s = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) {
        const double d = v[i] - (x[i] + u_prev[i]);
        s += d * d;
    }
    return rho * std::sqrt(s);
}

struct IterationRecord {
    std::size_t k = 0;   // 1-based outer iteration
    double rho = 0.0;    // penalty used this iteration
    double fidelity = 0.0;  // 1/2 ||op(X) - Y||^2
    double tv_val = 0.0;
    double sstv_val = 0.0;
    double primal_res = 0.0;  // ||X - V||_F
    double dx = 0.0, dv = 0.0, du = 0.0;  // successive-iterate norms
    double alpha2 = 0.0;                  // boundedness monitor
    double inner_first = 0.0, inner_last = 0.0;  // V-subproblem loss endpoints
    double psnr_db = std::numeric_limits<double>::quiet_NaN();
};

struct AdmmResult {
    DenseTensor x, v;
    std::vector<IterationRecord> history;
    bool early_stopped = false;
};

// Runs `steps` Adam iterations on
//   rho/2 ||V_Theta - target||^2 + lambda1 TV + lambda2 SSTV
// and returns the refreshed V = forward(Theta).  Parameters warm-start from
// their current values; gradients are consumed by the optimizer steps.
inline DenseTensor v_subproblem(Model& model, GradientTape& tape, AdamState& adam,
                                const CoordinateGrid& coords,
                                const DenseTensor& target, double rho,
                                double lambda1, double lambda2, std::size_t steps,
                                bool use_affine, double* first_loss = nullptr,
                                double* last_loss = nullptr) {
    require(steps >= 1, "v_subproblem needs at least one step");
    LossTerms terms;
    terms.prox_weight = rho;
    terms.prox_target = &target;
    terms.lambda1 = lambda1;
    terms.lambda2 = lambda2;
    for (std::size_t s = 0; s < steps; ++s) {
        tape.forward(coords, use_affine);
        const LossBreakdown b = tape.loss(terms);
        if (first_loss && s == 0) *first_loss = b.total;
        if (last_loss) *last_loss = b.total;
        tape.backward();
        adam.step(model.params());
    }
    return tape.forward(coords, use_affine);
}

// The plug-and-play ADMM loop: closed-form X-update from the operator,
// network V-update, multiplier update, geometric rho growth.
inline AdmmResult admm_run(const SolverConfig& cfg, const MeasurementOp& op,
                           const DenseTensor& y, Model& model,
                           const AdamConfig& adam_cfg,
                           const DenseTensor* reference = nullptr,
                           double peak = 1.0) {
    cfg.validate();
    adam_cfg.validate();
    if (cfg.use_affine && !model.has_adapter())
        throw std::invalid_argument("solver: use_affine set but model has no adapter");
    const std::vector<std::size_t>& shape = op.signal_shape();
    if (y.shape() != op.measurement_shape())
        throw std::invalid_argument("solver: measurement shape mismatch");
    if (reference && reference->shape() != shape)
        throw std::invalid_argument("solver: reference shape mismatch");
    if (model.config().encoder.dims != shape.size())
        throw std::invalid_argument("solver: model order does not match signal");

    const CoordinateGrid coords = uniform_coordinates(shape);
    AdmmState st;
    st.x = DenseTensor(shape);
    st.v = DenseTensor(shape);
    st.u = DenseTensor(shape);
    st.rho = cfg.rho0;
    st.kappa = cfg.kappa;

    GradientTape tape(model);
    AdamState adam(model.params(), adam_cfg);

    AdmmResult res;
    res.history.reserve(cfg.outer_iters);
    DenseTensor x_prev = st.x, v_prev = st.v, u_prev = st.u;
    DenseTensor target(shape);

    // Optional warm start: pre-fit the network to the first X-target so the
    // per-iteration step budget is spent tracking the consensus, not climbing
    // out of the random initialization.  The loop below is unchanged; its
    // first X-update simply sees a trained V instead of zeros.
    if (cfg.init_steps > 0) {
        const DenseTensor x0 = op.x_update(st.v, st.u, y, st.rho);
        st.v = v_subproblem(model, tape, adam, coords, x0, st.rho, cfg.lambda1,
                            cfg.lambda2, cfg.init_steps, cfg.use_affine);
        v_prev = st.v;
    }

    for (std::size_t k = 1; k <= cfg.outer_iters; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.rho = st.rho;

        st.x = op.x_update(st.v, st.u, y, st.rho);

        for (std::size_t i = 0; i < target.numel(); ++i)
            target[i] = st.x[i] + st.u[i];
        st.v = v_subproblem(model, tape, adam, coords, target, st.rho,
                            cfg.lambda1, cfg.lambda2, cfg.inner_steps,
                            cfg.use_affine, &rec.inner_first, &rec.inner_last);

        rec.alpha2 = boundedness_monitor(st.rho, st.v, st.x, st.u);

        {
            DenseTensor yhat = op.forward(st.x);
            double s = 0.0;
            for (std::size_t i = 0; i < yhat.numel(); ++i) {
                const double d = yhat[i] - y[i];
                s += d * d;
            }
            rec.fidelity = 0.5 * s;
        }
        if (shape.size() == 3 && shape[0] >= 2 && shape[1] >= 2) {
            rec.tv_val = tv(st.v);
            rec.sstv_val = shape[2] >= 2 ? sstv(st.v) : 0.0;
        }
        rec.primal_res = norm_of_diff(st.x, st.v);
        rec.dx = norm_of_diff(st.x, x_prev);
        rec.dv = norm_of_diff(st.v, v_prev);
        rec.du = 0.0;  // filled after the multiplier update
        if (reference) rec.psnr_db = psnr(st.x, *reference, peak);

        x_prev = st.x;
        v_prev = st.v;
        u_prev = st.u;
        multiplier_update(st);
        rec.du = norm_of_diff(st.u, u_prev);
        res.history.push_back(rec);

        if (cfg.early_stop &&
            rec.primal_res < cfg.early_stop_rel * fro_norm(st.x)) {
            res.early_stopped = true;
            break;
        }
    }
    res.x = st.x;
    res.v = st.v;
    return res;
}

}  // namespace gridtd
