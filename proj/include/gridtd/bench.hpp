#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gridtd/adam.hpp"
#include "gridtd/autodiff.hpp"
#include "gridtd/decoder.hpp"
#include "gridtd/forward_models.hpp"
#include "gridtd/jobs.hpp"
#include "gridtd/metrics.hpp"
#include "gridtd/rng.hpp"
#include "gridtd/synth.hpp"
#include "gridtd/tensor.hpp"

namespace gridtd {

// ---- experiment reports ---------------------------------------------------

struct MethodMetrics {
    std::string label;
    double psnr_db = std::numeric_limits<double>::quiet_NaN();
    double ssim_score = std::numeric_limits<double>::quiet_NaN();
    double seconds = std::numeric_limits<double>::quiet_NaN();
    std::size_t grid_params = 0;
    std::size_t total_params = 0;
};

// Every number in `rows` is traceable to (config snapshot, seed); `tensors`
// optionally carries the per-row reconstructions so determinism checks can
// compare the actual results, not just the summary metrics.
struct ExperimentReport {
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<MethodMetrics> rows;
    std::vector<DenseTensor> tensors;  // empty, or one per row
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_report_csv(std::ostream& os, const ExperimentReport& rep) {
    os << "# seed=" << rep.seed << "\n";
    for (const auto& kv : rep.config)
        os << "# " << kv.first << "=" << kv.second << "\n";
    os << "label,psnr_db,ssim,seconds,grid_params,total_params\n";
    for (const MethodMetrics& r : rep.rows)
        os << r.label << ',' << detail::fmt_g(r.psnr_db) << ','
           << detail::fmt_g(r.ssim_score) << ',' << detail::fmt_g(r.seconds)
           << ',' << r.grid_params << ',' << r.total_params << "\n";
}

inline void write_report_csv(const std::string& path,
                             const ExperimentReport& rep) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_report_csv: cannot open " + path);
    write_report_csv(os, rep);
    if (!os) throw std::runtime_error("write_report_csv: write failed " + path);
}

// ---- empirical Lipschitz check --------------------------------------------

struct LipschitzReport {
    double bound = 0.0;      // from the model's plug-in formula
    double max_ratio = 0.0;  // max |f(v1)-f(v2)| / ||v1-v2||_1 over the trials
    std::size_t trials = 0;
    std::size_t violations = 0;
    bool pass() const { return violations == 0; }
};

// The difference-quotient bound assumes every grid row has L1 norm <= 1;
// training does not enforce that, so rows are rescaled (only downward) before
// testing.
inline void project_grid_rows_l1(Model& m) {
    ParamStore& store = m.params();
    for (std::size_t id = 0; id < store.block_count(); ++id) {
        ParamBlock& b = store.block(id);
        if (b.kind != ParamKind::Grid) continue;
        const std::size_t cols = b.shape.back();
        const std::size_t rows = b.size() / cols;
        for (std::size_t r = 0; r < rows; ++r) {
            double l1 = 0.0;
            for (std::size_t c = 0; c < cols; ++c)
                l1 += std::abs(b.value[r * cols + c]);
            if (l1 > 1.0)
                for (std::size_t c = 0; c < cols; ++c)
                    b.value[r * cols + c] /= l1;
        }
    }
}

inline LipschitzReport lipschitz_empirical_test(const ModelConfig& mc,
                                                std::size_t trials,
                                                std::uint64_t seed) {
    ModelConfig cfg = mc;
    cfg.seed = seed;
    cfg.affine_frames = 0;  // the bound concerns the coordinate network itself
    Model m = Model::build(cfg);

    // replace the near-zero build-time grids with O(1) rows so the check is
    // exercised away from the origin; streams are keyed by block order, which
    // matches across modes when the block layout does
    Rng grid_rng(seed, "bench/lipschitz/grid");
    ParamStore& store = m.params();
    for (std::size_t id = 0; id < store.block_count(); ++id) {
        ParamBlock& b = store.block(id);
        if (b.kind != ParamKind::Grid) continue;
        for (double& v : b.value) v = grid_rng.uniform(-1.0, 1.0);
    }
    project_grid_rows_l1(m);

    LipschitzReport rep;
    rep.bound = m.lipschitz_bound();
    rep.trials = trials;
    Rng pair_rng(seed, "bench/lipschitz/pairs");
    const std::size_t D = cfg.encoder.dims;
    std::vector<double> v1(D), v2(D);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t d = 0; d < D; ++d) v1[d] = pair_rng.uniform();
        for (std::size_t d = 0; d < D; ++d) v2[d] = pair_rng.uniform();
        const double df = std::abs(m.eval_point(v1) - m.eval_point(v2));
        double dist = 0.0;
        for (std::size_t d = 0; d < D; ++d) dist += std::abs(v1[d] - v2[d]);
        if (df > rep.bound * dist) ++rep.violations;
        if (dist > 0.0) rep.max_ratio = std::max(rep.max_ratio, df / dist);
    }
    return rep;
}

// ---- direct fitting on observed entries ------------------------------------

struct FitResult {
    DenseTensor recon;
    double seconds = 0.0;    // the iteration loop only
    double final_loss = 0.0;
};

// Plain Adam on 1/2 sum_observed (f(v_i) - x_i)^2 — the toy-inpainting
// training loop used by the comparison experiments (no ADMM splitting).
inline FitResult fit_observed_entries(Model& m, const DenseTensor& truth,
                                      const std::vector<std::size_t>& observed,
                                      std::size_t iters,
                                      const AdamConfig& adam_cfg) {
    const CoordinateGrid coords = uniform_coordinates(truth.shape());
    std::vector<double> targets(observed.size());
    for (std::size_t k = 0; k < observed.size(); ++k) {
        if (observed[k] >= truth.numel())
            throw std::invalid_argument("fit_observed_entries: index out of range");
        targets[k] = truth.data()[observed[k]];
    }
    GradientTape tape(m);
    AdamState adam(m.params(), adam_cfg);
    FitResult fr;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t it = 0; it < iters; ++it) {
        tape.forward_subset(coords, observed);
        fr.final_loss = tape.loss_subset(targets);
        tape.backward_subset();
        adam.step(m.params());
    }
    const auto t1 = std::chrono::steady_clock::now();
    fr.seconds = std::chrono::duration<double>(t1 - t0).count();
    fr.recon = tape.forward(coords, false);
    return fr;
}

// ---- dimension robustness ---------------------------------------------------

// One shared hyperparameter set for every (order, sampling rate, mode) cell;
// only the phantom changes with the order.
struct DimRobustnessOptions {
    std::vector<std::size_t> dims_list = {1, 2, 3};
    std::vector<double> sampling_rates = {0.2, 0.1, 0.05};
    std::vector<std::size_t> shape1 = {4096};
    std::vector<std::size_t> shape2 = {64, 64};
    std::vector<std::size_t> shape3 = {32, 32, 32};
    std::size_t levels = 4;
    std::size_t features = 2;
    std::size_t n_min = 2;
    std::size_t n_max = 32;
    std::size_t table_len = std::size_t{1} << 17;
    std::size_t mlp_hidden = 64;
    std::size_t iters = 3000;
    AdamConfig adam;
    std::size_t threads = 1;  // runs are independent seeded jobs
};

inline DenseTensor dim_phantom(const std::vector<std::size_t>& shape,
                               std::uint64_t seed) {
    switch (shape.size()) {
        case 1: return sum_of_sinusoids_1d(shape[0], seed);
        case 2: return smooth_bumps_2d(shape[0], shape[1], seed);
        case 3: return separable_smooth_3d(shape[0], shape[1], shape[2], seed);
        default:
            throw std::invalid_argument("dim_phantom: order must be 1, 2, or 3");
    }
}

inline ExperimentReport dimension_robustness_experiment(
    std::uint64_t seed, const DimRobustnessOptions& opt = {}) {
    ExperimentReport rep;
    rep.seed = seed;
    rep.config = {
        {"experiment", "dimension-robustness"},
        {"levels", std::to_string(opt.levels)},
        {"features", std::to_string(opt.features)},
        {"n_min", std::to_string(opt.n_min)},
        {"n_max", std::to_string(opt.n_max)},
        {"table_len", std::to_string(opt.table_len)},
        {"mlp_hidden", std::to_string(opt.mlp_hidden)},
        {"iters", std::to_string(opt.iters)},
    };

    struct Cell {
        std::size_t dims;
        double sr;
        EncoderMode mode;
        const DenseTensor* truth;
        std::vector<std::size_t> observed;
    };
    std::vector<DenseTensor> phantoms;
    std::vector<Cell> cells;
    for (const std::size_t D : opt.dims_list) {
        const std::vector<std::size_t>& shape =
            D == 1 ? opt.shape1 : D == 2 ? opt.shape2 : opt.shape3;
        if (shape.size() != D)
            throw std::invalid_argument("dimension robustness: shape order mismatch");
        phantoms.push_back(dim_phantom(shape, seed));
    }
    for (std::size_t di = 0; di < opt.dims_list.size(); ++di) {
        const std::size_t D = opt.dims_list[di];
        for (const double sr : opt.sampling_rates) {
            // per-instance sub-seed so each (order, rate) cell has its own mask
            const std::uint64_t mask_seed =
                seed + 1000 * D + static_cast<std::uint64_t>(sr * 1000.0);
            const std::vector<std::size_t> obs = make_inpainting_indices(
                phantoms[di].shape(), sr, mask_seed);
            for (const EncoderMode mode :
                 {EncoderMode::Dense, EncoderMode::Decomposed}) {
                Cell c;
                c.dims = D;
                c.sr = sr;
                c.mode = mode;
                c.truth = &phantoms[di];
                c.observed = obs;
                cells.push_back(std::move(c));
            }
        }
    }

    rep.rows.resize(cells.size());
    rep.tensors.resize(cells.size());
    run_jobs(cells.size(), opt.threads, [&](std::size_t i) {
        const Cell& c = cells[i];
        ModelConfig mc;
        mc.encoder.mode = c.mode;
        mc.encoder.dims = c.dims;
        mc.encoder.levels = opt.levels;
        mc.encoder.features = opt.features;
        mc.encoder.n_min = opt.n_min;
        mc.encoder.n_max = opt.n_max;
        mc.encoder.table_len = opt.table_len;
        mc.mlp_hidden = opt.mlp_hidden;
        mc.seed = seed;
        Model m = Model::build(mc);
        const FitResult fit =
            fit_observed_entries(m, *c.truth, c.observed, opt.iters, opt.adam);

        MethodMetrics& row = rep.rows[i];
        char label[64];
        std::snprintf(label, sizeof label, "D%zu/sr%.2f/%s", c.dims, c.sr,
                      c.mode == EncoderMode::Dense ? "dense" : "decomposed");
        row.label = label;
        row.psnr_db = psnr(fit.recon, *c.truth);
        const auto& sh = c.truth->shape();
        const bool ssim_ok =
            sh.size() >= 2 && std::all_of(sh.begin(), sh.end(),
                                          [](std::size_t n) { return n >= 11; });
        if (ssim_ok) row.ssim_score = ssim(fit.recon, *c.truth);
        row.seconds = fit.seconds;
        row.grid_params = m.params().total_params(ParamKind::Grid);
        row.total_params = m.params().total_params();
        rep.tensors[i] = std::move(fit.recon);
    });
    return rep;
}

// Convenience lookup: PSNR of a labeled row.
inline const MethodMetrics& report_row(const ExperimentReport& rep,
                                       const std::string& label) {
    for (const MethodMetrics& r : rep.rows)
        if (r.label == label) return r;
    throw std::invalid_argument("report has no row labeled " + label);
}

// ---- efficiency -------------------------------------------------------------

struct EfficiencyOptions {
    double sampling_rate = 0.02;
    std::size_t levels = 6;
    std::size_t features = 1;
    std::size_t n_min = 8;
    std::size_t n_max = 160;
    std::size_t table_len = std::size_t{1} << 22;  // generous: nothing hashes
    std::size_t mlp_hidden = 16;
    AdamConfig adam;
};

struct EfficiencyReport {
    ExperimentReport summary;  // rows: dense, decomposed (with recon tensors)
    // one instrumented full-grid forward per mode, against the closed-form
    // interpolation counts
    std::size_t dense_fetches = 0;
    std::size_t decomposed_fetches = 0;
    std::size_t expected_dense_fetches = 0;
    std::size_t expected_decomposed_fetches = 0;
    double time_ratio = 0.0;        // dense seconds / decomposed seconds
    double grid_param_ratio = 0.0;  // dense grid params / decomposed grid params
};

inline EfficiencyReport efficiency_benchmark(std::size_t n, std::size_t D,
                                             std::size_t iters,
                                             std::uint64_t seed,
                                             const EfficiencyOptions& opt = {}) {
    if (n < 2 || D < 1 || D > 3)
        throw std::invalid_argument("efficiency_benchmark: need n >= 2, D in 1..3");
    const std::vector<std::size_t> shape(D, n);
    const DenseTensor truth = dim_phantom(shape, seed);
    const std::vector<std::size_t> observed =
        make_inpainting_indices(shape, opt.sampling_rate, seed + 1);

    EfficiencyReport rep;
    rep.summary.seed = seed;
    rep.summary.config = {
        {"experiment", "efficiency"},
        {"n", std::to_string(n)},
        {"dims", std::to_string(D)},
        {"iters", std::to_string(iters)},
        {"sampling_rate", detail::fmt_g(opt.sampling_rate)},
        {"levels", std::to_string(opt.levels)},
        {"features", std::to_string(opt.features)},
        {"n_min", std::to_string(opt.n_min)},
        {"n_max", std::to_string(opt.n_max)},
        {"table_len", std::to_string(opt.table_len)},
        {"mlp_hidden", std::to_string(opt.mlp_hidden)},
    };

    const CoordinateGrid coords = uniform_coordinates(shape);
    double secs[2] = {0.0, 0.0};
    std::size_t grid_params[2] = {0, 0};
    for (const EncoderMode mode : {EncoderMode::Dense, EncoderMode::Decomposed}) {
        ModelConfig mc;
        mc.encoder.mode = mode;
        mc.encoder.dims = D;
        mc.encoder.levels = opt.levels;
        mc.encoder.features = opt.features;
        mc.encoder.n_min = opt.n_min;
        mc.encoder.n_max = opt.n_max;
        mc.encoder.table_len = opt.table_len;
        mc.mlp_hidden = opt.mlp_hidden;
        mc.seed = seed;
        Model m = Model::build(mc);
        const bool dense = mode == EncoderMode::Dense;

        // instrumented full-grid forward (outside the timed loop)
        {
            GradientTape tape(m);
            tape.forward(coords, false);
            if (dense)
                rep.dense_fetches = tape.stats().corner_fetches;
            else
                rep.decomposed_fetches = tape.stats().corner_fetches;
        }

        const FitResult fit =
            fit_observed_entries(m, truth, observed, iters, opt.adam);
        MethodMetrics row;
        row.label = dense ? "dense" : "decomposed";
        row.psnr_db = psnr(fit.recon, truth);
        row.seconds = fit.seconds;
        row.grid_params = m.params().total_params(ParamKind::Grid);
        row.total_params = m.params().total_params();
        secs[dense ? 0 : 1] = fit.seconds;
        grid_params[dense ? 0 : 1] = row.grid_params;
        rep.summary.rows.push_back(std::move(row));
        rep.summary.tensors.push_back(fit.recon);
    }

    std::size_t numel = 1, axis_sum = 0;
    for (const std::size_t nd : shape) {
        numel *= nd;
        axis_sum += nd;
    }
    rep.expected_dense_fetches =
        numel * opt.levels * (std::size_t{1} << D);
    rep.expected_decomposed_fetches = axis_sum * opt.levels * 2;
    rep.time_ratio = secs[1] > 0.0 ? secs[0] / secs[1] : 0.0;
    rep.grid_param_ratio =
        grid_params[1] > 0
            ? static_cast<double>(grid_params[0]) / static_cast<double>(grid_params[1])
            : 0.0;
    return rep;
}

}  // namespace gridtd
