#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gridtd/bench.hpp"
#include "gridtd/config.hpp"
#include "gridtd/jobs.hpp"
#include "gridtd/png.hpp"

namespace gridtd {

// Paths (relative to out_dir) of everything a run wrote, in write order.
struct RunArtifacts {
    std::string out_dir;
    std::vector<std::string> files;
};

namespace detail {

inline std::string sanitize_label(std::string s) {
    for (char& c : s)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

// One staged artifact; nothing touches the disk until every task step has
// finished, so a failed run leaves no partial outputs behind.
struct Artifact {
    std::string name;
    enum class Kind { Text, Tensor, Png } kind;
    std::string text;
    DenseTensor tensor;
    std::vector<unsigned char> png;
};

struct ArtifactSink {
    std::vector<Artifact> staged;
    // file,lo,hi rows describing how each preview was quantized
    std::string preview_rows;

    void add_text(const std::string& name, std::string text) {
        staged.push_back({name, Artifact::Kind::Text, std::move(text), {}, {}});
    }
    void add_tensor(const std::string& name, DenseTensor t) {
        staged.push_back({name, Artifact::Kind::Tensor, {}, std::move(t), {}});
    }
    // previews use the frame's own range so structure stays visible
    void add_preview(const std::string& name, const DenseTensor& frame) {
        double lo = frame[0], hi = frame[0];
        for (std::size_t i = 0; i < frame.numel(); ++i) {
            lo = std::min(lo, frame[i]);
            hi = std::max(hi, frame[i]);
        }
        const PngScale scale{lo, hi};
        std::vector<unsigned char> gray =
            quantize_gray(frame.data(), frame.numel(), scale);
        std::vector<unsigned char> png =
            encode_png_gray(gray, frame.shape()[1], frame.shape()[0]);
        staged.push_back({name, Artifact::Kind::Png, {}, {}, std::move(png)});
        char row[160];
        std::snprintf(row, sizeof row, "%s,%.17g,%.17g\n", name.c_str(), scale.lo,
                      scale.hi);
        preview_rows += row;
    }
    // middle frame for volumes, the image itself for matrices, skipped for 1-D
    void add_preview_any(const std::string& name, const DenseTensor& t) {
        if (t.order() == 2) add_preview(name, t);
        else if (t.order() == 3) add_preview(name, frame_of(t, t.shape()[2] / 2));
    }

    RunArtifacts flush(const std::string& out_dir) {
        if (!preview_rows.empty())
            add_text("previews.csv", "file,lo,hi\n" + preview_rows);
        const std::filesystem::path root(out_dir);
        std::filesystem::create_directories(root);
        RunArtifacts out;
        out.out_dir = out_dir;
        for (const Artifact& a : staged) {
            const std::filesystem::path p = root / a.name;
            switch (a.kind) {
                case Artifact::Kind::Text: write_text(p, a.text); break;
                case Artifact::Kind::Tensor: write_tensor(p.string(), a.tensor); break;
                case Artifact::Kind::Png: {
                    std::ofstream os(p, std::ios::binary);
                    if (!os)
                        throw std::runtime_error("cannot open for writing: " +
                                                 p.string());
                    os.write(reinterpret_cast<const char*>(a.png.data()),
                             static_cast<std::streamsize>(a.png.size()));
                    if (!os) throw std::runtime_error("write failed: " + p.string());
                    break;
                }
            }
            out.files.push_back(a.name);
        }
        return out;
    }
};

inline std::string iterations_csv(const std::vector<IterationRecord>& hist) {
    std::string out =
        "k,rho,fidelity,tv,sstv,primal_res,dx,dv,du,monitor,inner_first,"
        "inner_last,psnr_db\n";
    char row[512];
    for (const IterationRecord& r : hist) {
        std::snprintf(row, sizeof row,
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g\n",
                      r.k, r.rho, r.fidelity, r.tv_val, r.sstv_val, r.primal_res,
                      r.dx, r.dv, r.du, r.alpha2, r.inner_first, r.inner_last,
                      r.psnr_db);
        out += row;
    }
    return out;
}

inline std::string report_csv_text(const ExperimentReport& rep) {
    std::ostringstream os;
    write_report_csv(os, rep);
    return os.str();
}

inline bool ssim_defined(const DenseTensor& t) {
    if (t.order() < 2) return false;
    for (const std::size_t n : t.shape())
        if (n < 11) return false;  // metric window
    return true;
}

}  // namespace detail

inline std::string manifest_text(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, value] : config_entries(cfg))
        out += key + "=" + value + "\n";
    return out;
}

// Default synthetic scenes when no input tensor is given.  The video scene is
// a square of a third of the width, starting an eighth in, drifting one pixel
// per frame along both axes.
inline DenseTensor default_scene(const RunConfig& cfg) {
    if (cfg.task == TaskKind::VideoSci) {
        const double side =
            std::max<double>(1.0, static_cast<double>(cfg.dims[0] / 3));
        return moving_square_video(cfg.dims[0], cfg.dims[1], cfg.dims[2],
                                   static_cast<double>(cfg.dims[0] / 8),
                                   static_cast<double>(cfg.dims[1] / 8), 1.0, 1.0,
                                   side);
    }
    return dim_phantom(cfg.dims, cfg.seed);
}

namespace detail {

inline RunArtifacts run_reconstruction(const RunConfig& cfg, DenseTensor truth) {
    Model model = Model::build(cfg.model_config());
    SolverConfig sc = cfg.solver;
    sc.use_affine = cfg.affine;
    sc.seed = cfg.seed;

    ArtifactSink sink;
    sink.add_text("manifest.cfg", manifest_text(cfg));

    std::unique_ptr<MeasurementOp> op;
    switch (cfg.task) {
        case TaskKind::Inpaint: {
            const std::vector<std::size_t> observed =
                make_inpainting_indices(cfg.dims, cfg.sr, cfg.seed);
            DenseTensor indicator(cfg.dims);
            for (const std::size_t i : observed) indicator[i] = 1.0;
            sink.add_tensor("observed_mask.gtd1", std::move(indicator));
            op = std::make_unique<InpaintingOperator>(cfg.dims, observed);
            break;
        }
        case TaskKind::VideoSci: {
            DenseTensor masks =
                make_bernoulli_masks(cfg.dims, cfg.bernoulli_p, cfg.seed);
            op = std::make_unique<VideoSciOperator>(masks);
            sink.add_tensor("masks.gtd1", std::move(masks));
            break;
        }
        case TaskKind::SpectralSci: {
            DenseTensor masks =
                make_bernoulli_masks(cfg.dims, cfg.bernoulli_p, cfg.seed);
            op = std::make_unique<SpectralSciOperator>(masks, cfg.shift_step);
            sink.add_tensor("masks.gtd1", std::move(masks));
            break;
        }
        default:
            throw std::logic_error("run_reconstruction: not a reconstruction task");
    }

    DenseTensor y = op->forward(truth);
    if (cfg.noise_sigma > 0.0) add_gaussian_noise(y, cfg.noise_sigma, cfg.seed);

    const auto t0 = std::chrono::steady_clock::now();
    const AdmmResult res = admm_run(sc, *op, y, model, AdamConfig{}, &truth);
    const auto t1 = std::chrono::steady_clock::now();

    ExperimentReport summary;
    summary.seed = cfg.seed;
    summary.config = {{"task", task_name(cfg.task)}};
    MethodMetrics row;
    row.label = task_name(cfg.task);
    row.psnr_db = psnr(res.x, truth);
    if (ssim_defined(truth)) row.ssim_score = ssim(res.x, truth);
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    row.grid_params = model.params().total_params(ParamKind::Grid);
    row.total_params = model.params().total_params();
    summary.rows.push_back(row);

    sink.add_tensor("truth.gtd1", truth);
    sink.add_tensor("measurement.gtd1", y);
    sink.add_tensor("recon.gtd1", res.x);
    sink.add_text("iterations.csv", iterations_csv(res.history));
    sink.add_text("summary.csv", report_csv_text(summary));
    sink.add_preview_any("truth.png", truth);
    sink.add_preview_any("recon.png", res.x);
    if (y.order() == 2) sink.add_preview("measurement.png", y);
    return sink.flush(cfg.out_dir);
}

inline RunArtifacts run_bench_dim(const RunConfig& cfg) {
    DimRobustnessOptions opt;
    opt.threads = worker_thread_count();
    const ExperimentReport rep = dimension_robustness_experiment(cfg.seed, opt);
    ArtifactSink sink;
    sink.add_text("manifest.cfg", manifest_text(cfg));
    sink.add_text("report.csv", report_csv_text(rep));
    for (std::size_t i = 0; i < rep.rows.size(); ++i)
        sink.add_tensor("recon_" + sanitize_label(rep.rows[i].label) + ".gtd1",
                        rep.tensors[i]);
    return sink.flush(cfg.out_dir);
}

inline RunArtifacts run_bench_efficiency(const RunConfig& cfg) {
    EfficiencyReport rep = efficiency_benchmark(cfg.bench_n, cfg.dims.size(),
                                                cfg.bench_iters, cfg.seed);
    rep.summary.config.insert(
        rep.summary.config.end(),
        {
            {"dense_fetches", std::to_string(rep.dense_fetches)},
            {"decomposed_fetches", std::to_string(rep.decomposed_fetches)},
            {"expected_dense_fetches", std::to_string(rep.expected_dense_fetches)},
            {"expected_decomposed_fetches",
             std::to_string(rep.expected_decomposed_fetches)},
            {"time_ratio", fmt_g(rep.time_ratio)},
            {"grid_param_ratio", fmt_g(rep.grid_param_ratio)},
        });
    ArtifactSink sink;
    sink.add_text("manifest.cfg", manifest_text(cfg));
    sink.add_text("report.csv", report_csv_text(rep.summary));
    for (std::size_t i = 0; i < rep.summary.rows.size(); ++i)
        sink.add_tensor("recon_" + sanitize_label(rep.summary.rows[i].label) +
                            ".gtd1",
                        rep.summary.tensors[i]);
    return sink.flush(cfg.out_dir);
}

inline RunArtifacts run_lipschitz_check(const RunConfig& cfg) {
    std::string csv = "mode,bound,max_ratio,trials,violations,pass\n";
    char row[256];
    for (const EncoderMode mode : {EncoderMode::Dense, EncoderMode::Decomposed}) {
        ModelConfig mc = cfg.model_config();
        mc.encoder.mode = mode;
        mc.affine_frames = 0;  // the bound concerns the coordinate network
        const LipschitzReport rep =
            lipschitz_empirical_test(mc, cfg.lipschitz_trials, cfg.seed);
        std::snprintf(row, sizeof row, "%s,%.17g,%.17g,%zu,%zu,%d\n",
                      mode == EncoderMode::Dense ? "dense" : "decomposed",
                      rep.bound, rep.max_ratio, rep.trials, rep.violations,
                      rep.pass() ? 1 : 0);
        csv += row;
    }
    ArtifactSink sink;
    sink.add_text("manifest.cfg", manifest_text(cfg));
    sink.add_text("lipschitz.csv", csv);
    return sink.flush(cfg.out_dir);
}

}  // namespace detail

// Executes the configured task.  Validates the config and loads any input
// tensor before producing a single artifact, so failures leave out_dir
// untouched.  Throws std::invalid_argument for config/input problems and
// NonFiniteLossError if the objective diverges.
inline RunArtifacts run_task(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    cfg.validate();

    const bool recon_task = cfg.task == TaskKind::Inpaint ||
                            cfg.task == TaskKind::VideoSci ||
                            cfg.task == TaskKind::SpectralSci;
    DenseTensor truth;
    if (recon_task) {
        if (!cfg.input_path.empty()) {
            try {
                truth = read_tensor(cfg.input_path);
            } catch (const std::exception& e) {
                throw std::invalid_argument("run.input: " + std::string(e.what()));
            }
            cfg.dims = truth.shape();  // the file's shape wins
            cfg.validate();
        } else {
            truth = default_scene(cfg);
        }
    }

    switch (cfg.task) {
        case TaskKind::Inpaint:
        case TaskKind::VideoSci:
        case TaskKind::SpectralSci:
            return detail::run_reconstruction(cfg, std::move(truth));
        case TaskKind::BenchDim:
            return detail::run_bench_dim(cfg);
        case TaskKind::BenchEfficiency:
            return detail::run_bench_efficiency(cfg);
        case TaskKind::LipschitzCheck:
            return detail::run_lipschitz_check(cfg);
    }
    throw std::logic_error("run_task: bad task enum");
}

// ---- scene generation ("synth") ---------------------------------------------

enum class SceneKind { MovingSquare, Phantom, SrMask, BernoulliMasks };

inline SceneKind parse_scene(const std::string& s) {
    if (s == "moving-square") return SceneKind::MovingSquare;
    if (s == "phantom") return SceneKind::Phantom;
    if (s == "sr-mask") return SceneKind::SrMask;
    if (s == "bernoulli-masks") return SceneKind::BernoulliMasks;
    throw std::invalid_argument(
        "scene: unknown scene '" + s +
        "' (expected moving-square | phantom | sr-mask | bernoulli-masks)");
}

inline RunArtifacts run_synth(SceneKind scene, const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    if (cfg.dims.empty() || cfg.dims.size() > 3)
        throw std::invalid_argument("run.dims: need 1 to 3 extents");
    for (const std::size_t d : cfg.dims)
        if (d == 0) throw std::invalid_argument("run.dims: extents must be >= 1");

    detail::ArtifactSink sink;
    sink.add_text("manifest.cfg", manifest_text(cfg));
    switch (scene) {
        case SceneKind::MovingSquare: {
            if (cfg.dims.size() != 3)
                throw std::invalid_argument(
                    "run.dims: moving-square needs a 3rd-order video");
            RunConfig scene_cfg = cfg;
            scene_cfg.task = TaskKind::VideoSci;
            DenseTensor t = default_scene(scene_cfg);
            sink.add_preview_any("scene.png", t);
            sink.add_tensor("scene.gtd1", std::move(t));
            break;
        }
        case SceneKind::Phantom: {
            DenseTensor t = dim_phantom(cfg.dims, cfg.seed);
            sink.add_preview_any("scene.png", t);
            sink.add_tensor("scene.gtd1", std::move(t));
            break;
        }
        case SceneKind::SrMask: {
            if (!(cfg.sr > 0.0) || cfg.sr > 1.0)
                throw std::invalid_argument("run.sr: sampling rate must be in (0, 1]");
            const std::vector<std::size_t> observed =
                make_inpainting_indices(cfg.dims, cfg.sr, cfg.seed);
            DenseTensor indicator(cfg.dims);
            for (const std::size_t i : observed) indicator[i] = 1.0;
            sink.add_preview_any("mask.png", indicator);
            sink.add_tensor("mask.gtd1", std::move(indicator));
            break;
        }
        case SceneKind::BernoulliMasks: {
            if (!(cfg.bernoulli_p > 0.0) || !(cfg.bernoulli_p < 1.0))
                throw std::invalid_argument("run.bernoulli_p: must be in (0, 1)");
            DenseTensor masks =
                make_bernoulli_masks(cfg.dims, cfg.bernoulli_p, cfg.seed);
            sink.add_preview_any("masks.png", masks);
            sink.add_tensor("masks.gtd1", std::move(masks));
            break;
        }
    }
    return sink.flush(cfg.out_dir);
}

}  // namespace gridtd
