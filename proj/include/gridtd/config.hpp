#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gridtd/admm.hpp"
#include "gridtd/decoder.hpp"

namespace gridtd {

enum class TaskKind {
    Inpaint,
    VideoSci,
    SpectralSci,
    BenchDim,
    BenchEfficiency,
    LipschitzCheck,
};

inline const char* task_name(TaskKind t) {
    switch (t) {
        case TaskKind::Inpaint: return "inpaint";
        case TaskKind::VideoSci: return "video-sci";
        case TaskKind::SpectralSci: return "spectral-sci";
        case TaskKind::BenchDim: return "bench-dim";
        case TaskKind::BenchEfficiency: return "bench-efficiency";
        case TaskKind::LipschitzCheck: return "lipschitz-check";
    }
    throw std::logic_error("task_name: bad enum");
}

inline TaskKind parse_task(const std::string& s) {
    for (const TaskKind t :
         {TaskKind::Inpaint, TaskKind::VideoSci, TaskKind::SpectralSci,
          TaskKind::BenchDim, TaskKind::BenchEfficiency, TaskKind::LipschitzCheck})
        if (s == task_name(t)) return t;
    throw std::invalid_argument(
        "run.task: unknown task '" + s +
        "' (expected inpaint | video-sci | spectral-sci | bench-dim | "
        "bench-efficiency | lipschitz-check)");
}

// Everything a run needs, resolvable from a config file plus flag overrides.
// Validation happens once, before any artifact is written.
struct RunConfig {
    TaskKind task = TaskKind::Inpaint;
    std::vector<std::size_t> dims = {32, 32, 8};
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string input_path;  // optional ground-truth tensor; empty -> synthetic
    double sr = 0.1;            // inpainting sampling rate
    double bernoulli_p = 0.5;   // video-SCI mask density
    std::size_t shift_step = 2; // spectral-SCI column shift per band
    double noise_sigma = 0.0;   // measurement noise
    bool affine = false;

    // encoder / model
    EncoderMode mode = EncoderMode::Decomposed;
    std::size_t levels = 4;
    std::size_t features = 2;
    std::size_t n_min = 2;
    std::size_t n_max = 32;
    std::size_t table_len = std::size_t{1} << 17;
    std::size_t mlp_hidden = 64;
    std::size_t inr_hidden = 32;

    SolverConfig solver;

    // bench task knobs
    std::size_t bench_n = 100;
    std::size_t bench_iters = 300;
    std::size_t lipschitz_trials = 1000;

    ModelConfig model_config() const {
        ModelConfig mc;
        mc.encoder.mode = mode;
        mc.encoder.dims = dims.size();
        mc.encoder.levels = levels;
        mc.encoder.features = features;
        mc.encoder.n_min = n_min;
        mc.encoder.n_max = n_max;
        mc.encoder.table_len = table_len;
        mc.mlp_hidden = mlp_hidden;
        mc.inr_hidden = inr_hidden;
        mc.affine_frames = affine ? dims.back() : 0;
        mc.seed = seed;
        return mc;
    }

    void validate() const {
        if (dims.empty() || dims.size() > 3)
            throw std::invalid_argument("run.dims: need 1 to 3 extents");
        for (const std::size_t d : dims)
            if (d == 0) throw std::invalid_argument("run.dims: extents must be >= 1");
        if (!(sr > 0.0) || sr > 1.0)
            throw std::invalid_argument("run.sr: sampling rate must be in (0, 1]");
        if (!(bernoulli_p > 0.0) || !(bernoulli_p < 1.0))
            throw std::invalid_argument("run.bernoulli_p: must be in (0, 1)");
        if (noise_sigma < 0.0)
            throw std::invalid_argument("run.noise_sigma: must be >= 0");
        if (task == TaskKind::VideoSci || task == TaskKind::SpectralSci) {
            if (dims.size() != 3)
                throw std::invalid_argument(
                    std::string("run.dims: ") + task_name(task) +
                    " needs a 3rd-order signal");
            if (task == TaskKind::SpectralSci && shift_step == 0)
                throw std::invalid_argument("run.shift_step: must be >= 1");
        }
        if (task == TaskKind::BenchEfficiency &&
            (bench_n < 2 || bench_iters < 1))
            throw std::invalid_argument(
                "run.bench_n/bench_iters: need n >= 2 and iters >= 1");
        if (task == TaskKind::LipschitzCheck && lipschitz_trials < 1)
            throw std::invalid_argument("run.lipschitz_trials: must be >= 1");
        model_config().validate();  // encoder + adapter constraints
        SolverConfig sc = solver;
        sc.use_affine = affine;
        sc.seed = seed;
        sc.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        // stoull wraps negative input instead of failing, so screen for it
        if (v.find('-') != std::string::npos) throw std::invalid_argument("");
        std::size_t pos = 0;
        const unsigned long long r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw std::invalid_argument(key + ": expected an unsigned integer, got '" +
                                    v + "'");
    }
}

inline double parse_f64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return r;
    } catch (...) {
        throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
    }
}

inline bool parse_onoff(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw std::invalid_argument(key + ": expected on|off, got '" + v + "'");
}

inline std::vector<std::size_t> parse_dims(const std::string& key,
                                           const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (part.empty())
            throw std::invalid_argument(key + ": empty extent in '" + v + "'");
        out.push_back(static_cast<std::size_t>(parse_u64(key, part)));
    }
    if (out.empty())
        throw std::invalid_argument(key + ": expected comma-separated extents");
    return out;
}

}  // namespace detail

// Applies one fully-qualified key ("section.field") to the config.  This is
// the single authority used by config files, flag overrides, and manifest
// round trips alike.
inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_dims;
    using detail::parse_f64;
    using detail::parse_onoff;
    using detail::parse_u64;
    if (key == "run.task") cfg.task = parse_task(value);
    else if (key == "run.dims") cfg.dims = parse_dims(key, value);
    else if (key == "run.seed") cfg.seed = parse_u64(key, value);
    else if (key == "run.out_dir") cfg.out_dir = value;
    else if (key == "run.input") cfg.input_path = value;
    else if (key == "run.sr") cfg.sr = parse_f64(key, value);
    else if (key == "run.bernoulli_p") cfg.bernoulli_p = parse_f64(key, value);
    else if (key == "run.shift_step")
        cfg.shift_step = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "run.noise_sigma") cfg.noise_sigma = parse_f64(key, value);
    else if (key == "run.affine") cfg.affine = parse_onoff(key, value);
    else if (key == "run.bench_n")
        cfg.bench_n = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "run.bench_iters")
        cfg.bench_iters = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "run.lipschitz_trials")
        cfg.lipschitz_trials = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "encoder.mode") {
        if (value == "dense") cfg.mode = EncoderMode::Dense;
        else if (value == "decomposed") cfg.mode = EncoderMode::Decomposed;
        else
            throw std::invalid_argument(
                "encoder.mode: expected dense|decomposed, got '" + value + "'");
    } else if (key == "encoder.levels")
        cfg.levels = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "encoder.features")
        cfg.features = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "encoder.n_min")
        cfg.n_min = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "encoder.n_max")
        cfg.n_max = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "encoder.table_len")
        cfg.table_len = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "model.mlp_hidden")
        cfg.mlp_hidden = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "model.inr_hidden")
        cfg.inr_hidden = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "solver.outer_iters")
        cfg.solver.outer_iters = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "solver.inner_steps")
        cfg.solver.inner_steps = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "solver.init_steps")
        cfg.solver.init_steps = static_cast<std::size_t>(parse_u64(key, value));
    else if (key == "solver.rho0") cfg.solver.rho0 = parse_f64(key, value);
    else if (key == "solver.kappa") cfg.solver.kappa = parse_f64(key, value);
    else if (key == "solver.lambda1") cfg.solver.lambda1 = parse_f64(key, value);
    else if (key == "solver.lambda2") cfg.solver.lambda2 = parse_f64(key, value);
    else if (key == "solver.early_stop")
        cfg.solver.early_stop = parse_onoff(key, value);
    else if (key == "solver.early_stop_rel")
        cfg.solver.early_stop_rel = parse_f64(key, value);
    else
        throw std::invalid_argument("unknown config key: " + key);
}

// Line-oriented parser: `[section]` headers qualify the keys that follow;
// keys written as `section.field` are taken verbatim (which makes emitted
// manifests valid config files).  '#' starts a comment.  Keys outside any
// section default to run.*.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(
    const std::string& text) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream is(text);
    std::string line, section = "run";
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key");
        if (key.find('.') == std::string::npos) key = section + "." + key;
        entries.emplace_back(std::move(key), value);
    }
    return entries;
}

inline void apply_config_text(RunConfig& cfg, const std::string& text) {
    for (const auto& [key, value] : parse_config_text(text))
        apply_config_entry(cfg, key, value);
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    apply_config_text(cfg, buf.str());
}

// The full effective configuration as flat key=value entries (the manifest
// body).  Feeding these lines back through the parser reproduces the config.
inline std::vector<std::pair<std::string, std::string>> config_entries(
    const RunConfig& cfg) {
    char buf[64];
    const auto f64 = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string dims;
    for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
        if (i) dims += ',';
        dims += std::to_string(cfg.dims[i]);
    }
    return {
        {"run.task", task_name(cfg.task)},
        {"run.dims", dims},
        {"run.seed", std::to_string(cfg.seed)},
        {"run.out_dir", cfg.out_dir},
        {"run.input", cfg.input_path},
        {"run.sr", f64(cfg.sr)},
        {"run.bernoulli_p", f64(cfg.bernoulli_p)},
        {"run.shift_step", std::to_string(cfg.shift_step)},
        {"run.noise_sigma", f64(cfg.noise_sigma)},
        {"run.affine", cfg.affine ? "on" : "off"},
        {"run.bench_n", std::to_string(cfg.bench_n)},
        {"run.bench_iters", std::to_string(cfg.bench_iters)},
        {"run.lipschitz_trials", std::to_string(cfg.lipschitz_trials)},
        {"encoder.mode", cfg.mode == EncoderMode::Dense ? "dense" : "decomposed"},
        {"encoder.levels", std::to_string(cfg.levels)},
        {"encoder.features", std::to_string(cfg.features)},
        {"encoder.n_min", std::to_string(cfg.n_min)},
        {"encoder.n_max", std::to_string(cfg.n_max)},
        {"encoder.table_len", std::to_string(cfg.table_len)},
        {"model.mlp_hidden", std::to_string(cfg.mlp_hidden)},
        {"model.inr_hidden", std::to_string(cfg.inr_hidden)},
        {"solver.outer_iters", std::to_string(cfg.solver.outer_iters)},
        {"solver.inner_steps", std::to_string(cfg.solver.inner_steps)},
        {"solver.init_steps", std::to_string(cfg.solver.init_steps)},
        {"solver.rho0", f64(cfg.solver.rho0)},
        {"solver.kappa", f64(cfg.solver.kappa)},
        {"solver.lambda1", f64(cfg.solver.lambda1)},
        {"solver.lambda2", f64(cfg.solver.lambda2)},
        {"solver.early_stop", cfg.solver.early_stop ? "on" : "off"},
        {"solver.early_stop_rel", f64(cfg.solver.early_stop_rel)},
    };
}

}  // namespace gridtd
