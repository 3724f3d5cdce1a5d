// Command-line front end: `gridtd run` executes a reconstruction or benchmark
// task, `gridtd synth` writes synthetic scenes and masks.  Exit codes: 0 on
// success, 2 for invalid configuration or missing inputs, 3 when the
// objective diverges.
#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <gridtd/runner.hpp>

namespace {

// Flags are collected as raw strings and pushed through the same key=value
// entry point the config file uses, so both paths share validation and
// error messages.  File entries apply first; flags win.
struct FlagSet {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(CLI::App* cmd, const std::string& flag, const std::string& key,
             const std::string& help) {
        cmd->add_option_function<std::string>(
               flag,
               [this, key](const std::string& v) { entries.emplace_back(key, v); },
               help)
            ->expected(1);
    }
};

int run_guarded(const std::function<gridtd::RunArtifacts()>& body) {
    try {
        const gridtd::RunArtifacts out = body();
        std::printf("wrote %zu artifacts to %s\n", out.files.size(),
                    out.out_dir.c_str());
        for (const std::string& f : out.files) std::printf("  %s\n", f.c_str());
        return 0;
    } catch (const gridtd::NonFiniteLossError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-resolution tensor-grid reconstruction toolkit"};
    app.require_subcommand(1);

    // ---- run ----
    CLI::App* run = app.add_subcommand("run", "execute a task and write artifacts");
    std::string run_task_pos, run_config;
    run->add_option("TASK", run_task_pos,
                    "task name (inpaint | video-sci | spectral-sci | bench-dim | "
                    "bench-efficiency | lipschitz-check)");
    run->add_option("--config", run_config, "config file (key=value lines)");
    FlagSet run_flags;
    run_flags.add(run, "--task", "run.task", "task name (flag form)");
    run_flags.add(run, "--seed", "run.seed", "master seed");
    run_flags.add(run, "--out-dir", "run.out_dir", "artifact directory");
    run_flags.add(run, "--input", "run.input", "ground-truth tensor file");
    run_flags.add(run, "--dims", "run.dims", "signal extents, e.g. 32,32,8");
    run_flags.add(run, "--sr", "run.sr", "inpainting sampling rate");
    run_flags.add(run, "--bernoulli-p", "run.bernoulli_p", "SCI mask density");
    run_flags.add(run, "--shift-step", "run.shift_step",
                  "spectral column shift per band");
    run_flags.add(run, "--noise-sigma", "run.noise_sigma",
                  "measurement noise level");
    run_flags.add(run, "--affine", "run.affine", "temporal adapter (on|off)");
    run_flags.add(run, "--mode", "encoder.mode", "dense | decomposed");
    run_flags.add(run, "--levels", "encoder.levels", "grid levels L");
    run_flags.add(run, "--features", "encoder.features", "features per level F");
    run_flags.add(run, "--rho0", "solver.rho0", "initial penalty");
    run_flags.add(run, "--kappa", "solver.kappa", "penalty growth factor");
    run_flags.add(run, "--lambda1", "solver.lambda1", "first-order TV weight");
    run_flags.add(run, "--lambda2", "solver.lambda2", "second-order TV weight");
    run_flags.add(run, "--inner-steps", "solver.inner_steps",
                  "optimizer steps per outer iteration");
    run_flags.add(run, "--init-steps", "solver.init_steps",
                  "network warm-start steps before the first iteration");
    run_flags.add(run, "--outer-iters", "solver.outer_iters", "outer iterations");

    // ---- synth ----
    CLI::App* synth =
        app.add_subcommand("synth", "generate synthetic scenes and masks");
    std::string synth_scene, synth_config;
    synth
        ->add_option("scene", synth_scene,
                     "moving-square | phantom | sr-mask | bernoulli-masks")
        ->required();
    synth->add_option("--config", synth_config, "config file (key=value lines)");
    FlagSet synth_flags;
    synth_flags.add(synth, "--seed", "run.seed", "master seed");
    synth_flags.add(synth, "--out-dir", "run.out_dir", "artifact directory");
    synth_flags.add(synth, "--dims", "run.dims", "extents, e.g. 32,32,8");
    synth_flags.add(synth, "--sr", "run.sr", "mask sampling rate");
    synth_flags.add(synth, "--bernoulli-p", "run.bernoulli_p", "mask density");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (run->parsed()) {
        return run_guarded([&] {
            gridtd::RunConfig cfg;
            if (!run_config.empty()) gridtd::apply_config_file(cfg, run_config);
            if (!run_task_pos.empty()) cfg.task = gridtd::parse_task(run_task_pos);
            for (const auto& [key, value] : run_flags.entries)
                gridtd::apply_config_entry(cfg, key, value);
            return gridtd::run_task(cfg);
        });
    }
    return run_guarded([&] {
        gridtd::RunConfig cfg;
        if (!synth_config.empty()) gridtd::apply_config_file(cfg, synth_config);
        for (const auto& [key, value] : synth_flags.entries)
            gridtd::apply_config_entry(cfg, key, value);
        return gridtd::run_synth(gridtd::parse_scene(synth_scene), cfg);
    });
}
