#pragma once

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <thread>
#include <vector>

#include "cfr/config.hpp"
#include "cfr/eval.hpp"
#include "cfr/io.hpp"
#include "cfr/train.hpp"
#include "cfr/version.hpp"

namespace cfr::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string checkpoint;
    std::uint64_t seed = 0;
    int samples = -1;  // -1: use config eval_samples
    int threads = 0;   // 0: all cores
    std::vector<std::string> overrides;
};

inline int effective_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Reproducibility record written to <out>/manifest.json before the run
/// starts and finalized when it ends.
class Manifest {
public:
    Manifest(const std::string& command, const GlobalOptions& opt, const RunSettings& settings) {
        doc_["command"] = command;
        doc_["version"] = kVersion;
        doc_["seed"] = opt.seed;
        doc_["out_dir"] = opt.out_dir;
        doc_["threads"] = effective_threads(opt.threads);
        if (!opt.checkpoint.empty()) doc_["checkpoint"] = opt.checkpoint;
        if (opt.samples > 0) doc_["samples_override"] = opt.samples;
        if (!opt.config_path.empty()) doc_["config_file"] = opt.config_path;
        doc_["overrides"] = opt.overrides;
        nlohmann::json cfg;
        const ChannelConfig& c = settings.channel;
        cfg["fc"] = c.fc;
        cfg["bandwidth"] = c.bandwidth;
        cfg["nb_subbands"] = c.nb_subbands;
        cfg["bins_per_subband"] = c.bins_per_subband;
        cfg["snapshots"] = c.snapshots;
        cfg["snapshot_duration"] = c.snapshot_duration;
        cfg["paths"] = c.paths;
        cfg["velocity"] = c.velocity;
        cfg["d_max"] = c.delay_span();
        cfg["noise_scale"] = c.noise_scale;
        cfg["jitter"] = c.jitter;
        cfg["d_model"] = settings.d_model;
        cfg["n_heads"] = settings.n_heads;
        cfg["n_blocks"] = settings.n_blocks;
        cfg["ffn_hidden"] = settings.ffn_hidden;
        cfg["epochs"] = settings.epochs;
        cfg["steps_per_epoch"] = settings.steps_per_epoch;
        cfg["learning_rate"] = settings.learning_rate;
        cfg["weight_decay"] = settings.weight_decay;
        cfg["clip_norm"] = settings.clip_norm;
        cfg["v_min"] = settings.v_min;
        cfg["v_max"] = settings.v_max;
        cfg["pi_min"] = settings.pi_min;
        cfg["pi_max"] = settings.pi_max;
        cfg["p10"] = settings.p10;
        cfg["lambda_pdp"] = settings.weights.lambda_pdp;
        cfg["lambda_sparse"] = settings.weights.lambda_sparse;
        cfg["lambda_temp"] = settings.weights.lambda_temp;
        cfg["eval_samples"] = settings.eval_samples;
        cfg["pi_busy"] = settings.pi_busy;
        doc_["config"] = cfg;
        nlohmann::json derived;
        derived["bins"] = c.bins();
        derived["delta_f_hz"] = c.delta_f();
        derived["delta_tau_s"] = c.delta_tau();
        doc_["derived"] = derived;
        doc_["started_at"] = iso_timestamp();
        doc_["status"] = "running";
        path_ = (fs::path(opt.out_dir) / "manifest.json").string();
        write();
    }

    void add_output(const std::string& path) {
        doc_["outputs"].push_back(path);
        write();
    }

    void finalize(bool ok, const std::string& error = "") {
        doc_["finished_at"] = iso_timestamp();
        doc_["status"] = ok ? "ok" : "error";
        if (!error.empty()) doc_["error"] = error;
        write();
    }

private:
    void write() const {
        std::ofstream os(path_);
        require(static_cast<bool>(os), "manifest: cannot write " + path_);
        os << doc_.dump(2) << "\n";
    }

    nlohmann::json doc_;
    std::string path_;
};

inline RunSettings resolve_settings(const GlobalOptions& opt) {
    RunSettings s;
    if (!opt.config_path.empty()) s = parse_config_file(opt.config_path);
    apply_overrides(s, opt.overrides);
    if (opt.samples > 0) s.eval_samples = opt.samples;
    s.validate();
    std::cout << derived_summary(s) << "\n";
    return s;
}

inline EvalCondition condition_from(const RunSettings& s, std::uint64_t seed) {
    EvalCondition c;
    c.channel = s.channel;
    c.velocity = s.channel.velocity;
    c.pi_busy = s.pi_busy;
    c.paths = s.channel.paths;
    c.p10 = s.p10;
    c.n_samples = s.eval_samples;
    c.base_seed = seed;
    return c;
}

inline fs::path results_dir(const GlobalOptions& opt) {
    auto dir = fs::path(opt.out_dir) / "results";
    fs::create_directories(dir);
    return dir;
}

// ---- command bodies ----

inline int cmd_simulate(const GlobalOptions& opt, const RunSettings& s, Manifest& manifest,
                        int n_samples) {
    auto dir = fs::path(opt.out_dir) / "realizations";
    fs::create_directories(dir);
    const DtmcParams dtmc = dtmc_for_target(s.pi_busy, s.p10);
    for (int i = 0; i < n_samples; ++i) {
        RngStream rng = derive_stream(opt.seed, static_cast<std::uint64_t>(i));
        ChannelRealization r = generate_realization(s.channel, rng);
        InterferenceMask m = generate_mask(dtmc, s.channel.snapshots, s.channel.nb_subbands,
                                           s.channel.bins_per_subband, rng);
        char name[64];
        std::snprintf(name, sizeof(name), "sample_%05d", i);
        const std::string base = (dir / name).string();
        save_realization(base + ".cfr", r);
        save_mask(base + ".mask", m);
        manifest.add_output(base + ".cfr");
        manifest.add_output(base + ".mask");
    }
    std::cout << "simulate: wrote " << n_samples << " realization(s) to " << dir.string() << "\n";
    return 0;
}

inline TrainOutcome run_training(const GlobalOptions& opt, const TrainConfig& cfg,
                                 const std::string& tag) {
    const auto ckpt_dir = fs::path(opt.out_dir) / "checkpoints";
    const auto log_dir = fs::path(opt.out_dir) / "logs";
    fs::create_directories(ckpt_dir);
    fs::create_directories(log_dir);
    const std::string log_path =
        (log_dir / ("train_" + tag + "_seed" + std::to_string(cfg.base_seed) + ".log")).string();
    int last_epoch = 0;
    TrainOutcome out = train(cfg, (ckpt_dir / tag).string(), log_path,
                             [&](const TrainLogRecord& r) {
                                 if (r.epoch != last_epoch) {
                                     last_epoch = r.epoch;
                                     std::cout << "train[" << tag << "]: epoch " << r.epoch << "/"
                                               << cfg.epochs << "\n";
                                 }
                             });
    for (std::size_t e = 0; e < out.epoch_mean_loss.size(); ++e)
        std::cout << "train[" << tag << "]: epoch " << e + 1
                  << " mean loss = " << out.epoch_mean_loss[e] << "\n";
    return out;
}

inline int cmd_train(const GlobalOptions& opt, const RunSettings& s, Manifest& manifest) {
    TrainOutcome out = run_training(opt, s.train_config(opt.seed), "model");
    manifest.add_output(out.final_checkpoint);
    manifest.add_output(out.log_path);
    std::cout << "train: final checkpoint " << out.final_checkpoint << "\n";
    return 0;
}

inline Checkpoint load_model_or_fail(const GlobalOptions& opt) {
    require(!opt.checkpoint.empty(),
            "this command evaluates the transformer; pass --checkpoint PATH");
    return load_checkpoint(opt.checkpoint);
}

inline int cmd_evaluate(const GlobalOptions& opt, const RunSettings& s, Manifest& manifest,
                        const std::string& method_str) {
    const Method method = method_from_name(method_str);
    EvalCondition cond = condition_from(s, opt.seed);
    SweepResult r;
    if (method == Method::Transformer) {
        Checkpoint ck = load_model_or_fail(opt);
        r = evaluate_method(method, cond, {&ck.store, &ck.config},
                            effective_threads(opt.threads));
    } else {
        r = evaluate_method(method, cond, {}, effective_threads(opt.threads));
    }
    const std::string path = (results_dir(opt) / ("evaluate_" + r.method + ".csv")).string();
    write_sweep_csv(path, {r});
    manifest.add_output(path);
    std::cout << "evaluate: " << r.method << " rho = " << r.rho_mean << " +- " << r.rho_std
              << " over " << r.n_samples << " samples -> " << path << "\n";
    return 0;
}

inline int cmd_sweep_axis(const GlobalOptions& opt, const RunSettings& s, Manifest& manifest,
                          bool occupancy_axis) {
    Checkpoint ck = load_model_or_fail(opt);
    EvalCondition base = condition_from(s, opt.seed);
    const std::vector<Method> methods{Method::Transformer, Method::Historical, Method::Zero,
                                      Method::Spline};
    ModelHandle model{&ck.store, &ck.config};
    const int threads = effective_threads(opt.threads);
    std::vector<SweepResult> results;
    std::string name;
    if (occupancy_axis) {
        base.velocity = 7.0;  // fixed velocity on the occupancy axis
        results = sweep_occupancy(methods, base, model, default_occupancy_levels(), threads);
        name = "sweep_occupancy.csv";
    } else {
        base.pi_busy = s.pi_busy;
        results = sweep_velocity(methods, base, model, default_velocity_levels(), threads);
        name = "sweep_velocity.csv";
    }
    const std::string path = (results_dir(opt) / name).string();
    write_sweep_csv(path, results);
    manifest.add_output(path);
    std::cout << "sweep: wrote " << results.size() << " rows -> " << path << "\n";
    return 0;
}

inline int cmd_sweep_paths(const GlobalOptions& opt, const RunSettings& s, Manifest& manifest) {
    Checkpoint ck = load_model_or_fail(opt);
    EvalCondition base = condition_from(s, opt.seed);
    auto results =
        sweep_paths(base, {&ck.store, &ck.config}, {2, 6, 10}, default_velocity_levels(),
                    effective_threads(opt.threads));
    const std::string path = (results_dir(opt) / "sweep_paths.csv").string();
    write_sweep_csv(path, results);
    manifest.add_output(path);
    std::cout << "sweep: wrote " << results.size() << " rows -> " << path << "\n";
    return 0;
}

inline int cmd_sweep_bands(const GlobalOptions& opt, const RunSettings& s, Manifest& manifest,
                           const std::vector<int>& nb_list) {
    // One model per geometry, trained here with the configured budget, then
    // occupancy and velocity sweeps for each.
    std::vector<SweepResult> results;
    const int threads = effective_threads(opt.threads);
    for (int nb : nb_list) {
        RunSettings geo = s;
        geo.channel.nb_subbands = nb;
        geo.channel.d_max = 0;  // rescale with the new F
        geo.validate();
        TrainOutcome out =
            run_training(opt, geo.train_config(mix64(opt.seed, static_cast<std::uint64_t>(nb))),
                         "bands_nb" + std::to_string(nb));
        Checkpoint ck = load_checkpoint(out.final_checkpoint);
        ModelHandle model{&ck.store, &ck.config};
        EvalCondition base = condition_from(geo, mix64(opt.seed, 0xBA2D5 + nb));
        base.velocity = 7.0;
        auto occ = sweep_occupancy({Method::Transformer}, base, model,
                                   default_occupancy_levels(), threads);
        base.velocity = geo.channel.velocity;
        auto vel = sweep_velocity({Method::Transformer}, base, model,
                                  default_velocity_levels(), threads);
        results.insert(results.end(), occ.begin(), occ.end());
        results.insert(results.end(), vel.begin(), vel.end());
    }
    const std::string path = (results_dir(opt) / "sweep_bands.csv").string();
    write_sweep_csv(path, results);
    manifest.add_output(path);
    std::cout << "sweep: wrote " << results.size() << " rows -> " << path << "\n";
    return 0;
}

inline int cmd_ablate_velocity(const GlobalOptions& opt, const RunSettings& s,
                               Manifest& manifest) {
    struct TrainSpec {
        std::string label;
        double v_min, v_max;
    };
    const std::vector<TrainSpec> specs{{"fixed_v0.5", 0.5, 0.5},
                                       {"fixed_v7", 7.0, 7.0},
                                       {"fixed_v30", 30.0, 30.0},
                                       {"random", 0.5, 30.0}};
    std::vector<Checkpoint> checkpoints;
    checkpoints.reserve(specs.size());
    for (const auto& spec : specs) {
        RunSettings cond = s;
        cond.v_min = spec.v_min;
        cond.v_max = spec.v_max;
        TrainOutcome out = run_training(
            opt, cond.train_config(mix64(opt.seed, std::hash<std::string>{}(spec.label))),
            "ablate_" + spec.label);
        checkpoints.push_back(load_checkpoint(out.final_checkpoint));
    }
    std::vector<AblationEntry> entries;
    for (std::size_t i = 0; i < specs.size(); ++i)
        entries.push_back({specs[i].label, {&checkpoints[i].store, &checkpoints[i].config}});

    EvalCondition base = condition_from(s, opt.seed);
    base.pi_busy = 0.5;
    auto results = ablation_velocity(entries, base, {0.5, 7.0, 30.0},
                                     effective_threads(opt.threads));
    const std::string path = (results_dir(opt) / "ablation_velocity.csv").string();
    write_sweep_csv(path, results);
    manifest.add_output(path);
    std::cout << "ablate: wrote " << results.size() << " rows -> " << path << "\n";
    return 0;
}

/// Builds the CLI and runs one command. Returns the process exit status:
/// 0 success, 1 runtime error (one-line diagnostic on stderr), 2 usage error.
inline int run(std::vector<std::string> args) {
    CLI::App app{"multi-band channel reconstruction toolkit"};
    app.set_help_all_flag("--help-all", "print help for every subcommand");

    GlobalOptions opt;
    app.add_option("--config", opt.config_path, "key = value configuration file");
    app.add_option("--seed", opt.seed, "base seed; every random draw derives from it");
    app.add_option("--out", opt.out_dir, "output directory (default: ./out)");
    app.add_option("--samples", opt.samples, "override the number of samples");
    app.add_option("--checkpoint", opt.checkpoint, "model checkpoint for transformer evaluation");
    app.add_option("--threads", opt.threads, "worker cap for evaluation (default: all cores)");
    app.add_option("--set", opt.overrides, "config override key=value (repeatable)")
        ->take_all();

    auto* simulate = app.add_subcommand("simulate", "emit channel realizations and masks");
    auto* train_cmd = app.add_subcommand("train", "train the reconstruction model");
    auto* evaluate = app.add_subcommand("evaluate", "score one method at the configured condition");
    std::string eval_method = "transformer";
    evaluate->add_option("--method", eval_method, "transformer|historical|zero|spline");
    auto* sweep = app.add_subcommand("sweep", "run an evaluation sweep");
    sweep->require_subcommand(1);
    auto* sweep_occ = sweep->add_subcommand("occupancy", "occupancy sweep at v = 7 m/s");
    auto* sweep_vel = sweep->add_subcommand("velocity", "velocity sweep at the configured pi_busy");
    auto* sweep_pth = sweep->add_subcommand("paths", "velocity sweep per path count (2, 6, 10)");
    auto* sweep_bnd = sweep->add_subcommand("bands", "train and evaluate per sub-band count");
    std::string nb_list_str = "3,5,7,9";
    sweep_bnd->add_option("--nb-list", nb_list_str, "comma-separated sub-band counts");
    auto* ablate = app.add_subcommand("ablate", "run an ablation study");
    ablate->require_subcommand(1);
    auto* ablate_vel = ablate->add_subcommand(
        "velocity", "fixed vs randomized training velocity (trains four models)");
    auto* baseline = app.add_subcommand("baseline", "score one classical baseline");
    std::string baseline_name;
    baseline->add_option("name", baseline_name, "historical|zero|spline")->required();

    // global flags may appear after the subcommand name
    for (CLI::App* sub : {simulate, train_cmd, evaluate, sweep, sweep_occ, sweep_vel, sweep_pth,
                          sweep_bnd, ablate, ablate_vel, baseline})
        sub->fallthrough();

    app.require_subcommand(1);

    std::reverse(args.begin(), args.end());  // CLI11 parses reversed vectors
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunSettings settings = resolve_settings(opt);
        fs::create_directories(opt.out_dir);
        std::string command = app.get_subcommands().front()->get_name();
        if (*sweep) command += " " + sweep->get_subcommands().front()->get_name();
        if (*ablate) command += " " + ablate->get_subcommands().front()->get_name();
        if (*baseline) command += " " + baseline_name;
        Manifest manifest(command, opt, settings);
        int rc = 1;
        try {
            if (*simulate) {
                rc = cmd_simulate(opt, settings, manifest, opt.samples > 0 ? opt.samples : 1);
            } else if (*train_cmd) {
                rc = cmd_train(opt, settings, manifest);
            } else if (*evaluate) {
                rc = cmd_evaluate(opt, settings, manifest, eval_method);
            } else if (*sweep_occ) {
                rc = cmd_sweep_axis(opt, settings, manifest, true);
            } else if (*sweep_vel) {
                rc = cmd_sweep_axis(opt, settings, manifest, false);
            } else if (*sweep_pth) {
                rc = cmd_sweep_paths(opt, settings, manifest);
            } else if (*sweep_bnd) {
                std::vector<int> nb_list;
                std::istringstream ss(nb_list_str);
                std::string tok;
                while (std::getline(ss, tok, ',')) nb_list.push_back(std::stoi(tok));
                require(!nb_list.empty(), "sweep bands: empty --nb-list");
                rc = cmd_sweep_bands(opt, settings, manifest, nb_list);
            } else if (*ablate_vel) {
                rc = cmd_ablate_velocity(opt, settings, manifest);
            } else if (*baseline) {
                require(baseline_name != "transformer",
                        "baseline: name must be one of historical|zero|spline");
                rc = cmd_evaluate(opt, settings, manifest, baseline_name);
            }
            manifest.finalize(rc == 0);
            return rc;
        } catch (const std::exception& e) {
            manifest.finalize(false, e.what());
            throw;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args));
}

}  // namespace cfr::cli
