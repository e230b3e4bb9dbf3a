#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cfr/baselines.hpp"
#include "cfr/channel.hpp"
#include "cfr/dtmc.hpp"
#include "cfr/features.hpp"
#include "cfr/loss.hpp"
#include "cfr/model.hpp"
#include "cfr/util.hpp"

namespace cfr {

enum class Method { Transformer, Historical, Zero, Spline };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::Transformer: return "transformer";
        case Method::Historical: return "historical";
        case Method::Zero: return "zero";
        case Method::Spline: return "spline";
    }
    return "?";
}

inline Method method_from_name(const std::string& name) {
    if (name == "transformer") return Method::Transformer;
    if (name == "historical") return Method::Historical;
    if (name == "zero") return Method::Zero;
    if (name == "spline") return Method::Spline;
    throw Error("unknown method '" + name + "' (transformer|historical|zero|spline)");
}

/// One evaluation point: fixed velocity, occupancy and channel complexity,
/// scored over n_samples paired-seed draws.
struct EvalCondition {
    double velocity = 7.0;
    double pi_busy = 0.5;
    int paths = 6;
    double p10 = 0.30;
    int n_samples = 500;
    std::uint64_t base_seed = 0;
    ChannelConfig channel;  // geometry template; velocity/paths overridden

    ChannelConfig effective_channel() const {
        ChannelConfig c = channel;
        c.velocity = velocity;
        c.paths = paths;
        return c;
    }

    void validate() const {
        require(n_samples >= 1, "EvalCondition: n_samples must be >= 1");
        effective_channel().validate();
    }
};

struct SweepResult {
    std::string method;
    double velocity = 0.0;
    double pi_busy = 0.0;
    int paths = 0;
    int nb_subbands = 0;
    double doppler_hz = 0.0;
    double rho_mean = 0.0;
    double rho_std = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> rho;  // per-sample values
};

/// Optional trained model for transformer evaluation.
struct ModelHandle {
    ParameterStore* store = nullptr;
    const ModelConfig* config = nullptr;
};

/// Scores one method under one condition. Sample i of a condition always
/// sees the stream (base_seed, i), so every method is paired on identical
/// realizations and masks; rho differences are method-attributable.
inline SweepResult evaluate_method(Method method, const EvalCondition& cond, ModelHandle model = {},
                                   int threads = 1) {
    cond.validate();
    const ChannelConfig chan = cond.effective_channel();
    if (method == Method::Transformer) {
        require(model.store != nullptr && model.config != nullptr,
                "evaluate_method: transformer evaluation needs a checkpoint");
        require(model.config->same_geometry(chan.snapshots, chan.bins(), chan.nb_subbands,
                                            chan.bins_per_subband),
                "evaluate_method: checkpoint geometry (T=" +
                    std::to_string(model.config->snapshots) + ", F=" +
                    std::to_string(model.config->bins()) + ") does not match the condition (T=" +
                    std::to_string(chan.snapshots) + ", F=" + std::to_string(chan.bins()) + ")");
    }
    const DtmcParams dtmc = dtmc_for_target(cond.pi_busy, cond.p10);

    // Channel and mask use distinct per-sample sub-streams. Together with
    // a sweep-wide base seed this gives common random numbers across sweep
    // levels, so level-to-level differences are condition effects rather
    // than Monte-Carlo noise.
    std::vector<double> rho(cond.n_samples, 0.0);
    parallel_for(cond.n_samples, threads, [&](int i) {
        RngStream rng = derive_stream(cond.base_seed, static_cast<std::uint64_t>(i));
        RngStream mask_rng =
            derive_stream(cond.base_seed, mix64(0x4D41534BULL, static_cast<std::uint64_t>(i)));
        ChannelRealization r = generate_realization(chan, rng);
        InterferenceMask mask = generate_mask(dtmc, chan.snapshots, chan.nb_subbands,
                                              chan.bins_per_subband, mask_rng);
        ComplexGrid masked = apply_mask(r.cfr, mask);
        ComplexGrid est;
        switch (method) {
            case Method::Transformer: {
                FeatureGrid feat = make_features(masked, mask);
                est = model_forward(feat, *model.store, *model.config);
                break;
            }
            case Method::Historical: est = historical_fill(masked, mask); break;
            case Method::Zero: est = zero_fill(masked, mask); break;
            case Method::Spline: est = spline_fill(masked, mask); break;
        }
        rho[i] = pdp_similarity(est, r.cfr);
    });

    SweepResult res;
    res.method = method_name(method);
    res.velocity = cond.velocity;
    res.pi_busy = cond.pi_busy;
    res.paths = cond.paths;
    res.nb_subbands = chan.nb_subbands;
    res.doppler_hz = max_doppler(cond.velocity, chan.fc);
    res.n_samples = cond.n_samples;
    res.seed = cond.base_seed;
    res.rho = std::move(rho);
    double mean = 0.0;
    for (double v : res.rho) mean += v;
    mean /= res.rho.size();
    double var = 0.0;
    for (double v : res.rho) var += (v - mean) * (v - mean);
    res.rho_mean = mean;
    res.rho_std = res.rho.size() > 1 ? std::sqrt(var / (res.rho.size() - 1)) : 0.0;
    return res;
}

inline const std::vector<double>& default_occupancy_levels() {
    static const std::vector<double> levels{0.1, 0.3, 0.5, 0.7, 0.9};
    return levels;
}

inline const std::vector<double>& default_velocity_levels() {
    static const std::vector<double> levels{0.5, 1.0, 3.0, 7.0, 15.0, 30.0};
    return levels;
}

/// Occupancy sweep at fixed velocity. Each level gets its own sub-seed;
/// all methods share it.
inline std::vector<SweepResult> sweep_occupancy(const std::vector<Method>& methods,
                                                const EvalCondition& base, ModelHandle model = {},
                                                const std::vector<double>& levels =
                                                    default_occupancy_levels(),
                                                int threads = 1) {
    std::vector<SweepResult> out;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        EvalCondition cond = base;
        cond.pi_busy = levels[li];
        for (Method m : methods) out.push_back(evaluate_method(m, cond, model, threads));
    }
    return out;
}

/// Velocity sweep at fixed occupancy; the emitted rows carry the derived
/// maximum Doppler shift per level.
inline std::vector<SweepResult> sweep_velocity(const std::vector<Method>& methods,
                                               const EvalCondition& base, ModelHandle model = {},
                                               const std::vector<double>& levels =
                                                   default_velocity_levels(),
                                               int threads = 1) {
    std::vector<SweepResult> out;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        EvalCondition cond = base;
        cond.velocity = levels[li];
        for (Method m : methods) out.push_back(evaluate_method(m, cond, model, threads));
    }
    return out;
}

/// Velocity sweep repeated per channel complexity (transformer only).
inline std::vector<SweepResult> sweep_paths(const EvalCondition& base, ModelHandle model,
                                            const std::vector<int>& p_levels = {2, 6, 10},
                                            const std::vector<double>& velocities =
                                                default_velocity_levels(),
                                            int threads = 1) {
    std::vector<SweepResult> out;
    for (std::size_t pi = 0; pi < p_levels.size(); ++pi) {
        for (std::size_t li = 0; li < velocities.size(); ++li) {
            EvalCondition cond = base;
            cond.paths = p_levels[pi];
            cond.velocity = velocities[li];
            out.push_back(evaluate_method(Method::Transformer, cond, model, threads));
        }
    }
    return out;
}

/// One trained model per training condition, labelled for the output table.
struct AblationEntry {
    std::string label;  // e.g. "fixed_v0.5" or "random"
    ModelHandle model;
};

/// Scores each trained model at every evaluation velocity (fixed occupancy),
/// paired seeds per velocity level across models. Rows are labelled
/// "transformer_<label>".
inline std::vector<SweepResult> ablation_velocity(const std::vector<AblationEntry>& models,
                                                  const EvalCondition& base,
                                                  const std::vector<double>& velocities =
                                                      {0.5, 7.0, 30.0},
                                                  int threads = 1) {
    std::vector<SweepResult> out;
    for (const auto& entry : models) {
        for (std::size_t li = 0; li < velocities.size(); ++li) {
            EvalCondition cond = base;
            cond.velocity = velocities[li];
            SweepResult r = evaluate_method(Method::Transformer, cond, entry.model, threads);
            r.method = "transformer_" + entry.label;
            out.push_back(std::move(r));
        }
    }
    return out;
}

/// Stable tabular output for plotting tools. One row per (method, condition).
inline void write_sweep_csv(const std::string& path, const std::vector<SweepResult>& results) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "write_sweep_csv: cannot open " + path);
    os << "method,velocity_mps,pi_busy,paths,nb_subbands,doppler_hz,rho_mean,rho_std,"
          "n_samples,seed\n";
    for (const auto& r : results) {
        std::ostringstream line;
        line << r.method << ',' << std::setprecision(10) << r.velocity << ',' << r.pi_busy << ','
             << r.paths << ',' << r.nb_subbands << ',' << r.doppler_hz << ','
             << std::setprecision(6) << std::fixed << r.rho_mean << ',' << r.rho_std
             << std::defaultfloat << ',' << r.n_samples << ',' << r.seed;
        os << line.str() << "\n";
    }
    require(static_cast<bool>(os), "write_sweep_csv: write failed for " + path);
}

}  // namespace cfr
