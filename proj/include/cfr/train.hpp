#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cfr/channel.hpp"
#include "cfr/dtmc.hpp"
#include "cfr/features.hpp"
#include "cfr/loss.hpp"
#include "cfr/model.hpp"
#include "cfr/optim.hpp"

namespace cfr {

/// Everything the optimization loop needs: grid/channel geometry, the
/// model, the optimizer schedule, and the per-sample randomization ranges.
struct TrainConfig {
    int epochs = 70;
    int steps_per_epoch = 5000;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double clip_norm = 1.0;
    double v_min = 0.5;   // m/s
    double v_max = 30.0;  // m/s
    double pi_min = 0.1;
    double pi_max = 0.9;
    double p10 = 0.30;
    LossWeights weights;
    std::uint64_t base_seed = 0;
    ChannelConfig channel;
    ModelConfig model;

    void validate() const {
        require(epochs >= 1, "TrainConfig: epochs must be >= 1");
        require(steps_per_epoch >= 1, "TrainConfig: steps_per_epoch must be >= 1");
        require(learning_rate > 0.0, "TrainConfig: learning rate must be > 0");
        require(weight_decay >= 0.0, "TrainConfig: weight decay must be >= 0");
        require(clip_norm > 0.0, "TrainConfig: clip_norm must be > 0");
        require(v_min <= v_max && v_min >= 0.0, "TrainConfig: need 0 <= v_min <= v_max");
        require(pi_min >= 0.0 && pi_min <= pi_max && pi_max < 1.0,
                "TrainConfig: need 0 <= pi_min <= pi_max < 1");
        weights.validate();
        channel.validate();
        model.validate();
        require(model.same_geometry(channel.snapshots, channel.bins(), channel.nb_subbands,
                                    channel.bins_per_subband),
                "TrainConfig: model geometry does not match channel geometry");
    }
};

struct TrainLogRecord {
    int epoch = 0;
    int step = 0;  // step within the epoch
    double velocity = 0.0;
    double pi_busy = 0.0;
    LossBreakdown loss;
    double grad_norm = 0.0;  // pre-clip
    double lr = 0.0;
};

struct TrainingSample {
    FeatureGrid features;
    ComplexGrid truth;
    double velocity = 0.0;
    double pi_busy = 0.0;
};

/// Deterministic per-step sample: velocity and occupancy drawn uniformly
/// from the configured ranges, then a fresh realization and mask, all from
/// the stream derived from (base_seed, step_index).
inline TrainingSample draw_training_sample(const TrainConfig& cfg, std::uint64_t step_index) {
    RngStream rng = derive_stream(cfg.base_seed, step_index);
    TrainingSample s;
    s.velocity = rng.uniform(cfg.v_min, cfg.v_max);
    s.pi_busy = rng.uniform(cfg.pi_min, cfg.pi_max);
    ChannelConfig chan = cfg.channel;
    chan.velocity = s.velocity;
    ChannelRealization r = generate_realization(chan, rng);
    DtmcParams dtmc = dtmc_for_target(s.pi_busy, cfg.p10);
    InterferenceMask mask =
        generate_mask(dtmc, chan.snapshots, chan.nb_subbands, chan.bins_per_subband, rng);
    s.features = make_features(apply_mask(r.cfr, mask), mask);
    s.truth = std::move(r.cfr);
    return s;
}

struct TrainOutcome {
    std::string final_checkpoint;
    std::vector<std::string> epoch_checkpoints;
    std::vector<double> epoch_mean_loss;
    std::string log_path;
};

inline std::string format_log_record(const TrainLogRecord& r) {
    std::ostringstream os;
    os << std::setprecision(10) << "epoch=" << r.epoch << " step=" << r.step
       << " v=" << r.velocity << " pi_busy=" << r.pi_busy << " loss_cfr=" << r.loss.cfr
       << " loss_pdp=" << r.loss.pdp << " loss_sparse=" << r.loss.sparse
       << " loss_temporal=" << r.loss.temporal << " loss_total=" << r.loss.total
       << " grad_norm=" << r.grad_norm << " lr=" << r.lr;
    return os.str();
}

/// Full optimization loop. Writes a checkpoint at the end of every epoch
/// plus a final one, and one log line per step. Aborts on a non-finite
/// loss, keeping the last epoch checkpoint.
inline TrainOutcome train(const TrainConfig& cfg, const std::string& checkpoint_dir,
                          const std::string& log_path,
                          const std::function<void(const TrainLogRecord&)>& on_step = nullptr) {
    cfg.validate();
    std::filesystem::create_directories(checkpoint_dir);
    if (!log_path.empty())
        std::filesystem::create_directories(std::filesystem::path(log_path).parent_path());

    ParameterStore store;
    {
        RngStream init_rng = derive_stream(cfg.base_seed, 0x494E4954ULL);  // init stream
        register_model_params(store, cfg.model, init_rng);
    }
    OptimizerState opt = OptimizerState::for_store(store);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        require(static_cast<bool>(log), "train: cannot open log file " + log_path);
    }

    TrainOutcome outcome;
    outcome.log_path = log_path;
    const long total_steps = static_cast<long>(cfg.epochs) * cfg.steps_per_epoch;
    std::string last_checkpoint = "(none)";

    auto checkpoint_name = [&](const std::string& tag) {
        return (std::filesystem::path(checkpoint_dir) /
                ("ckpt_seed" + std::to_string(cfg.base_seed) + "_" + tag + ".cfrt"))
            .string();
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (int step = 0; step < cfg.steps_per_epoch; ++step) {
            const long gstep = static_cast<long>(epoch - 1) * cfg.steps_per_epoch + step;
            const double lr = cosine_lr(gstep, total_steps, cfg.learning_rate);
            TrainingSample sample = draw_training_sample(cfg, static_cast<std::uint64_t>(gstep));

            ad::Tape<float> tape;
            ForwardBuilder<float> fb(tape, store, cfg.model);
            auto out = fb.run(sample.features);
            TapeLoss<float> L = build_total_loss(tape, out.out_r, out.out_i, sample.truth,
                                                 cfg.weights);
            const double total = static_cast<double>(tape.val(L.total)[0]);
            if (!std::isfinite(total))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(step) + "; last good checkpoint: " +
                            last_checkpoint);

            tape.backward(L.total);
            fb.writeback_grads();
            const double grad_norm = clip_gradients(store, cfg.clip_norm);
            adamw_step(store, opt, lr, cfg.weight_decay);

            TrainLogRecord rec;
            rec.epoch = epoch;
            rec.step = step;
            rec.velocity = sample.velocity;
            rec.pi_busy = sample.pi_busy;
            rec.loss = breakdown_from_tape(tape, L, cfg.weights);
            rec.grad_norm = grad_norm;
            rec.lr = lr;
            if (log.is_open()) log << format_log_record(rec) << "\n";
            if (on_step) on_step(rec);
            epoch_loss += rec.loss.total;
        }
        outcome.epoch_mean_loss.push_back(epoch_loss / cfg.steps_per_epoch);
        const std::string path = checkpoint_name("ep" + std::to_string(epoch));
        save_checkpoint(path, store, cfg.model);
        outcome.epoch_checkpoints.push_back(path);
        last_checkpoint = path;
    }

    outcome.final_checkpoint = checkpoint_name("final");
    save_checkpoint(outcome.final_checkpoint, store, cfg.model);
    return outcome;
}

}  // namespace cfr
