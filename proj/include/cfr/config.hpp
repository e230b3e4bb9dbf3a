#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cfr/channel.hpp"
#include "cfr/loss.hpp"
#include "cfr/model.hpp"
#include "cfr/train.hpp"

namespace cfr {

/// Flat key=value settings shared by every command. Unset keys keep the
/// reference defaults (100 MHz across five 256-bin sub-bands at 3.5 GHz,
/// 20 half-millisecond snapshots, 6 paths; d_model 128 with 4 heads and
/// 2 blocks; 70 epochs of 5000 steps; 500 evaluation samples per point).
struct RunSettings {
    ChannelConfig channel;
    int d_model = 128;
    int n_heads = 4;
    int n_blocks = 2;
    int ffn_hidden = 256;

    int epochs = 70;
    int steps_per_epoch = 5000;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    double clip_norm = 1.0;
    double v_min = 0.5;
    double v_max = 30.0;
    double pi_min = 0.1;
    double pi_max = 0.9;
    double p10 = 0.30;
    LossWeights weights;

    int eval_samples = 500;
    double pi_busy = 0.5;  // fixed occupancy for evaluate/baseline/velocity sweeps

    ModelConfig model_config() const {
        ModelConfig m;
        m.d_model = d_model;
        m.n_heads = n_heads;
        m.n_blocks = n_blocks;
        m.ffn_hidden = ffn_hidden;
        m.snapshots = channel.snapshots;
        m.nb_subbands = channel.nb_subbands;
        m.bins_per_subband = channel.bins_per_subband;
        return m;
    }

    TrainConfig train_config(std::uint64_t seed) const {
        TrainConfig t;
        t.epochs = epochs;
        t.steps_per_epoch = steps_per_epoch;
        t.learning_rate = learning_rate;
        t.weight_decay = weight_decay;
        t.clip_norm = clip_norm;
        t.v_min = v_min;
        t.v_max = v_max;
        t.pi_min = pi_min;
        t.pi_max = pi_max;
        t.p10 = p10;
        t.weights = weights;
        t.base_seed = seed;
        t.channel = channel;
        t.model = model_config();
        return t;
    }

    void validate() const {
        channel.validate();
        model_config().validate();
        require(epochs >= 1 && steps_per_epoch >= 1,
                "config: epochs and steps_per_epoch must be >= 1");
        require(learning_rate > 0.0, "config: learning_rate must be > 0");
        require(clip_norm > 0.0, "config: clip_norm must be > 0");
        require(v_min >= 0.0 && v_min <= v_max, "config: need 0 <= v_min <= v_max");
        require(pi_min >= 0.0 && pi_min <= pi_max && pi_max < 1.0,
                "config: need 0 <= pi_min <= pi_max < 1");
        require(pi_busy >= 0.0 && pi_busy <= 1.0, "config: pi_busy must lie in [0, 1]");
        require(p10 > 0.0 && p10 <= 1.0, "config: need 0 < p10 <= 1");
        require(eval_samples >= 1, "config: eval_samples must be >= 1");
        weights.validate();
    }
};

namespace detail_config {

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "fc", "bandwidth", "nb_subbands", "bins_per_subband", "snapshots",
        "snapshot_duration", "paths", "velocity", "d_max", "noise_scale", "jitter",
        "d_model", "n_heads", "n_blocks", "ffn_hidden",
        "epochs", "steps_per_epoch", "learning_rate", "weight_decay", "clip_norm",
        "v_min", "v_max", "pi_min", "pi_max", "p10",
        "lambda_pdp", "lambda_sparse", "lambda_temp",
        "eval_samples", "pi_busy"};
    return keys;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        require(pos == v.size(), "");
        return x;
    } catch (...) {
        throw Error("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        require(pos == v.size(), "");
        return x;
    } catch (...) {
        throw Error("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw Error("config: key '" + key + "' expects a boolean (true/false/1/0), got '" + v + "'");
}

}  // namespace detail_config

/// Applies one key=value assignment; unknown keys error out listing every
/// valid key.
inline void apply_setting(RunSettings& s, const std::string& key, const std::string& value) {
    using namespace detail_config;
    if (key == "fc") s.channel.fc = to_double(key, value);
    else if (key == "bandwidth") s.channel.bandwidth = to_double(key, value);
    else if (key == "nb_subbands") s.channel.nb_subbands = to_int(key, value);
    else if (key == "bins_per_subband") s.channel.bins_per_subband = to_int(key, value);
    else if (key == "snapshots") s.channel.snapshots = to_int(key, value);
    else if (key == "snapshot_duration") s.channel.snapshot_duration = to_double(key, value);
    else if (key == "paths") s.channel.paths = to_int(key, value);
    else if (key == "velocity") s.channel.velocity = to_double(key, value);
    else if (key == "d_max") s.channel.d_max = to_int(key, value);
    else if (key == "noise_scale") s.channel.noise_scale = to_double(key, value);
    else if (key == "jitter") s.channel.jitter = to_bool(key, value);
    else if (key == "d_model") s.d_model = to_int(key, value);
    else if (key == "n_heads") s.n_heads = to_int(key, value);
    else if (key == "n_blocks") s.n_blocks = to_int(key, value);
    else if (key == "ffn_hidden") s.ffn_hidden = to_int(key, value);
    else if (key == "epochs") s.epochs = to_int(key, value);
    else if (key == "steps_per_epoch") s.steps_per_epoch = to_int(key, value);
    else if (key == "learning_rate") s.learning_rate = to_double(key, value);
    else if (key == "weight_decay") s.weight_decay = to_double(key, value);
    else if (key == "clip_norm") s.clip_norm = to_double(key, value);
    else if (key == "v_min") s.v_min = to_double(key, value);
    else if (key == "v_max") s.v_max = to_double(key, value);
    else if (key == "pi_min") s.pi_min = to_double(key, value);
    else if (key == "pi_max") s.pi_max = to_double(key, value);
    else if (key == "p10") s.p10 = to_double(key, value);
    else if (key == "lambda_pdp") s.weights.lambda_pdp = to_double(key, value);
    else if (key == "lambda_sparse") s.weights.lambda_sparse = to_double(key, value);
    else if (key == "lambda_temp") s.weights.lambda_temp = to_double(key, value);
    else if (key == "eval_samples") s.eval_samples = to_int(key, value);
    else if (key == "pi_busy") s.pi_busy = to_double(key, value);
    else {
        std::string valid;
        for (const auto& k : known_keys()) valid += (valid.empty() ? "" : ", ") + k;
        throw Error("config: unknown key '" + key + "'; valid keys: " + valid);
    }
}

/// Parses a key = value file ('#' starts a comment; blank lines ignored).
/// Keys not present keep their defaults; an empty file yields the full
/// default configuration.
inline RunSettings parse_config_file(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "config: cannot open " + path);
    RunSettings s;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail_config::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "config: " + path + ":" + std::to_string(line_no) +
                                             ": expected key = value, got '" + line + "'");
        const std::string key = detail_config::trim(line.substr(0, eq));
        const std::string value = detail_config::trim(line.substr(eq + 1));
        apply_setting(s, key, value);
    }
    return s;
}

/// `key=value` override strings (command-line --set flags beat file values).
inline void apply_overrides(RunSettings& s, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        require(eq != std::string::npos, "config: override '" + o + "' must look like key=value");
        apply_setting(s, detail_config::trim(o.substr(0, eq)),
                      detail_config::trim(o.substr(eq + 1)));
    }
}

/// Human-readable echo of the derived grid quantities.
inline std::string derived_summary(const RunSettings& s) {
    std::ostringstream os;
    os << "F=" << s.channel.bins() << " bins, delta_f=" << std::setprecision(10)
       << s.channel.delta_f() << " Hz/bin, delta_tau=" << s.channel.delta_tau()
       << " s, d_max=" << s.channel.delay_span();
    return os.str();
}

}  // namespace cfr
