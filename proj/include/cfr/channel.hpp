#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cfr/dft.hpp"
#include "cfr/filter.hpp"
#include "cfr/grid.hpp"
#include "cfr/rng.hpp"

namespace cfr {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Physical and geometric parameters of one simulated multi-band channel.
struct ChannelConfig {
    double fc = 3.5e9;              // carrier frequency [Hz]
    double bandwidth = 1e8;         // total bandwidth B [Hz]
    int nb_subbands = 5;            // Nb
    int bins_per_subband = 256;     // Fb
    int snapshots = 20;             // T
    double snapshot_duration = 5e-4;  // Ts [s]
    int paths = 6;                  // P
    double velocity = 7.0;          // v [m/s]
    int d_max = 0;                  // max delay tap; 0 selects F/16
    double noise_scale = 0.1;       // gain-noise multiplier
    bool jitter = true;             // per-snapshot +/-1 delay jitter

    int bins() const { return nb_subbands * bins_per_subband; }  // F
    int delay_span() const { return d_max > 0 ? d_max : std::max(1, bins() / 16); }
    double delta_f() const { return bandwidth / bins(); }
    double delta_tau() const { return 1.0 / bandwidth; }

    void validate() const {
        require(nb_subbands >= 1 && bins_per_subband >= 1, "ChannelConfig: Nb and Fb must be >= 1");
        require(snapshots >= 1, "ChannelConfig: snapshot count must be >= 1");
        require(snapshot_duration > 0.0, "ChannelConfig: snapshot duration must be > 0");
        require(paths >= 1, "ChannelConfig: path count must be >= 1");
        require(velocity >= 0.0, "ChannelConfig: velocity must be >= 0");
        require(fc > 0.0 && bandwidth > 0.0, "ChannelConfig: fc and bandwidth must be > 0");
        require(delay_span() > 0 && delay_span() < bins(),
                "ChannelConfig: d_max must satisfy 0 < d_max < F");
        require(noise_scale >= 0.0, "ChannelConfig: noise_scale must be >= 0");
    }
};

/// One multipath component: Rayleigh envelope, Doppler phase ramp,
/// band-limited complex gain noise, and a jittered delay tap.
struct PathState {
    double envelope = 0.0;     // |g_p|
    double phase0 = 0.0;       // initial phase [rad]
    double phase_inc = 0.0;    // Doppler increment [rad/snapshot]
    int base_delay = 0;        // delay tap index
    std::vector<int> jitter;   // per-snapshot offsets in {-1, 0, +1}
    std::vector<double> noise_re, noise_im;  // filtered noise, length T

    std::complex<double> gain_at(int t, double noise_scale) const {
        const std::complex<double> carrier =
            envelope * std::polar(1.0, phase0 + phase_inc * t);
        return carrier + noise_scale * std::complex<double>(noise_re[t], noise_im[t]);
    }

    int delay_at(int t, int d_max) const {
        return std::clamp(base_delay + jitter[t], 0, d_max);
    }
};

/// Paired impulse response / frequency response of one channel draw.
struct ChannelRealization {
    ComplexGrid cir;  // T x F, sparse taps
    ComplexGrid cfr;  // T x F, per-row DFT of cir
    ChannelConfig config;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

inline double max_doppler(double velocity, double fc) {
    require(velocity >= 0.0 && fc > 0.0, "max_doppler: need v >= 0 and fc > 0");
    return velocity * fc / kSpeedOfLight;
}

inline double doppler_cutoff_wn(double velocity, double fc, double ts) {
    const double raw = max_doppler(velocity, fc) * ts / 0.423;
    return std::clamp(raw, 1e-4, 1.0 - 1e-4);
}

inline std::vector<PathState> sample_paths(const ChannelConfig& cfg, RngStream& rng) {
    cfg.validate();
    const int T = cfg.snapshots;
    const double fd = max_doppler(cfg.velocity, cfg.fc);
    const double dphi_max = 2.0 * std::numbers::pi * fd * cfg.snapshot_duration;
    const double wn = doppler_cutoff_wn(cfg.velocity, cfg.fc, cfg.snapshot_duration);
    const BiquadFilter lp = butterworth_design(wn);
    const int warm = butterworth_warmup(wn);
    const int d_max = cfg.delay_span();

    // Structural draws (fixed count per path) come before every noise draw,
    // so two configs differing only in velocity share tap structure when fed
    // the same stream; only the Doppler scale and the noise sequences move.
    std::vector<PathState> paths(cfg.paths);
    for (auto& p : paths) {
        p.envelope = std::sqrt(rng.exponential());
        p.phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
        p.phase_inc = rng.uniform(-dphi_max, dphi_max);
        p.base_delay = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d_max) + 1));
        p.jitter.resize(T, 0);
        if (cfg.jitter)
            for (int t = 0; t < T; ++t)
                p.jitter[t] = static_cast<int>(rng.uniform_int(3)) - 1;
    }
    std::vector<double> white(static_cast<std::size_t>(warm) + T);
    for (auto& p : paths) {
        for (auto& w : white) w = rng.gaussian();
        p.noise_re = filter_sequence(lp, white, warm);
        for (auto& w : white) w = rng.gaussian();
        p.noise_im = filter_sequence(lp, white, warm);
    }
    return paths;
}

/// Builds the CIR by depositing every path's gain at its jittered delay
/// tap (colliding taps add coherently) and derives the CFR row-wise.
inline ChannelRealization generate_realization(const ChannelConfig& cfg, RngStream& rng) {
    const auto paths = sample_paths(cfg, rng);
    const int T = cfg.snapshots;
    const int F = cfg.bins();
    const int d_max = cfg.delay_span();

    ChannelRealization r;
    r.cir = ComplexGrid(T, F);
    for (int t = 0; t < T; ++t)
        for (const auto& p : paths)
            r.cir.at(t, p.delay_at(t, d_max)) += p.gain_at(t, cfg.noise_scale);
    r.cfr = dft_rows(r.cir);
    r.config = cfg;
    r.seed = rng.seed();
    r.stream_id = rng.stream_id();
    return r;
}

}  // namespace cfr
