#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfr/grid.hpp"
#include "cfr/rng.hpp"

namespace cfr {

/// Two-state (Idle/Busy) chain parameters with their stationary busy
/// probability pi_busy = p01 / (p01 + p10).
struct DtmcParams {
    double p01 = 0.0;      // Idle -> Busy
    double p10 = 0.30;     // Busy -> Idle
    double pi_busy = 0.0;

    void validate() const {
        require(p01 >= 0.0 && p01 <= 1.0 && p10 >= 0.0 && p10 <= 1.0,
                "DtmcParams: transition probabilities must lie in [0, 1]");
        require(pi_busy >= 0.0 && pi_busy <= 1.0, "DtmcParams: pi_busy must lie in [0, 1]");
    }
};

/// Solves the stationary equation for p01 given a target busy probability
/// and a fixed p10. Throws when the target is infeasible at this p10.
inline double p01_from_target(double pi_busy, double p10) {
    require(pi_busy >= 0.0 && pi_busy < 1.0, "p01_from_target: need 0 <= pi_busy < 1");
    require(p10 > 0.0 && p10 <= 1.0, "p01_from_target: need 0 < p10 <= 1");
    const double p01 = pi_busy * p10 / (1.0 - pi_busy);
    if (p01 > 1.0) {
        const double feasible_max = 1.0 / (1.0 + p10);
        throw Error("p01_from_target: pi_busy=" + std::to_string(pi_busy) +
                    " is infeasible at p10=" + std::to_string(p10) +
                    " (max feasible pi_busy is " + std::to_string(feasible_max) + ")");
    }
    return p01;
}

/// Occupancy-target resolution used by training and evaluation: p10 stays at
/// its default unless the target would need p01 > 1, in which case p01 is
/// pinned to 1 and p10 re-solved so the stationary busy probability is
/// preserved. Burst length then shortens; the swept quantity stays exact.
inline DtmcParams dtmc_for_target(double pi_busy, double p10 = 0.30) {
    require(pi_busy >= 0.0 && pi_busy <= 1.0, "dtmc_for_target: need 0 <= pi_busy <= 1");
    require(p10 > 0.0 && p10 <= 1.0, "dtmc_for_target: need 0 < p10 <= 1");
    DtmcParams d;
    d.pi_busy = pi_busy;
    if (pi_busy >= 1.0) {
        d.p01 = 1.0;
        d.p10 = 0.0;
        return d;
    }
    const double p01 = pi_busy * p10 / (1.0 - pi_busy);
    if (p01 <= 1.0) {
        d.p01 = p01;
        d.p10 = p10;
    } else {
        d.p01 = 1.0;
        d.p10 = (1.0 - pi_busy) / pi_busy;
    }
    return d;
}

/// Binary T x F interference mask (1 = busy/missing, 0 = idle/observed)
/// expanded from one chain trajectory per sub-band: every bin of sub-band b
/// carries the same value at a given snapshot.
struct InterferenceMask {
    int rows = 0;  // T
    int cols = 0;  // F
    int nb = 0;
    int fb = 0;
    std::vector<std::uint8_t> grid;                       // T x F
    std::vector<std::vector<std::uint8_t>> trajectories;  // Nb chains of length T

    std::uint8_t at(int t, int f) const { return grid[static_cast<std::size_t>(t) * cols + f]; }

    double busy_fraction() const {
        if (grid.empty()) return 0.0;
        std::size_t busy = 0;
        for (auto v : grid) busy += v;
        return static_cast<double>(busy) / static_cast<double>(grid.size());
    }
};

/// Simulates Nb independent chains (initial state from the stationary
/// distribution) and expands them to the full T x F mask.
inline InterferenceMask generate_mask(const DtmcParams& params, int T, int Nb, int Fb,
                                      RngStream& rng) {
    params.validate();
    require(T >= 1 && Nb >= 1 && Fb >= 1, "generate_mask: T, Nb, Fb must be >= 1");
    InterferenceMask m;
    m.rows = T;
    m.cols = Nb * Fb;
    m.nb = Nb;
    m.fb = Fb;
    m.grid.assign(static_cast<std::size_t>(T) * m.cols, 0);
    m.trajectories.assign(Nb, std::vector<std::uint8_t>(T, 0));
    for (int b = 0; b < Nb; ++b) {
        auto& traj = m.trajectories[b];
        std::uint8_t state = rng.uniform() < params.pi_busy ? 1 : 0;
        for (int t = 0; t < T; ++t) {
            if (t > 0) {
                const double u = rng.uniform();
                state = state ? (u < params.p10 ? 0 : 1) : (u < params.p01 ? 1 : 0);
            }
            traj[t] = state;
            if (state) {
                auto* row = &m.grid[static_cast<std::size_t>(t) * m.cols + b * Fb];
                std::fill(row, row + Fb, std::uint8_t{1});
            }
        }
    }
    return m;
}

/// H_m[t,f] = H[t,f] (1 - M[t,f]): busy cells zeroed, observed cells
/// bit-identical to the input.
inline ComplexGrid apply_mask(const ComplexGrid& cfr, const InterferenceMask& mask) {
    require(cfr.rows == mask.rows && cfr.cols == mask.cols,
            "apply_mask: grid is " + std::to_string(cfr.rows) + "x" + std::to_string(cfr.cols) +
                " but mask is " + std::to_string(mask.rows) + "x" + std::to_string(mask.cols));
    ComplexGrid out = cfr;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (mask.grid[i]) out.data[i] = 0.0;
    return out;
}

}  // namespace cfr
