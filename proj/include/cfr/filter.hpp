#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "cfr/util.hpp"

namespace cfr {

/// Second-order IIR section y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2]
///                               - a1 y[n-1] - a2 y[n-2].
struct BiquadFilter {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double wn = 0.0;  // normalized cutoff, fraction of Nyquist

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

    /// Schur stability condition for a quadratic with real coefficients.
    bool stable() const {
        return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
    }
};

/// Second-order Butterworth low-pass via the analog prototype
/// 1/(s^2 + sqrt(2) s + 1) and the bilinear transform with frequency
/// pre-warping. wn is a fraction of Nyquist in (0, 1); DC gain is exactly 1.
inline BiquadFilter butterworth_design(double wn) {
    require(wn > 0.0 && wn < 1.0,
            "butterworth_design: normalized cutoff must lie in (0, 1), got " + std::to_string(wn));
    const double k = std::tan(std::numbers::pi * wn / 2.0);
    const double k2 = k * k;
    const double sqrt2 = std::numbers::sqrt2;
    const double norm = 1.0 / (1.0 + sqrt2 * k + k2);
    BiquadFilter f;
    f.b0 = k2 * norm;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    f.a1 = 2.0 * (k2 - 1.0) * norm;
    f.a2 = (1.0 - sqrt2 * k + k2) * norm;
    f.wn = wn;
    require(f.stable(), "butterworth_design: unstable coefficients for wn=" + std::to_string(wn));
    return f;
}

/// Magnitude response at a normalized frequency w (fraction of Nyquist).
inline double biquad_gain_at(const BiquadFilter& f, double w) {
    const double omega = std::numbers::pi * w;
    const std::complex<double> z = std::polar(1.0, omega);
    const std::complex<double> zi = 1.0 / z;
    const std::complex<double> num = f.b0 + f.b1 * zi + f.b2 * zi * zi;
    const std::complex<double> den = 1.0 + f.a1 * zi + f.a2 * zi * zi;
    return std::abs(num / den);
}

/// Causal direct-form-II-transposed filtering with zero initial state.
/// The first `warmup` outputs are discarded; the returned sequence has
/// length samples.size() - warmup.
inline std::vector<double> filter_sequence(const BiquadFilter& f,
                                           std::span<const double> samples,
                                           int warmup) {
    require(warmup >= 0, "filter_sequence: warmup must be >= 0");
    require(static_cast<std::size_t>(warmup) <= samples.size(),
            "filter_sequence: warmup exceeds input length");
    std::vector<double> out;
    out.reserve(samples.size() - warmup);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t n = 0; n < samples.size(); ++n) {
        const double x = samples[n];
        const double y = f.b0 * x + s1;
        s1 = f.b1 * x - f.a1 * y + s2;
        s2 = f.b2 * x - f.a2 * y;
        if (n >= static_cast<std::size_t>(warmup)) out.push_back(y);
    }
    return out;
}

/// Warmup long enough to flush the startup transient: four times the
/// filter's approximate time constant, at least 32 samples.
inline int butterworth_warmup(double wn) {
    const double tau = std::numbers::sqrt2 / (std::numbers::pi * wn);
    const double w = 4.0 * tau;
    return std::max(32, static_cast<int>(std::ceil(w)));
}

}  // namespace cfr
