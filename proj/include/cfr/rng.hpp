#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cfr {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Mixes two 64-bit values into one; used to build hierarchical stream ids
/// (e.g. per-condition, per-sample) from a single base seed.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    std::uint64_t h = detail::splitmix64(s);
    s = b ^ 0x632BE59BD9B4E019ULL;
    h ^= detail::splitmix64(s) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
}

/// Splittable counter-seeded generator (xoshiro256++ core). A stream is
/// identified by (seed, stream_id); the same pair always reproduces the
/// same draw sequence, distinct ids give statistically independent ones.
/// Streams are single-owner: one stream per logical task, never shared.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::uint64_t x = mix64(seed, stream_id);
        for (auto& w : state_) w = detail::splitmix64(x);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Modulo bias is negligible for the small
    /// ranges used here (delay taps, jitter offsets).
    std::uint64_t uniform_int(std::uint64_t n) { return n ? next_u64() % n : 0; }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Exponential with mean 1.
    double exponential() { return -std::log1p(-uniform()); }

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

inline RngStream derive_stream(std::uint64_t base_seed, std::uint64_t stream_id) {
    return RngStream(base_seed, stream_id);
}

}  // namespace cfr
