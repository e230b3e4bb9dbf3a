#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cfr/grid.hpp"

namespace cfr {

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 transform. sign = -1 forward, +1 inverse (unscaled).
inline void fft_pow2(cplx* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double step = sign * 2.0 * std::numbers::pi / len;
        for (int i = 0; i < n; i += len) {
            for (int k = 0; k < len / 2; ++k) {
                const cplx w = std::polar(1.0, step * k);
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

/// O(n^2) fallback for non power-of-two lengths.
inline void dft_direct(const cplx* in, cplx* out, int n, int sign) {
    std::vector<cplx> tw(n);
    for (int k = 0; k < n; ++k)
        tw[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * k / n);
    for (int f = 0; f < n; ++f) {
        cplx acc = 0.0;
        for (int t = 0; t < n; ++t)
            acc += in[t] * tw[static_cast<int>((static_cast<long long>(f) * t) % n)];
        out[f] = acc;
    }
}

inline void transform_rows(const ComplexGrid& in, ComplexGrid& out, int sign, double scale) {
    const int n = in.cols;
    if (is_pow2(n)) {
        for (int t = 0; t < in.rows; ++t) {
            cplx* row = &out.at(t, 0);
            std::copy(&in.at(t, 0), &in.at(t, 0) + n, row);
            fft_pow2(row, n, sign);
            if (scale != 1.0)
                for (int f = 0; f < n; ++f) row[f] *= scale;
        }
    } else {
        for (int t = 0; t < in.rows; ++t) {
            dft_direct(&in.at(t, 0), &out.at(t, 0), n, sign);
            if (scale != 1.0)
                for (int f = 0; f < n; ++f) out.at(t, f) *= scale;
        }
    }
}

}  // namespace detail

/// Unnormalized forward DFT of every row: H[t,f] = sum_n h[t,n] e^{-j2pi fn/F}.
inline ComplexGrid dft_rows(const ComplexGrid& cir) {
    require(cir.cols >= 1, "dft_rows: grid needs at least one column");
    check_finite(cir, "dft_rows");
    ComplexGrid out(cir.rows, cir.cols);
    detail::transform_rows(cir, out, -1, 1.0);
    return out;
}

/// Inverse of dft_rows with 1/F scaling: h[t,n] = (1/F) sum_f H[t,f] e^{+j2pi fn/F}.
inline ComplexGrid idft_rows(const ComplexGrid& cfr) {
    require(cfr.cols >= 1, "idft_rows: grid needs at least one column");
    check_finite(cfr, "idft_rows");
    ComplexGrid out(cfr.rows, cfr.cols);
    detail::transform_rows(cfr, out, +1, 1.0 / cfr.cols);
    return out;
}

/// Element-wise squared magnitude; the power delay profile when applied to
/// an impulse-response grid.
inline RealGrid pdp_rows(const ComplexGrid& cir) {
    RealGrid out(cir.rows, cir.cols);
    for (std::size_t i = 0; i < cir.data.size(); ++i) out.data[i] = std::norm(cir.data[i]);
    return out;
}

}  // namespace cfr
