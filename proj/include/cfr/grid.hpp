#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "cfr/util.hpp"

namespace cfr {

using cplx = std::complex<double>;

/// Dense row-major T x F grid of complex channel gains. Rows index time
/// snapshots, columns frequency bins (or delay taps for an impulse
/// response). The universal currency between simulation, model, baselines
/// and metrics.
struct ComplexGrid {
    int rows = 0;
    int cols = 0;
    std::vector<cplx> data;

    ComplexGrid() = default;
    ComplexGrid(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {
        require(r >= 0 && c >= 0, "ComplexGrid: negative dimensions");
    }

    cplx& at(int t, int f) { return data[static_cast<std::size_t>(t) * cols + f]; }
    const cplx& at(int t, int f) const { return data[static_cast<std::size_t>(t) * cols + f]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const ComplexGrid& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

/// Real-valued companion grid (power delay profiles, masks-as-floats, ...).
struct RealGrid {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    RealGrid() = default;
    RealGrid(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& at(int t, int f) { return data[static_cast<std::size_t>(t) * cols + f]; }
    const double& at(int t, int f) const { return data[static_cast<std::size_t>(t) * cols + f]; }

    std::size_t size() const { return data.size(); }
};

/// Throws naming the first offending row if any value is NaN/Inf.
inline void check_finite(const ComplexGrid& g, const std::string& what) {
    for (int t = 0; t < g.rows; ++t) {
        for (int f = 0; f < g.cols; ++f) {
            const cplx& v = g.at(t, f);
            if (!is_finite(v.real()) || !is_finite(v.imag())) {
                throw Error(what + ": non-finite value at row " + std::to_string(t) +
                            ", col " + std::to_string(f));
            }
        }
    }
}

}  // namespace cfr
