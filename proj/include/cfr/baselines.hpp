#pragma once

#include <optional>
#include <vector>

#include "cfr/dtmc.hpp"
#include "cfr/grid.hpp"

namespace cfr {

/// Strategy A: per frequency bin, scan forward in time and carry the last
/// observed value into busy cells. Cells with no prior observation stay 0.
inline ComplexGrid historical_fill(const ComplexGrid& masked, const InterferenceMask& mask) {
    require(masked.rows == mask.rows && masked.cols == mask.cols,
            "historical_fill: shape mismatch");
    ComplexGrid out = masked;
    for (int f = 0; f < masked.cols; ++f) {
        std::optional<cplx> last;
        for (int t = 0; t < masked.rows; ++t) {
            if (mask.at(t, f)) {
                out.at(t, f) = last.value_or(cplx(0.0, 0.0));
            } else {
                last = masked.at(t, f);
            }
        }
    }
    return out;
}

/// Strategy B: missing bins stay zero. The masked observation already is
/// the zero-filled reconstruction; kept as an explicit strategy for the
/// evaluation harness.
inline ComplexGrid zero_fill(const ComplexGrid& masked, const InterferenceMask& mask) {
    require(masked.rows == mask.rows && masked.cols == mask.cols, "zero_fill: shape mismatch");
    return masked;
}

namespace detail {

/// Natural cubic spline through strictly increasing knots (second
/// derivative zero at both end knots).
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        require(n >= 3, "NaturalCubicSpline: need at least 3 knots");
        m_.assign(n, 0.0);
        // tridiagonal system for interior second derivatives
        std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1];
            const double h1 = x_[i + 1] - x_[i];
            a[i] = h0;
            b[i] = 2.0 * (h0 + h1);
            c[i] = h1;
            d[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        // forward sweep (m_[0] = m_[n-1] = 0)
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
            if (i == 1) break;
        }
    }

    double operator()(double xq) const {
        // locate the interval; evaluation within [x_front, x_back] expected
        std::size_t i = 0;
        while (i + 2 < x_.size() && xq > x_[i + 1]) ++i;
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - xq) / h;
        const double b = (xq - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
    }

private:
    std::vector<double> x_, y_;
    std::vector<double> m_;  // second derivatives at knots
};

/// Fills one real-valued row given observed (position, value) samples.
/// >= 4 observed: natural cubic spline; 2..3 observed: linear interpolation;
/// < 2 observed: missing cells become 0. Queries beyond the observed range
/// take the nearest observed value.
inline void fill_row(const std::vector<int>& obs_pos, const std::vector<double>& obs_val,
                     const std::vector<int>& missing, double* row) {
    const std::size_t n_obs = obs_pos.size();
    if (n_obs < 2) {
        for (int f : missing) row[f] = 0.0;
        return;
    }
    const int lo = obs_pos.front();
    const int hi = obs_pos.back();
    if (n_obs >= 4) {
        std::vector<double> xs(obs_pos.begin(), obs_pos.end());
        detail::NaturalCubicSpline spline(xs, obs_val);
        for (int f : missing) {
            if (f <= lo) row[f] = obs_val.front();
            else if (f >= hi) row[f] = obs_val.back();
            else row[f] = spline(static_cast<double>(f));
        }
        return;
    }
    // linear fallback between consecutive observed points
    for (int f : missing) {
        if (f <= lo) {
            row[f] = obs_val.front();
        } else if (f >= hi) {
            row[f] = obs_val.back();
        } else {
            std::size_t i = 0;
            while (i + 2 < n_obs && f > obs_pos[i + 1]) ++i;
            const double w = static_cast<double>(f - obs_pos[i]) /
                             static_cast<double>(obs_pos[i + 1] - obs_pos[i]);
            row[f] = obs_val[i] + w * (obs_val[i + 1] - obs_val[i]);
        }
    }
}

}  // namespace detail

/// Strategy C: per snapshot, a 1D natural cubic spline over the observed
/// bins of the row, real and imaginary parts independently, evaluated at
/// the missing bins. Falls back to linear interpolation below 4 observed
/// bins and to zeros below 2; out-of-range bins take the nearest observed
/// value.
inline ComplexGrid spline_fill(const ComplexGrid& masked, const InterferenceMask& mask) {
    require(masked.rows == mask.rows && masked.cols == mask.cols, "spline_fill: shape mismatch");
    ComplexGrid out = masked;
    const int F = masked.cols;
    std::vector<int> obs_pos, missing;
    std::vector<double> re_val, im_val, re_row(F), im_row(F);
    for (int t = 0; t < masked.rows; ++t) {
        obs_pos.clear();
        missing.clear();
        re_val.clear();
        im_val.clear();
        for (int f = 0; f < F; ++f) {
            re_row[f] = masked.at(t, f).real();
            im_row[f] = masked.at(t, f).imag();
            if (mask.at(t, f)) {
                missing.push_back(f);
            } else {
                obs_pos.push_back(f);
                re_val.push_back(re_row[f]);
                im_val.push_back(im_row[f]);
            }
        }
        if (missing.empty()) continue;
        detail::fill_row(obs_pos, re_val, missing, re_row.data());
        detail::fill_row(obs_pos, im_val, missing, im_row.data());
        for (int f : missing) out.at(t, f) = cplx(re_row[f], im_row[f]);
    }
    return out;
}

}  // namespace cfr
