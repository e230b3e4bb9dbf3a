#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cfr/autograd.hpp"
#include "cfr/dft.hpp"
#include "cfr/grid.hpp"

namespace cfr {

/// Weights of the three physics terms in the composite loss.
struct LossWeights {
    double lambda_pdp = 1.0;
    double lambda_sparse = 5e-4;
    double lambda_temp = 0.05;

    void validate() const {
        require(lambda_pdp >= 0.0 && lambda_sparse >= 0.0 && lambda_temp >= 0.0,
                "LossWeights: weights must be >= 0");
    }
};

struct LossBreakdown {
    double cfr = 0.0;
    double pdp = 0.0;
    double sparse = 0.0;
    double temporal = 0.0;
    double total = 0.0;
};

/// Mean squared complex error over the full grid.
inline double loss_cfr(const ComplexGrid& est, const ComplexGrid& truth) {
    require(est.same_shape(truth), "loss_cfr: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < est.data.size(); ++i) acc += std::norm(est.data[i] - truth.data[i]);
    return acc / static_cast<double>(est.data.size());
}

/// Mean squared error between the power delay profiles of the two grids'
/// impulse responses; invariant to a global phase on est.
inline double loss_pdp(const ComplexGrid& est, const ComplexGrid& truth) {
    require(est.same_shape(truth), "loss_pdp: shape mismatch");
    const ComplexGrid he = idft_rows(est);
    const ComplexGrid ht = idft_rows(truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < he.data.size(); ++i) {
        const double d = std::norm(he.data[i]) - std::norm(ht.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(he.data.size());
}

/// Mean absolute impulse-response amplitude (L1 sparsity pressure).
inline double loss_sparse(const ComplexGrid& est) {
    const ComplexGrid he = idft_rows(est);
    double acc = 0.0;
    for (const auto& v : he.data) acc += std::abs(v);
    return acc / static_cast<double>(he.data.size());
}

/// Mean frame-to-frame complex difference magnitude of the estimate;
/// defined as 0 for T < 2.
inline double loss_temporal(const ComplexGrid& est) {
    if (est.rows < 2) return 0.0;
    double acc = 0.0;
    for (int t = 0; t + 1 < est.rows; ++t)
        for (int f = 0; f < est.cols; ++f) acc += std::abs(est.at(t + 1, f) - est.at(t, f));
    return acc / (static_cast<double>(est.rows - 1) * est.cols);
}

inline LossBreakdown total_loss(const ComplexGrid& est, const ComplexGrid& truth,
                                const LossWeights& w) {
    w.validate();
    LossBreakdown b;
    b.cfr = loss_cfr(est, truth);
    b.pdp = loss_pdp(est, truth);
    b.sparse = loss_sparse(est);
    b.temporal = loss_temporal(est);
    b.total = b.cfr + w.lambda_pdp * b.pdp + w.lambda_sparse * b.sparse + w.lambda_temp * b.temporal;
    return b;
}

/// PDP similarity factor rho = 1 - ||p_hat - p||_2 / sqrt(2) on per-snapshot
/// unit-L2-normalized PDPs, averaged over snapshots and clamped to [0, 1].
/// A zero-energy truth row is an error; a zero-energy estimate row scores 0.
inline double pdp_similarity(const ComplexGrid& est, const ComplexGrid& truth) {
    require(est.same_shape(truth), "pdp_similarity: shape mismatch");
    const ComplexGrid he = idft_rows(est);
    const ComplexGrid ht = idft_rows(truth);
    const int T = est.rows, F = est.cols;
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
        double norm_e = 0.0, norm_t = 0.0;
        for (int f = 0; f < F; ++f) {
            norm_e += std::norm(he.at(t, f)) * std::norm(he.at(t, f));
            norm_t += std::norm(ht.at(t, f)) * std::norm(ht.at(t, f));
        }
        require(norm_t > 0.0, "pdp_similarity: zero-energy truth row " + std::to_string(t));
        if (norm_e <= 0.0) continue;  // rho = 0 for this snapshot
        const double inv_e = 1.0 / std::sqrt(norm_e);
        const double inv_t = 1.0 / std::sqrt(norm_t);
        double dist2 = 0.0;
        for (int f = 0; f < F; ++f) {
            const double d = std::norm(he.at(t, f)) * inv_e - std::norm(ht.at(t, f)) * inv_t;
            dist2 += d * d;
        }
        acc += 1.0 - std::sqrt(dist2) / std::numbers::sqrt2;
    }
    return std::clamp(acc / T, 0.0, 1.0);
}

/// Differentiable composite loss on a tape: est is the pair of model output
/// grids, truth is a constant. Mirrors the plain functions above.
template <typename S>
struct TapeLoss {
    ad::Var cfr, pdp, sparse, temporal, total;
};

template <typename S>
inline TapeLoss<S> build_total_loss(ad::Tape<S>& tape, ad::Var out_r, ad::Var out_i,
                                    const ComplexGrid& truth, const LossWeights& w) {
    w.validate();
    const int T = truth.rows, F = truth.cols;
    require(out_r.rows == T && out_r.cols == F, "build_total_loss: shape mismatch");
    const std::size_t n = truth.data.size();

    std::vector<S> tr(n), ti(n);
    for (std::size_t i = 0; i < n; ++i) {
        tr[i] = static_cast<S>(truth.data[i].real());
        ti[i] = static_cast<S>(truth.data[i].imag());
    }
    const ComplexGrid ht = idft_rows(truth);
    std::vector<S> pdp_truth(n);
    for (std::size_t i = 0; i < n; ++i) pdp_truth[i] = static_cast<S>(std::norm(ht.data[i]));

    TapeLoss<S> L;
    L.cfr = tape.mse_complex(out_r, out_i, tr, ti);
    auto [hr, hi] = tape.idft_rows(out_r, out_i);
    L.pdp = tape.power_mse(hr, hi, pdp_truth);
    L.sparse = tape.mean_abs_complex(hr, hi);
    L.temporal = tape.temporal_diff_mean_abs(out_r, out_i, T, F);
    L.total = tape.weighted_sum({L.cfr, L.pdp, L.sparse, L.temporal},
                                {S(1), static_cast<S>(w.lambda_pdp),
                                 static_cast<S>(w.lambda_sparse), static_cast<S>(w.lambda_temp)});
    return L;
}

template <typename S>
inline LossBreakdown breakdown_from_tape(const ad::Tape<S>& tape, const TapeLoss<S>& L,
                                         const LossWeights& w) {
    LossBreakdown b;
    b.cfr = static_cast<double>(tape.val(L.cfr)[0]);
    b.pdp = static_cast<double>(tape.val(L.pdp)[0]);
    b.sparse = static_cast<double>(tape.val(L.sparse)[0]);
    b.temporal = static_cast<double>(tape.val(L.temporal)[0]);
    b.total = b.cfr + w.lambda_pdp * b.pdp + w.lambda_sparse * b.sparse + w.lambda_temp * b.temporal;
    return b;
}

}  // namespace cfr
