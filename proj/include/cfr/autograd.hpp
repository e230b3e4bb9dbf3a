#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cfr/util.hpp"

namespace cfr::ad {

/// Handle into a Tape. rows/cols describe the logical 2D layout of the
/// node's flat value buffer (row-major).
struct Var {
    std::size_t idx = 0;
    int rows = 0;
    int cols = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Reverse-mode tape over real tensors. One tape per forward/backward pass;
/// nodes are appended in evaluation order, so index order is a valid
/// topological order for the backward sweep. Templated on the scalar type:
/// float for training, double for finite-difference checks.
template <typename S>
class Tape {
public:
    Var alloc(int rows, int cols) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val.assign(static_cast<std::size_t>(rows) * cols, S(0));
        n.grad.assign(n.val.size(), S(0));
        return Var{nodes_.size() - 1, rows, cols};
    }

    /// Leaf with externally supplied values (copied in). Gradients are read
    /// back by the caller after backward().
    Var leaf(std::span<const S> values, int rows, int cols) {
        require(values.size() == static_cast<std::size_t>(rows) * cols, "Tape::leaf: size mismatch");
        Var v = alloc(rows, cols);
        std::copy(values.begin(), values.end(), nodes_[v.idx].val.begin());
        return v;
    }

    /// Constant node: participates in forward math, receives no gradient.
    Var constant(std::span<const S> values, int rows, int cols) { return leaf(values, rows, cols); }

    std::span<S> val(Var v) { return nodes_[v.idx].val; }
    std::span<const S> val(Var v) const { return nodes_[v.idx].val; }
    std::span<S> grad(Var v) { return nodes_[v.idx].grad; }

    S scalar(Var v) const {
        require(v.size() == 1, "Tape::scalar: not a scalar node");
        return nodes_[v.idx].val[0];
    }

    /// Entries allocated for attention score matrices, keyed by axis tag.
    const std::map<std::string, std::size_t>& score_allocations() const { return score_alloc_; }

    // ---- elementwise & shape ----

    Var add(Var a, Var b) {
        require(a.size() == b.size(), "Tape::add: size mismatch");
        Var out = alloc(a.rows, a.cols);
        auto& o = nodes_[out.idx].val;
        const auto& x = nodes_[a.idx].val;
        const auto& y = nodes_[b.idx].val;
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
        nodes_[out.idx].back = [this, a, b, out] {
            auto g = grad(out);
            auto ga = grad(a);
            auto gb = grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        };
        return out;
    }

    Var scale(Var a, S factor) {
        Var out = alloc(a.rows, a.cols);
        auto& o = nodes_[out.idx].val;
        const auto& x = nodes_[a.idx].val;
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = factor * x[i];
        nodes_[out.idx].back = [this, a, out, factor] {
            auto g = grad(out);
            auto ga = grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
        };
        return out;
    }

    Var reshape(Var a, int rows, int cols) {
        require(a.size() == static_cast<std::size_t>(rows) * cols, "Tape::reshape: size mismatch");
        Var out = alloc(rows, cols);
        nodes_[out.idx].val = nodes_[a.idx].val;
        nodes_[out.idx].back = [this, a, out] {
            auto g = grad(out);
            auto ga = grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        };
        return out;
    }

    /// out[r, :] = x[perm[r], :]
    Var permute_rows(Var a, const std::vector<int>& perm) {
        require(perm.size() == static_cast<std::size_t>(a.rows), "Tape::permute_rows: bad perm");
        Var out = alloc(a.rows, a.cols);
        auto& o = nodes_[out.idx].val;
        const auto& x = nodes_[a.idx].val;
        const int c = a.cols;
        for (int r = 0; r < a.rows; ++r)
            std::copy_n(&x[static_cast<std::size_t>(perm[r]) * c], c,
                        &o[static_cast<std::size_t>(r) * c]);
        nodes_[out.idx].back = [this, a, out, perm] {
            auto g = grad(out);
            auto ga = grad(a);
            const int c = a.cols;
            for (int r = 0; r < a.rows; ++r) {
                const S* gs = &g[static_cast<std::size_t>(r) * c];
                S* gd = &ga[static_cast<std::size_t>(perm[r]) * c];
                for (int j = 0; j < c; ++j) gd[j] += gs[j];
            }
        };
        return out;
    }

    Var slice_cols(Var a, int c0, int width) {
        require(c0 >= 0 && c0 + width <= a.cols, "Tape::slice_cols: out of range");
        Var out = alloc(a.rows, width);
        auto& o = nodes_[out.idx].val;
        const auto& x = nodes_[a.idx].val;
        for (int r = 0; r < a.rows; ++r)
            std::copy_n(&x[static_cast<std::size_t>(r) * a.cols + c0], width,
                        &o[static_cast<std::size_t>(r) * width]);
        nodes_[out.idx].back = [this, a, out, c0, width] {
            auto g = grad(out);
            auto ga = grad(a);
            for (int r = 0; r < a.rows; ++r) {
                const S* gs = &g[static_cast<std::size_t>(r) * width];
                S* gd = &ga[static_cast<std::size_t>(r) * a.cols + c0];
                for (int j = 0; j < width; ++j) gd[j] += gs[j];
            }
        };
        return out;
    }

    Var concat_cols(const std::vector<Var>& parts) {
        require(!parts.empty(), "Tape::concat_cols: empty");
        int total = 0;
        for (const Var& p : parts) {
            require(p.rows == parts[0].rows, "Tape::concat_cols: row mismatch");
            total += p.cols;
        }
        Var out = alloc(parts[0].rows, total);
        auto& o = nodes_[out.idx].val;
        int off = 0;
        for (const Var& p : parts) {
            const auto& x = nodes_[p.idx].val;
            for (int r = 0; r < p.rows; ++r)
                std::copy_n(&x[static_cast<std::size_t>(r) * p.cols], p.cols,
                            &o[static_cast<std::size_t>(r) * total + off]);
            off += p.cols;
        }
        nodes_[out.idx].back = [this, parts, out, total] {
            auto g = grad(out);
            int off = 0;
            for (const Var& p : parts) {
                auto gp = grad(p);
                for (int r = 0; r < p.rows; ++r) {
                    const S* gs = &g[static_cast<std::size_t>(r) * total + off];
                    S* gd = &gp[static_cast<std::size_t>(r) * p.cols];
                    for (int j = 0; j < p.cols; ++j) gd[j] += gs[j];
                }
                off += p.cols;
            }
        };
        return out;
    }

    /// Adds table row (r mod table_rows) to every row r of x. Used for the
    /// frequency positional encoding on t-major token layouts.
    Var add_cyclic_rows(Var x, std::span<const S> table, int table_rows) {
        require(table.size() == static_cast<std::size_t>(table_rows) * x.cols,
                "Tape::add_cyclic_rows: table size mismatch");
        Var out = alloc(x.rows, x.cols);
        auto& o = nodes_[out.idx].val;
        const auto& v = nodes_[x.idx].val;
        for (int r = 0; r < x.rows; ++r) {
            const S* trow = &table[static_cast<std::size_t>(r % table_rows) * x.cols];
            const S* xrow = &v[static_cast<std::size_t>(r) * x.cols];
            S* orow = &o[static_cast<std::size_t>(r) * x.cols];
            for (int j = 0; j < x.cols; ++j) orow[j] = xrow[j] + trow[j];
        }
        nodes_[out.idx].back = [this, x, out] {
            auto g = grad(out);
            auto gx = grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        };
        return out;
    }

    // ---- dense layers ----

    /// y = x W^T + b with W stored (out_features x in_features), b optional.
    Var linear(Var x, Var w, Var b, bool has_bias = true) {
        const int in = w.cols, out_f = w.rows, n = x.rows;
        require(x.cols == in, "Tape::linear: input width " + std::to_string(x.cols) +
                                  " does not match weight in-features " + std::to_string(in));
        if (has_bias) require(b.size() == static_cast<std::size_t>(out_f), "Tape::linear: bias size");
        Var out = alloc(n, out_f);
        auto& y = nodes_[out.idx].val;
        const auto& xv = nodes_[x.idx].val;
        const auto& wv = nodes_[w.idx].val;
        for (int r = 0; r < n; ++r) {
            const S* xr = &xv[static_cast<std::size_t>(r) * in];
            S* yr = &y[static_cast<std::size_t>(r) * out_f];
            for (int o = 0; o < out_f; ++o) {
                const S* wo = &wv[static_cast<std::size_t>(o) * in];
                S acc = has_bias ? nodes_[b.idx].val[o] : S(0);
                for (int i = 0; i < in; ++i) acc += xr[i] * wo[i];
                yr[o] = acc;
            }
        }
        nodes_[out.idx].back = [this, x, w, b, out, has_bias, in, out_f, n] {
            auto g = grad(out);
            auto gx = grad(x);
            auto gw = grad(w);
            const auto& xv = nodes_[x.idx].val;
            const auto& wv = nodes_[w.idx].val;
            for (int r = 0; r < n; ++r) {
                const S* gr = &g[static_cast<std::size_t>(r) * out_f];
                const S* xr = &xv[static_cast<std::size_t>(r) * in];
                S* gxr = &gx[static_cast<std::size_t>(r) * in];
                for (int o = 0; o < out_f; ++o) {
                    const S go = gr[o];
                    if (go == S(0)) continue;
                    const S* wo = &wv[static_cast<std::size_t>(o) * in];
                    S* gwo = &gw[static_cast<std::size_t>(o) * in];
                    for (int i = 0; i < in; ++i) {
                        gxr[i] += go * wo[i];
                        gwo[i] += go * xr[i];
                    }
                }
            }
            if (has_bias) {
                auto gb = grad(b);
                for (int r = 0; r < n; ++r) {
                    const S* gr = &g[static_cast<std::size_t>(r) * out_f];
                    for (int o = 0; o < out_f; ++o) gb[o] += gr[o];
                }
            }
        };
        return out;
    }

    Var gelu(Var x) {
        Var out = alloc(x.rows, x.cols);
        auto& y = nodes_[out.idx].val;
        const auto& v = nodes_[x.idx].val;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double xd = static_cast<double>(v[i]);
            y[i] = static_cast<S>(0.5 * xd * (1.0 + std::erf(xd / std::numbers::sqrt2)));
        }
        nodes_[out.idx].back = [this, x, out] {
            auto g = grad(out);
            auto gx = grad(x);
            const auto& v = nodes_[x.idx].val;
            constexpr double inv_sqrt_2pi = 0.3989422804014327;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double xd = static_cast<double>(v[i]);
                const double cdf = 0.5 * (1.0 + std::erf(xd / std::numbers::sqrt2));
                const double pdf = inv_sqrt_2pi * std::exp(-0.5 * xd * xd);
                gx[i] += g[i] * static_cast<S>(cdf + xd * pdf);
            }
        };
        return out;
    }

    /// Per-row normalization with learned gain/bias over the feature axis.
    Var layernorm(Var x, Var gain, Var bias, S eps = S(1e-5)) {
        const int n = x.rows, d = x.cols;
        require(gain.size() == static_cast<std::size_t>(d) && bias.size() == static_cast<std::size_t>(d),
                "Tape::layernorm: gain/bias width mismatch");
        Var out = alloc(n, d);
        auto& y = nodes_[out.idx].val;
        const auto& v = nodes_[x.idx].val;
        const auto& gv = nodes_[gain.idx].val;
        const auto& bv = nodes_[bias.idx].val;
        for (int r = 0; r < n; ++r) {
            const S* xr = &v[static_cast<std::size_t>(r) * d];
            S* yr = &y[static_cast<std::size_t>(r) * d];
            S mean = S(0);
            for (int j = 0; j < d; ++j) mean += xr[j];
            mean /= S(d);
            S var = S(0);
            for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
            var /= S(d);
            const S inv = S(1) / std::sqrt(var + eps);
            for (int j = 0; j < d; ++j) yr[j] = gv[j] * (xr[j] - mean) * inv + bv[j];
        }
        nodes_[out.idx].back = [this, x, gain, bias, out, eps, n, d] {
            auto g = grad(out);
            auto gx = grad(x);
            auto gg = grad(gain);
            auto gb = grad(bias);
            const auto& v = nodes_[x.idx].val;
            const auto& gv = nodes_[gain.idx].val;
            std::vector<S> xhat(d), gy(d);
            for (int r = 0; r < n; ++r) {
                const S* xr = &v[static_cast<std::size_t>(r) * d];
                const S* gr = &g[static_cast<std::size_t>(r) * d];
                S mean = S(0);
                for (int j = 0; j < d; ++j) mean += xr[j];
                mean /= S(d);
                S var = S(0);
                for (int j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
                var /= S(d);
                const S inv = S(1) / std::sqrt(var + eps);
                S mean_gy = S(0), mean_gy_xhat = S(0);
                for (int j = 0; j < d; ++j) {
                    xhat[j] = (xr[j] - mean) * inv;
                    gy[j] = gr[j] * gv[j];
                    mean_gy += gy[j];
                    mean_gy_xhat += gy[j] * xhat[j];
                    gg[j] += gr[j] * xhat[j];
                    gb[j] += gr[j];
                }
                mean_gy /= S(d);
                mean_gy_xhat /= S(d);
                S* gxr = &gx[static_cast<std::size_t>(r) * d];
                for (int j = 0; j < d; ++j)
                    gxr[j] += inv * (gy[j] - mean_gy - xhat[j] * mean_gy_xhat);
            }
        };
        return out;
    }

    Var softmax_rows(Var x) {
        const int n = x.rows, d = x.cols;
        Var out = alloc(n, d);
        auto& y = nodes_[out.idx].val;
        const auto& v = nodes_[x.idx].val;
        for (int r = 0; r < n; ++r) {
            const S* xr = &v[static_cast<std::size_t>(r) * d];
            S* yr = &y[static_cast<std::size_t>(r) * d];
            S mx = xr[0];
            for (int j = 1; j < d; ++j) mx = std::max(mx, xr[j]);
            S sum = S(0);
            for (int j = 0; j < d; ++j) {
                yr[j] = std::exp(xr[j] - mx);
                sum += yr[j];
            }
            const S inv = S(1) / sum;
            for (int j = 0; j < d; ++j) yr[j] *= inv;
        }
        nodes_[out.idx].back = [this, x, out, n, d] {
            auto g = grad(out);
            auto gx = grad(x);
            const auto& y = nodes_[out.idx].val;
            for (int r = 0; r < n; ++r) {
                const S* yr = &y[static_cast<std::size_t>(r) * d];
                const S* gr = &g[static_cast<std::size_t>(r) * d];
                S dot = S(0);
                for (int j = 0; j < d; ++j) dot += gr[j] * yr[j];
                S* gxr = &gx[static_cast<std::size_t>(r) * d];
                for (int j = 0; j < d; ++j) gxr[j] += yr[j] * (gr[j] - dot);
            }
        };
        return out;
    }

    // ---- batched attention primitives ----
    // q, k, v are (batch*len) x head_dim; score matrices are block-diagonal
    // per sequence, stored (batch*len) x len. Keeping the blocks separate is
    // what holds score memory at batch*len^2 instead of (batch*len)^2.

    Var attention_scores(Var q, Var k, int batch, int len, S scale, const std::string& tag) {
        const int hd = q.cols;
        require(q.rows == batch * len && k.rows == batch * len && k.cols == hd,
                "Tape::attention_scores: shape mismatch");
        Var out = alloc(batch * len, len);
        score_alloc_[tag] += out.size();
        auto& s = nodes_[out.idx].val;
        const auto& qv = nodes_[q.idx].val;
        const auto& kv = nodes_[k.idx].val;
        for (int b = 0; b < batch; ++b) {
            for (int i = 0; i < len; ++i) {
                const S* qi = &qv[(static_cast<std::size_t>(b) * len + i) * hd];
                S* si = &s[(static_cast<std::size_t>(b) * len + i) * len];
                for (int j = 0; j < len; ++j) {
                    const S* kj = &kv[(static_cast<std::size_t>(b) * len + j) * hd];
                    S acc = S(0);
                    for (int c = 0; c < hd; ++c) acc += qi[c] * kj[c];
                    si[j] = scale * acc;
                }
            }
        }
        nodes_[out.idx].back = [this, q, k, out, batch, len, hd, scale] {
            auto g = grad(out);
            auto gq = grad(q);
            auto gk = grad(k);
            const auto& qv = nodes_[q.idx].val;
            const auto& kv = nodes_[k.idx].val;
            for (int b = 0; b < batch; ++b) {
                for (int i = 0; i < len; ++i) {
                    const S* gi = &g[(static_cast<std::size_t>(b) * len + i) * len];
                    const S* qi = &qv[(static_cast<std::size_t>(b) * len + i) * hd];
                    S* gqi = &gq[(static_cast<std::size_t>(b) * len + i) * hd];
                    for (int j = 0; j < len; ++j) {
                        const S gij = scale * gi[j];
                        if (gij == S(0)) continue;
                        const S* kj = &kv[(static_cast<std::size_t>(b) * len + j) * hd];
                        S* gkj = &gk[(static_cast<std::size_t>(b) * len + j) * hd];
                        for (int c = 0; c < hd; ++c) {
                            gqi[c] += gij * kj[c];
                            gkj[c] += gij * qi[c];
                        }
                    }
                }
            }
        };
        return out;
    }

    /// out[b,i,:] = sum_j p[b,i,j] v[b,j,:]
    Var attention_mix(Var p, Var v, int batch, int len) {
        const int hd = v.cols;
        require(p.rows == batch * len && p.cols == len && v.rows == batch * len,
                "Tape::attention_mix: shape mismatch");
        Var out = alloc(batch * len, hd);
        auto& o = nodes_[out.idx].val;
        const auto& pv = nodes_[p.idx].val;
        const auto& vv = nodes_[v.idx].val;
        for (int b = 0; b < batch; ++b) {
            for (int i = 0; i < len; ++i) {
                const S* pi = &pv[(static_cast<std::size_t>(b) * len + i) * len];
                S* oi = &o[(static_cast<std::size_t>(b) * len + i) * hd];
                for (int j = 0; j < len; ++j) {
                    const S pij = pi[j];
                    if (pij == S(0)) continue;
                    const S* vj = &vv[(static_cast<std::size_t>(b) * len + j) * hd];
                    for (int c = 0; c < hd; ++c) oi[c] += pij * vj[c];
                }
            }
        }
        nodes_[out.idx].back = [this, p, v, out, batch, len, hd] {
            auto g = grad(out);
            auto gp = grad(p);
            auto gv = grad(v);
            const auto& pv = nodes_[p.idx].val;
            const auto& vv = nodes_[v.idx].val;
            for (int b = 0; b < batch; ++b) {
                for (int i = 0; i < len; ++i) {
                    const S* gi = &g[(static_cast<std::size_t>(b) * len + i) * hd];
                    const S* pi = &pv[(static_cast<std::size_t>(b) * len + i) * len];
                    S* gpi = &gp[(static_cast<std::size_t>(b) * len + i) * len];
                    for (int j = 0; j < len; ++j) {
                        const S* vj = &vv[(static_cast<std::size_t>(b) * len + j) * hd];
                        S* gvj = &gv[(static_cast<std::size_t>(b) * len + j) * hd];
                        S dot = S(0);
                        const S pij = pi[j];
                        for (int c = 0; c < hd; ++c) {
                            dot += gi[c] * vj[c];
                            gvj[c] += pij * gi[c];
                        }
                        gpi[j] += dot;
                    }
                }
            }
        };
        return out;
    }

    // ---- complex-grid reductions (rows x cols real pairs) ----

    /// Row-wise inverse DFT of the complex grid (xr, xi): T x F each.
    std::pair<Var, Var> idft_rows(Var xr, Var xi) {
        const int T = xr.rows, F = xr.cols;
        require(xi.rows == T && xi.cols == F, "Tape::idft_rows: shape mismatch");
        Var hr = alloc(T, F), hi = alloc(T, F);
        idft_apply(nodes_[xr.idx].val, nodes_[xi.idx].val, nodes_[hr.idx].val,
                   nodes_[hi.idx].val, T, F, +1);
        // adjoint of the 1/F-scaled inverse kernel is the 1/F-scaled forward kernel
        nodes_[hi.idx].back = [this, xr, xi, hr, hi, T, F] {
            std::vector<S> gxr(static_cast<std::size_t>(T) * F), gxi(gxr.size());
            idft_apply(nodes_[hr.idx].grad, nodes_[hi.idx].grad, gxr, gxi, T, F, -1);
            auto gr = grad(xr);
            auto gi = grad(xi);
            for (std::size_t i = 0; i < gxr.size(); ++i) {
                gr[i] += gxr[i];
                gi[i] += gxi[i];
            }
        };
        return {hr, hi};
    }

    /// mean over cells of (xr - tr)^2 + (xi - ti)^2
    Var mse_complex(Var xr, Var xi, std::span<const S> tr, std::span<const S> ti) {
        const std::size_t n = xr.size();
        require(xi.size() == n && tr.size() == n && ti.size() == n, "Tape::mse_complex: size");
        Var out = alloc(1, 1);
        const auto& vr = nodes_[xr.idx].val;
        const auto& vi = nodes_[xi.idx].val;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dr = static_cast<double>(vr[i]) - static_cast<double>(tr[i]);
            const double di = static_cast<double>(vi[i]) - static_cast<double>(ti[i]);
            acc += dr * dr + di * di;
        }
        nodes_[out.idx].val[0] = static_cast<S>(acc / n);
        std::vector<S> trc(tr.begin(), tr.end()), tic(ti.begin(), ti.end());
        nodes_[out.idx].back = [this, xr, xi, out, trc = std::move(trc), tic = std::move(tic), n] {
            const S g = nodes_[out.idx].grad[0];
            auto gr = grad(xr);
            auto gi = grad(xi);
            const auto& vr = nodes_[xr.idx].val;
            const auto& vi = nodes_[xi.idx].val;
            const S c = g * S(2) / S(n);
            for (std::size_t i = 0; i < n; ++i) {
                gr[i] += c * (vr[i] - trc[i]);
                gi[i] += c * (vi[i] - tic[i]);
            }
        };
        return out;
    }

    /// sum over cells of xr^2 + xi^2
    Var sum_sq_complex(Var xr, Var xi) {
        const std::size_t n = xr.size();
        require(xi.size() == n, "Tape::sum_sq_complex: size");
        Var out = alloc(1, 1);
        const auto& vr = nodes_[xr.idx].val;
        const auto& vi = nodes_[xi.idx].val;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += static_cast<double>(vr[i]) * vr[i] + static_cast<double>(vi[i]) * vi[i];
        nodes_[out.idx].val[0] = static_cast<S>(acc);
        nodes_[out.idx].back = [this, xr, xi, out, n] {
            const S g = nodes_[out.idx].grad[0];
            auto gr = grad(xr);
            auto gi = grad(xi);
            const auto& vr = nodes_[xr.idx].val;
            const auto& vi = nodes_[xi.idx].val;
            for (std::size_t i = 0; i < n; ++i) {
                gr[i] += g * S(2) * vr[i];
                gi[i] += g * S(2) * vi[i];
            }
        };
        return out;
    }

    /// mean over cells of ((xr^2 + xi^2) - target)^2; target is a constant
    /// power profile.
    Var power_mse(Var xr, Var xi, std::span<const S> target) {
        const std::size_t n = xr.size();
        require(xi.size() == n && target.size() == n, "Tape::power_mse: size");
        Var out = alloc(1, 1);
        const auto& vr = nodes_[xr.idx].val;
        const auto& vi = nodes_[xi.idx].val;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double q = static_cast<double>(vr[i]) * vr[i] + static_cast<double>(vi[i]) * vi[i];
            const double d = q - static_cast<double>(target[i]);
            acc += d * d;
        }
        nodes_[out.idx].val[0] = static_cast<S>(acc / n);
        std::vector<S> tc(target.begin(), target.end());
        nodes_[out.idx].back = [this, xr, xi, out, tc = std::move(tc), n] {
            const S g = nodes_[out.idx].grad[0];
            auto gr = grad(xr);
            auto gi = grad(xi);
            const auto& vr = nodes_[xr.idx].val;
            const auto& vi = nodes_[xi.idx].val;
            const S c = g * S(4) / S(n);
            for (std::size_t i = 0; i < n; ++i) {
                const S q = vr[i] * vr[i] + vi[i] * vi[i];
                gr[i] += c * (q - tc[i]) * vr[i];
                gi[i] += c * (q - tc[i]) * vi[i];
            }
        };
        return out;
    }

    /// mean over cells of sqrt(xr^2 + xi^2)
    Var mean_abs_complex(Var xr, Var xi) {
        const std::size_t n = xr.size();
        require(xi.size() == n, "Tape::mean_abs_complex: size");
        Var out = alloc(1, 1);
        const auto& vr = nodes_[xr.idx].val;
        const auto& vi = nodes_[xi.idx].val;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += std::sqrt(static_cast<double>(vr[i]) * vr[i] +
                             static_cast<double>(vi[i]) * vi[i]);
        nodes_[out.idx].val[0] = static_cast<S>(acc / n);
        nodes_[out.idx].back = [this, xr, xi, out, n] {
            const S g = nodes_[out.idx].grad[0];
            auto gr = grad(xr);
            auto gi = grad(xi);
            const auto& vr = nodes_[xr.idx].val;
            const auto& vi = nodes_[xi.idx].val;
            const S c = g / S(n);
            for (std::size_t i = 0; i < n; ++i) {
                const S mag = std::sqrt(vr[i] * vr[i] + vi[i] * vi[i]);
                if (mag > S(1e-12)) {
                    gr[i] += c * vr[i] / mag;
                    gi[i] += c * vi[i] / mag;
                }
            }
        };
        return out;
    }

    /// mean over (T-1) x F cells of |x[t+1,f] - x[t,f]| (complex magnitude);
    /// zero when T < 2.
    Var temporal_diff_mean_abs(Var xr, Var xi, int T, int F) {
        require(xr.size() == static_cast<std::size_t>(T) * F && xi.size() == xr.size(),
                "Tape::temporal_diff_mean_abs: size");
        Var out = alloc(1, 1);
        if (T < 2) return out;
        const auto& vr = nodes_[xr.idx].val;
        const auto& vi = nodes_[xi.idx].val;
        const std::size_t n = static_cast<std::size_t>(T - 1) * F;
        double acc = 0.0;
        for (int t = 0; t + 1 < T; ++t) {
            for (int f = 0; f < F; ++f) {
                const std::size_t hi_i = static_cast<std::size_t>(t + 1) * F + f;
                const std::size_t lo_i = static_cast<std::size_t>(t) * F + f;
                const double dr = static_cast<double>(vr[hi_i]) - vr[lo_i];
                const double di = static_cast<double>(vi[hi_i]) - vi[lo_i];
                acc += std::sqrt(dr * dr + di * di);
            }
        }
        nodes_[out.idx].val[0] = static_cast<S>(acc / n);
        nodes_[out.idx].back = [this, xr, xi, out, T, F, n] {
            const S g = nodes_[out.idx].grad[0];
            auto gr = grad(xr);
            auto gi = grad(xi);
            const auto& vr = nodes_[xr.idx].val;
            const auto& vi = nodes_[xi.idx].val;
            const S c = g / S(n);
            for (int t = 0; t + 1 < T; ++t) {
                for (int f = 0; f < F; ++f) {
                    const std::size_t hi_i = static_cast<std::size_t>(t + 1) * F + f;
                    const std::size_t lo_i = static_cast<std::size_t>(t) * F + f;
                    const S dr = vr[hi_i] - vr[lo_i];
                    const S di = vi[hi_i] - vi[lo_i];
                    const S mag = std::sqrt(dr * dr + di * di);
                    if (mag > S(1e-12)) {
                        gr[hi_i] += c * dr / mag;
                        gr[lo_i] -= c * dr / mag;
                        gi[hi_i] += c * di / mag;
                        gi[lo_i] -= c * di / mag;
                    }
                }
            }
        };
        return out;
    }

    /// weighted sum of scalar nodes
    Var weighted_sum(const std::vector<Var>& terms, const std::vector<S>& weights) {
        require(terms.size() == weights.size() && !terms.empty(), "Tape::weighted_sum: arity");
        Var out = alloc(1, 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i)
            acc += static_cast<double>(weights[i]) * nodes_[terms[i].idx].val[0];
        nodes_[out.idx].val[0] = static_cast<S>(acc);
        nodes_[out.idx].back = [this, terms, weights, out] {
            const S g = nodes_[out.idx].grad[0];
            for (std::size_t i = 0; i < terms.size(); ++i)
                nodes_[terms[i].idx].grad[0] += g * weights[i];
        };
        return out;
    }

    /// Seeds d(loss)/d(loss) = 1 and runs the reverse sweep.
    void backward(Var loss) {
        require(loss.size() == 1, "Tape::backward: loss must be scalar");
        nodes_[loss.idx].grad[0] = S(1);
        for (std::size_t i = loss.idx + 1; i-- > 0;)
            if (nodes_[i].back) nodes_[i].back();
    }

    bool all_finite(Var v) const {
        for (S x : nodes_[v.idx].val)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::vector<S> val;
        std::vector<S> grad;
        std::function<void()> back;
    };

    template <typename VecA, typename VecB, typename VecC, typename VecD>
    static void idft_apply(const VecA& xr, const VecB& xi, VecC& hr, VecD& hi, int T, int F,
                           int sign) {
        std::vector<double> cos_t(F), sin_t(F);
        for (int k = 0; k < F; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * k / F;
            cos_t[k] = std::cos(ang);
            sin_t[k] = std::sin(ang);
        }
        for (int t = 0; t < T; ++t) {
            const std::size_t base = static_cast<std::size_t>(t) * F;
            for (int n = 0; n < F; ++n) {
                double ar = 0.0, ai = 0.0;
                for (int f = 0; f < F; ++f) {
                    const int k = static_cast<int>(static_cast<long long>(f) * n % F);
                    const double c = cos_t[k], s = sin_t[k];
                    const double r = static_cast<double>(xr[base + f]);
                    const double i = static_cast<double>(xi[base + f]);
                    ar += r * c - i * s;
                    ai += r * s + i * c;
                }
                hr[base + n] = static_cast<S>(ar / F);
                hi[base + n] = static_cast<S>(ai / F);
            }
        }
    }

    std::vector<Node> nodes_;
    std::map<std::string, std::size_t> score_alloc_;
};

}  // namespace cfr::ad
