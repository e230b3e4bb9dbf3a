// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criteria 1-7 are exact property suites; 8-9 run the
// seed-pinned desk-scale training and paired-seed evaluation; 10 (enabled
// with --extended) adds the fixed-vs-randomized training comparison; 11
// checks the results-table schema used for full-scale reference overlays.

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cfr/baselines.hpp"
#include "cfr/channel.hpp"
#include "cfr/dft.hpp"
#include "cfr/dtmc.hpp"
#include "cfr/eval.hpp"
#include "cfr/filter.hpp"
#include "cfr/loss.hpp"
#include "cfr/model.hpp"
#include "cfr/train.hpp"

using namespace cfr;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTrainSeed = 20240808;
constexpr std::uint64_t kEvalSeed = 4242;

struct Criterion {
    bool ok = true;
    std::ostringstream info;
    std::vector<std::string> failures;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            failures.push_back(what);
        }
    }
};

int g_threads = 1;

ComplexGrid random_grid(int rows, int cols, RngStream& rng) {
    ComplexGrid g(rows, cols);
    for (auto& v : g.data) v = cplx(rng.gaussian(), rng.gaussian());
    return g;
}

std::vector<double> random_vec(std::size_t n, RngStream& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.gaussian();
    return v;
}

// Independent Butterworth oracle via analog prototype poles + bilinear map.
BiquadFilter butterworth_pole_oracle(double wn) {
    using cd = std::complex<double>;
    const double wa = std::tan(std::numbers::pi * wn / 2.0);
    const cd p1 = wa * std::polar(1.0, 3.0 * std::numbers::pi / 4.0);
    const cd p2 = wa * std::polar(1.0, 5.0 * std::numbers::pi / 4.0);
    const cd z1 = (1.0 + p1) / (1.0 - p1);
    const cd z2 = (1.0 + p2) / (1.0 - p2);
    BiquadFilter f;
    f.a1 = -(z1 + z2).real();
    f.a2 = (z1 * z2).real();
    const double g = (1.0 + f.a1 + f.a2) / 4.0;
    f.b0 = g;
    f.b1 = 2.0 * g;
    f.b2 = g;
    return f;
}

// ---- criterion bodies ----

void criterion_numerics(Criterion& c) {
    RngStream rng = derive_stream(1001, 0);
    for (int cols : {16, 64, 1024}) {
        ComplexGrid h = random_grid(cols >= 1024 ? 64 : 16, cols, rng);
        ComplexGrid round = idft_rows(dft_rows(h));
        double err = 0.0;
        for (std::size_t i = 0; i < h.data.size(); ++i)
            err = std::max(err, std::abs(round.data[i] - h.data[i]));
        c.expect(err <= 1e-12, "round-trip error " + std::to_string(err) + " at F=" +
                                   std::to_string(cols));
    }

    ComplexGrid x = random_grid(8, 64, rng);
    ComplexGrid X = dft_rows(x);
    for (int t = 0; t < x.rows; ++t) {
        double te = 0.0, fe = 0.0;
        for (int f = 0; f < x.cols; ++f) {
            te += std::norm(x.at(t, f));
            fe += std::norm(X.at(t, f));
        }
        c.expect(std::abs(te - fe / x.cols) / te <= 1e-9, "Parseval violated");
    }

    for (double wn : {0.01, 0.1, 0.25, 0.5, 0.9}) {
        BiquadFilter f = butterworth_design(wn);
        c.expect(std::abs(f.dc_gain() - 1.0) <= 1e-9, "DC gain off at wn=" + std::to_string(wn));
        BiquadFilter o = butterworth_pole_oracle(wn);
        const double dmax = std::max({std::abs(f.b0 - o.b0), std::abs(f.b1 - o.b1),
                                      std::abs(f.b2 - o.b2), std::abs(f.a1 - o.a1),
                                      std::abs(f.a2 - o.a2)});
        c.expect(dmax <= 1e-9, "oracle mismatch " + std::to_string(dmax));
    }

    RngStream a = derive_stream(55, 7), b = derive_stream(55, 7);
    for (int i = 0; i < 1000; ++i)
        if (a.next_u64() != b.next_u64()) {
            c.expect(false, "rng determinism broken");
            break;
        }
    c.info << "round-trip<=1e-12, Parseval<=1e-9, Butterworth DC/oracle<=1e-9, rng bit-exact";
}

void criterion_dtmc(Criterion& c) {
    for (double pi : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        DtmcParams d = dtmc_for_target(pi, 0.30);
        RngStream rng = derive_stream(2001, static_cast<std::uint64_t>(pi * 1000));
        auto m = generate_mask(d, 4000, 30, 1, rng);  // 120k chain steps
        c.expect(std::abs(m.busy_fraction() - pi) <= 0.02,
                 "occupancy " + std::to_string(m.busy_fraction()) + " vs target " +
                     std::to_string(pi));
        double total = 0.0;
        int bursts = 0;
        for (const auto& traj : m.trajectories) {
            int run = 0;
            for (int t = 0; t < static_cast<int>(traj.size()); ++t) {
                if (traj[t]) ++run;
                else if (run > 0) { total += run; ++bursts; run = 0; }
            }
            if (run > 0) { total += run; ++bursts; }
        }
        const double expected = 1.0 / d.p10;
        c.expect(std::abs(total / bursts - expected) / expected <= 0.10,
                 "burst length off at pi=" + std::to_string(pi));
    }

    DtmcParams d = dtmc_for_target(0.5, 0.30);
    RngStream rng = derive_stream(2002, 0);
    auto m = generate_mask(d, 64, 5, 16, rng);
    for (int t = 0; t < m.rows; ++t)
        for (int b = 0; b < m.nb; ++b)
            for (int f = b * m.fb; f < (b + 1) * m.fb; ++f)
                if (m.at(t, f) != m.trajectories[b][t])
                    c.expect(false, "sub-band block structure broken");
    c.info << "occupancy +-2% on {0.1..0.9}, bursts ~ 1/p10 (3.3 snapshots at p10=0.3) +-10%, "
              "block structure exact";
}

// generic FD checker over tape builders
using LossBuilder = std::function<ad::Var(ad::Tape<double>&, const std::vector<ad::Var>&)>;

bool fd_check(Criterion& c, const std::string& label,
              std::vector<std::pair<std::vector<double>, std::pair<int, int>>> inputs,
              const LossBuilder& build) {
    auto eval = [&]() {
        ad::Tape<double> t;
        std::vector<ad::Var> leaves;
        for (auto& [vals, shape] : inputs) leaves.push_back(t.leaf(vals, shape.first, shape.second));
        return t.scalar(build(t, leaves));
    };
    ad::Tape<double> t;
    std::vector<ad::Var> leaves;
    for (auto& [vals, shape] : inputs) leaves.push_back(t.leaf(vals, shape.first, shape.second));
    ad::Var loss = build(t, leaves);
    t.backward(loss);
    const double h = 1e-4;
    bool all_ok = true;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto g = t.grad(leaves[k]);
        for (std::size_t i = 0; i < inputs[k].first.size(); ++i) {
            const double saved = inputs[k].first[i];
            inputs[k].first[i] = saved + h;
            const double fp = eval();
            inputs[k].first[i] = saved - h;
            const double fm = eval();
            inputs[k].first[i] = saved;
            const double fd = (fp - fm) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
            if (std::abs(g[i] - fd) / denom > 1e-3) {
                c.expect(false, label + ": gradient mismatch at input " + std::to_string(k) +
                                    "[" + std::to_string(i) + "]");
                all_ok = false;
            }
        }
    }
    return all_ok;
}

void criterion_gradients(Criterion& c) {
    RngStream rng = derive_stream(3001, 0);

    fd_check(c, "linear", {{random_vec(15, rng), {5, 3}}, {random_vec(12, rng), {4, 3}},
                           {random_vec(4, rng), {1, 4}}},
             [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                 ad::Var y = t.linear(v[0], v[1], v[2]);
                 return t.sum_sq_complex(y, y);
             });
    fd_check(c, "gelu", {{random_vec(20, rng), {4, 5}}},
             [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                 ad::Var y = t.gelu(v[0]);
                 return t.sum_sq_complex(y, y);
             });
    fd_check(c, "layernorm",
             {{random_vec(24, rng), {4, 6}}, {random_vec(6, rng), {1, 6}},
              {random_vec(6, rng), {1, 6}}},
             [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                 ad::Var y = t.layernorm(v[0], v[1], v[2]);
                 return t.sum_sq_complex(y, y);
             });
    fd_check(c, "attention",
             {{random_vec(24, rng), {6, 4}}, {random_vec(24, rng), {6, 4}},
              {random_vec(24, rng), {6, 4}}},
             [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                 ad::Var s = t.attention_scores(v[0], v[1], 2, 3, 0.5, "fd");
                 ad::Var p = t.softmax_rows(s);
                 ad::Var y = t.attention_mix(p, v[2], 2, 3);
                 return t.sum_sq_complex(y, y);
             });
    fd_check(c, "idft", {{random_vec(10, rng), {2, 5}}, {random_vec(10, rng), {2, 5}}},
             [](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                 auto [hr, hi] = t.idft_rows(v[0], v[1]);
                 return t.sum_sq_complex(hr, hi);
             });

    // all four loss terms
    RngStream trng = derive_stream(3001, 1);
    ComplexGrid truth = random_grid(3, 4, trng);
    for (int term = 0; term < 4; ++term) {
        fd_check(c, "loss_term_" + std::to_string(term),
                 {{random_vec(12, rng), {3, 4}}, {random_vec(12, rng), {3, 4}}},
                 [&truth, term](ad::Tape<double>& t, const std::vector<ad::Var>& v) {
                     LossWeights w;
                     TapeLoss<double> L = build_total_loss(t, v[0], v[1], truth, w);
                     switch (term) {
                         case 0: return L.cfr;
                         case 1: return L.pdp;
                         case 2: return L.sparse;
                         default: return L.temporal;
                     }
                 });
    }

    // composed tiny model: T=3, F=8, d_model=8, 1 block, 2 heads
    ModelConfig cfg;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_blocks = 1;
    cfg.ffn_hidden = 16;
    cfg.snapshots = 3;
    cfg.nb_subbands = 2;
    cfg.bins_per_subband = 4;
    ParameterStoreT<double> store;
    RngStream irng = derive_stream(3002, 0);
    register_model_params(store, cfg, irng);
    FeatureGrid feat;
    feat.re = RealGrid(3, 8);
    feat.im = RealGrid(3, 8);
    feat.mask = RealGrid(3, 8);
    RngStream frng = derive_stream(3002, 1);
    for (std::size_t i = 0; i < feat.re.data.size(); ++i) {
        if (frng.uniform() < 0.3) {
            feat.mask.data[i] = 1.0;
        } else {
            feat.re.data[i] = frng.gaussian();
            feat.im.data[i] = frng.gaussian();
        }
    }
    auto model_loss = [&]() {
        ad::Tape<double> t;
        ForwardBuilder<double> fb(t, store, cfg);
        auto out = fb.run(feat);
        return t.scalar(t.sum_sq_complex(out.out_r, out.out_i));
    };
    store.zero_grad();
    {
        ad::Tape<double> t;
        ForwardBuilder<double> fb(t, store, cfg);
        auto out = fb.run(feat);
        ad::Var loss = t.sum_sq_complex(out.out_r, out.out_i);
        t.backward(loss);
        fb.writeback_grads();
    }
    int checked = 0, bad = 0;
    const double h = 1e-4;
    for (auto& e : store.entries) {
        const std::size_t stride = e.value.size() > 64 ? 11 : 1;
        for (std::size_t i = 0; i < e.value.size(); i += stride) {
            const double saved = e.value[i];
            e.value[i] = saved + h;
            const double fp = model_loss();
            e.value[i] = saved - h;
            const double fm = model_loss();
            e.value[i] = saved;
            const double fd = (fp - fm) / (2 * h);
            const double an = e.grad[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            if (std::abs(an - fd) / denom > 1e-3) ++bad;
            ++checked;
        }
    }
    c.expect(bad == 0, "composed model: " + std::to_string(bad) + "/" + std::to_string(checked) +
                           " parameter gradients off");
    c.info << "per-layer ops, four loss terms, composed model (" << checked
           << " params sampled) all within rel 1e-3";
}

void criterion_holomorphy(Criterion& c) {
    ModelConfig cfg;
    cfg.d_model = 32;
    cfg.n_heads = 2;
    cfg.snapshots = 2;
    cfg.nb_subbands = 2;
    cfg.bins_per_subband = 2;
    RngStream rng = derive_stream(4001, 0);
    ParameterStore store;
    store.add("cl.w_r", {16, 32}, true);
    store.add("cl.w_i", {16, 32}, true);
    store.add("cl.b_r", {1, 16}, false);
    store.add("cl.b_i", {1, 16}, false);
    init_uniform_fan<float>(store.at("cl.w_r"), rng);
    init_uniform_fan<float>(store.at("cl.w_i"), rng);

    const int n = 8, in_f = 32, out_f = 16;
    std::vector<float> xr(n * in_f), xi(n * in_f);
    for (auto& v : xr) v = static_cast<float>(rng.gaussian());
    for (auto& v : xi) v = static_cast<float>(rng.gaussian());

    auto run = [&](const std::vector<float>& a, const std::vector<float>& b) {
        ad::Tape<float> t;
        ForwardBuilder<float> fb(t, store, cfg);
        auto [r, i] = fb.complex_linear(t.constant(a, n, in_f), t.constant(b, n, in_f), "cl");
        return std::make_pair(std::vector<float>(t.val(r).begin(), t.val(r).end()),
                              std::vector<float>(t.val(i).begin(), t.val(i).end()));
    };
    auto [yr, yi] = run(xr, xi);

    // j x = (-x_i, x_r); holomorphy: layer(j x) = j layer(x)
    std::vector<float> jr(xr.size()), ji(xr.size());
    for (std::size_t i = 0; i < xr.size(); ++i) {
        jr[i] = -xi[i];
        ji[i] = xr[i];
    }
    auto [zr, zi] = run(jr, ji);
    double dmax = 0.0;
    for (std::size_t i = 0; i < yr.size(); ++i) {
        dmax = std::max(dmax, std::abs(static_cast<double>(zr[i]) + yi[i]));
        dmax = std::max(dmax, std::abs(static_cast<double>(zi[i]) - yr[i]));
    }
    c.expect(dmax <= 1e-6, "commutation with j off by " + std::to_string(dmax));

    // direct identity: out_r = W_r x_r - W_i x_i ; out_i = W_i x_r + W_r x_i
    const auto& wr = store.at("cl.w_r").value;
    const auto& wi = store.at("cl.w_i").value;
    double emax = 0.0;
    for (int r = 0; r < n; ++r) {
        for (int o = 0; o < out_f; ++o) {
            double er = 0.0, ei = 0.0;
            for (int k = 0; k < in_f; ++k) {
                er += static_cast<double>(wr[o * in_f + k]) * xr[r * in_f + k] -
                      static_cast<double>(wi[o * in_f + k]) * xi[r * in_f + k];
                ei += static_cast<double>(wi[o * in_f + k]) * xr[r * in_f + k] +
                      static_cast<double>(wr[o * in_f + k]) * xi[r * in_f + k];
            }
            emax = std::max(emax, std::abs(er - yr[r * out_f + o]));
            emax = std::max(emax, std::abs(ei - yi[r * out_f + o]));
        }
    }
    c.expect(emax <= 1e-5, "coupled-weight identity off by " + std::to_string(emax));
    c.info << "bias-free layer commutes with j (max err " << dmax << ")";
}

void criterion_loss_metric(Criterion& c) {
    RngStream rng = derive_stream(5001, 0);
    ComplexGrid truth = random_grid(5, 8, rng);
    c.expect(std::abs(pdp_similarity(truth, truth) - 1.0) <= 1e-12, "rho(x,x) != 1");

    ComplexGrid c0(2, 8), c1(2, 8);
    for (int t = 0; t < 2; ++t) {
        c0.at(t, 0) = 1.0;
        c1.at(t, 1) = 1.0;
    }
    c.expect(std::abs(pdp_similarity(dft_rows(c1), dft_rows(c0))) <= 1e-12,
             "rho on disjoint unit PDPs != 0");

    ComplexGrid est = random_grid(5, 8, rng);
    ComplexGrid rot = est;
    for (auto& v : rot.data) v *= std::polar(1.0, 0.777);
    c.expect(std::abs(loss_pdp(rot, truth) - loss_pdp(est, truth)) <= 1e-9,
             "L_PDP not phase-invariant");
    c.expect(std::abs(pdp_similarity(rot, truth) - pdp_similarity(est, truth)) <= 1e-9,
             "rho not phase-invariant");

    LossWeights w;  // (1.0, 5e-4, 0.05)
    LossBreakdown b = total_loss(est, truth, w);
    const double manual = loss_cfr(est, truth) + 1.0 * loss_pdp(est, truth) +
                          5e-4 * loss_sparse(est) + 0.05 * loss_temporal(est);
    c.expect(std::abs(b.total - manual) <= 1e-9, "composite loss mismatch");
    c.info << "rho anchors exact, phase invariance <= 1e-9, composite weights (1, 5e-4, 0.05)";
}

void criterion_baselines(Criterion& c) {
    RngStream rng = derive_stream(6001, 0);
    const int T = 6, F = 16;
    ComplexGrid truth = random_grid(T, F, rng);
    DtmcParams d = dtmc_for_target(0.4, 0.30);
    RngStream mrng = derive_stream(6001, 1);
    InterferenceMask m = generate_mask(d, T, 4, 4, mrng);
    ComplexGrid masked = apply_mask(truth, m);
    for (auto fill : {historical_fill, zero_fill, spline_fill}) {
        ComplexGrid est = fill(masked, m);
        for (int t = 0; t < T; ++t)
            for (int f = 0; f < F; ++f)
                if (!m.at(t, f) && est.at(t, f) != masked.at(t, f))
                    c.expect(false, "observed-cell identity violated");
    }

    // static channel, every column observed at t=0: historical fill exact
    ChannelConfig scfg;
    scfg.nb_subbands = 4;
    scfg.bins_per_subband = 8;
    scfg.snapshots = 8;
    scfg.paths = 4;
    scfg.velocity = 0.0;
    scfg.noise_scale = 0.0;
    scfg.jitter = false;
    RngStream srng = derive_stream(6002, 0);
    ChannelRealization r = generate_realization(scfg, srng);
    RngStream mrng2 = derive_stream(6002, 1);
    InterferenceMask sm = generate_mask(dtmc_for_target(0.5, 0.30), 8, 4, 8, mrng2);
    for (int f = 0; f < sm.cols; ++f) sm.grid[f] = 0;
    ComplexGrid hist = historical_fill(apply_mask(r.cfr, sm), sm);
    c.expect(std::abs(pdp_similarity(hist, r.cfr) - 1.0) <= 1e-6,
             "historical fill not exact on static channel");

    // cubic row, interior gap: spline within 1e-6
    ComplexGrid cubic(1, 64);
    for (int f = 0; f < 64; ++f) {
        const double x = f / 8.0;
        cubic.at(0, f) = cplx(x * x * x - 2 * x * x + x - 5, -0.5 * x * x * x + x + 2);
    }
    InterferenceMask gm;
    gm.rows = 1;
    gm.cols = 64;
    gm.nb = 1;
    gm.fb = 64;
    gm.grid.assign(64, 0);
    for (int f = 30; f <= 33; ++f) gm.grid[f] = 1;
    ComplexGrid sp = spline_fill(apply_mask(cubic, gm), gm);
    for (int f = 30; f <= 33; ++f)
        c.expect(std::abs(sp.at(0, f) - cubic.at(0, f)) <= 1e-6, "spline not cubic-exact");

    // fallbacks: 3 observed bins -> linear exact on a line; < 2 observed -> zeros
    ComplexGrid line(1, 9);
    for (int f = 0; f < 9; ++f) line.at(0, f) = cplx(3.0 * f - 1.0, 0.5 * f);
    InterferenceMask lm = gm;
    lm.cols = 9;
    lm.fb = 9;
    lm.grid.assign(9, 1);
    lm.grid[0] = lm.grid[4] = lm.grid[8] = 0;
    ComplexGrid lf = spline_fill(apply_mask(line, lm), lm);
    for (int f = 0; f < 9; ++f)
        c.expect(std::abs(lf.at(0, f) - line.at(0, f)) <= 1e-9, "linear fallback inexact");

    InterferenceMask em = lm;
    em.grid.assign(9, 1);
    em.grid[2] = 0;  // single observation
    ComplexGrid ef = spline_fill(apply_mask(line, em), em);
    for (int f = 0; f < 9; ++f)
        if (f != 2)
            c.expect(ef.at(0, f) == cplx(0.0, 0.0), "sub-2-observation fallback not zero");
    c.info << "observed-cell identity, static-channel exactness, cubic/linear/zero fallbacks";
}

void criterion_scaling(Criterion& c) {
    auto score_entries = [](int fb) {
        ModelConfig cfg;
        cfg.d_model = 16;
        cfg.n_heads = 2;
        cfg.n_blocks = 1;
        cfg.ffn_hidden = 32;
        cfg.snapshots = 8;
        cfg.nb_subbands = 4;
        cfg.bins_per_subband = fb;
        ParameterStore store;
        RngStream rng = derive_stream(7001, 0);
        register_model_params(store, cfg, rng);
        FeatureGrid zero;
        zero.re = RealGrid(8, cfg.bins());
        zero.im = RealGrid(8, cfg.bins());
        zero.mask = RealGrid(8, cfg.bins());
        ad::Tape<float> tape;
        ForwardBuilder<float> fb2(tape, store, cfg);
        fb2.run(zero);
        return tape.score_allocations().at("freq");
    };
    const double ratio =
        static_cast<double>(score_entries(32)) / static_cast<double>(score_entries(16));
    c.expect(ratio >= 3.6 && ratio <= 4.4,
             "frequency-pass score memory ratio " + std::to_string(ratio) + " not 4x (+-10%)");
    c.info << "F doubling grows frequency-pass score memory " << ratio << "x (flattened would be 16x)";
}

TrainConfig desk_train_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.steps_per_epoch = 300;
    cfg.base_seed = kTrainSeed;
    cfg.channel.nb_subbands = 4;
    cfg.channel.bins_per_subband = 16;  // F = 64
    cfg.channel.snapshots = 10;
    cfg.channel.paths = 6;
    cfg.model.d_model = 32;
    cfg.model.n_heads = 2;
    cfg.model.n_blocks = 2;
    cfg.model.ffn_hidden = 64;
    cfg.model.snapshots = 10;
    cfg.model.nb_subbands = 4;
    cfg.model.bins_per_subband = 16;
    return cfg;
}

std::string g_desk_checkpoint;

void criterion_desk_training(Criterion& c, const fs::path& out) {
    TrainConfig cfg = desk_train_config();
    TrainOutcome res = train(cfg, (out / "checkpoints").string(), (out / "train.log").string());
    g_desk_checkpoint = res.final_checkpoint;

    c.expect(res.epoch_mean_loss.size() == 3, "expected three epochs");
    for (std::size_t e = 0; e + 1 < res.epoch_mean_loss.size(); ++e)
        c.expect(res.epoch_mean_loss[e + 1] < res.epoch_mean_loss[e],
                 "epoch-mean loss not strictly decreasing: " +
                     std::to_string(res.epoch_mean_loss[e]) + " -> " +
                     std::to_string(res.epoch_mean_loss[e + 1]));

    // bit-exact round trip: reload, save, compare bytes; forward equality
    Checkpoint ck = load_checkpoint(res.final_checkpoint);
    const std::string copy = (out / "roundtrip.cfrt").string();
    save_checkpoint(copy, ck.store, ck.config);
    std::ifstream f1(res.final_checkpoint, std::ios::binary), f2(copy, std::ios::binary);
    std::stringstream b1, b2;
    b1 << f1.rdbuf();
    b2 << f2.rdbuf();
    c.expect(b1.str() == b2.str() && !b1.str().empty(), "checkpoint bytes not identical");

    TrainingSample s = draw_training_sample(cfg, 31337);
    Checkpoint ck2 = load_checkpoint(copy);
    ComplexGrid y1 = model_forward(s.features, ck.store, ck.config);
    ComplexGrid y2 = model_forward(s.features, ck2.store, ck2.config);
    bool same = true;
    for (std::size_t i = 0; i < y1.data.size(); ++i) same &= y1.data[i] == y2.data[i];
    c.expect(same, "reloaded checkpoint forward differs");

    c.info << "epoch losses";
    for (double l : res.epoch_mean_loss) c.info << " " << l;
    c.info << ", checkpoint round-trip bit-exact";
}

std::map<std::string, std::vector<SweepResult>> g_desk_sweeps;

void criterion_desk_evaluation(Criterion& c, const fs::path& out) {
    c.expect(!g_desk_checkpoint.empty(), "no desk checkpoint from criterion 8");
    if (g_desk_checkpoint.empty()) return;
    Checkpoint ck = load_checkpoint(g_desk_checkpoint);
    ModelHandle model{&ck.store, &ck.config};

    EvalCondition base;
    base.channel = desk_train_config().channel;
    base.n_samples = 100;
    base.base_seed = kEvalSeed;
    base.velocity = 7.0;
    base.pi_busy = 0.5;
    const std::vector<Method> methods{Method::Transformer, Method::Historical, Method::Zero,
                                      Method::Spline};

    auto occ = sweep_occupancy(methods, base, model, default_occupancy_levels(), g_threads);
    auto vel = sweep_velocity(methods, base, model, default_velocity_levels(), g_threads);
    g_desk_sweeps["occupancy"] = occ;
    g_desk_sweeps["velocity"] = vel;
    write_sweep_csv((out / "sweep_occupancy.csv").string(), occ);
    write_sweep_csv((out / "sweep_velocity.csv").string(), vel);

    auto find = [](const std::vector<SweepResult>& rs, const std::string& method, double axis,
                   bool occupancy_axis) -> const SweepResult& {
        for (const auto& r : rs)
            if (r.method == method && std::abs((occupancy_axis ? r.pi_busy : r.velocity) - axis) <
                                          1e-12)
                return r;
        throw Error("acceptance: missing sweep row " + method);
    };

    // (a) transformer beats zero-fill at pi = 0.5, v = 7
    const double tr_mid = find(occ, "transformer", 0.5, true).rho_mean;
    const double zr_mid = find(occ, "zero", 0.5, true).rho_mean;
    c.expect(tr_mid > zr_mid, "transformer " + std::to_string(tr_mid) + " not above zero-fill " +
                                  std::to_string(zr_mid) + " at pi=0.5");

    // (b) every method non-increasing in pi within 0.02
    for (const auto& m : methods) {
        const std::string name = method_name(m);
        for (std::size_t i = 0; i + 1 < default_occupancy_levels().size(); ++i) {
            const double a = find(occ, name, default_occupancy_levels()[i], true).rho_mean;
            const double b = find(occ, name, default_occupancy_levels()[i + 1], true).rho_mean;
            c.expect(b <= a + 0.02, name + " rho increases " + std::to_string(a) + " -> " +
                                        std::to_string(b) + " along pi");
        }
    }

    // (c) zero-fill velocity-insensitive: spread < 0.02
    double zmin = 1.0, zmax = 0.0;
    for (double v : default_velocity_levels()) {
        const double z = find(vel, "zero", v, false).rho_mean;
        zmin = std::min(zmin, z);
        zmax = std::max(zmax, z);
    }
    c.expect(zmax - zmin < 0.02,
             "zero-fill varies " + std::to_string(zmax - zmin) + " across velocities");

    // (d) transformer at 0.5 m/s >= at 30 m/s
    const double tr_slow = find(vel, "transformer", 0.5, false).rho_mean;
    const double tr_fast = find(vel, "transformer", 30.0, false).rho_mean;
    c.expect(tr_slow >= tr_fast, "transformer slow " + std::to_string(tr_slow) + " < fast " +
                                     std::to_string(tr_fast));

    c.info << "pi=0.5: transformer " << tr_mid << " vs zero " << zr_mid << "; zero spread "
           << (zmax - zmin) << "; v .5->30: " << tr_slow << "->" << tr_fast;
}

void criterion_ablation(Criterion& c, const fs::path& out) {
    c.expect(!g_desk_checkpoint.empty(), "no randomized checkpoint from criterion 8");
    if (g_desk_checkpoint.empty()) return;

    TrainConfig fixed = desk_train_config();
    fixed.v_min = fixed.v_max = 0.5;
    fixed.base_seed = mix64(kTrainSeed, 0x0505);
    TrainOutcome fixed_out =
        train(fixed, (out / "checkpoints_fixed").string(), (out / "train_fixed.log").string());

    Checkpoint random_ck = load_checkpoint(g_desk_checkpoint);
    Checkpoint fixed_ck = load_checkpoint(fixed_out.final_checkpoint);

    EvalCondition base;
    base.channel = desk_train_config().channel;
    base.n_samples = 100;
    base.base_seed = mix64(kEvalSeed, 0xAB);
    base.pi_busy = 0.5;
    std::vector<AblationEntry> entries{
        {"fixed_v0.5", {&fixed_ck.store, &fixed_ck.config}},
        {"random", {&random_ck.store, &random_ck.config}},
    };
    auto rows = ablation_velocity(entries, base, {0.5, 7.0, 30.0}, g_threads);
    write_sweep_csv((out / "ablation_velocity.csv").string(), rows);

    double fixed_at_30 = -1.0, random_at_30 = -1.0;
    for (const auto& r : rows) {
        if (std::abs(r.velocity - 30.0) < 1e-12) {
            if (r.method == "transformer_fixed_v0.5") fixed_at_30 = r.rho_mean;
            if (r.method == "transformer_random") random_at_30 = r.rho_mean;
        }
    }
    c.expect(fixed_at_30 >= 0.0 && random_at_30 >= 0.0, "missing ablation rows");
    c.expect(random_at_30 > fixed_at_30,
             "randomized training " + std::to_string(random_at_30) +
                 " not above fixed-0.5 training " + std::to_string(fixed_at_30) + " at 30 m/s");
    c.info << "at 30 m/s: randomized " << random_at_30 << " vs fixed-0.5 " << fixed_at_30;
}

void criterion_reference_columns(Criterion& c, const fs::path& out) {
    // The tables criterion 9 emitted must carry every column needed to
    // overlay full-scale runs against the published anchors (rho >= 0.82 at
    // pi <= 0.5; rho ~ 0.58 at pi = 0.9; rho 0.87 -> 0.79 across velocity).
    // Those values document the full configuration and are not gated here.
    const std::vector<std::string> required{"method",      "velocity_mps", "pi_busy",
                                            "paths",       "nb_subbands",  "doppler_hz",
                                            "rho_mean",    "rho_std",      "n_samples",
                                            "seed"};
    for (const char* name : {"sweep_occupancy.csv", "sweep_velocity.csv"}) {
        std::ifstream is(out / name);
        std::string header;
        std::getline(is, header);
        c.expect(static_cast<bool>(is), std::string("missing results file ") + name);
        std::vector<std::string> cols;
        std::stringstream ss(header);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        c.expect(cols == required, std::string(name) + ": column set differs from the contract");
        int rows = 0;
        std::string line;
        while (std::getline(is, line)) ++rows;
        c.expect(rows > 0, std::string(name) + ": empty table");
    }
    c.info << "stable 10-column schema present in both sweep tables";
}

}  // namespace

int main(int argc, char** argv) {
    bool extended = false;
    fs::path out = "acceptance_out";
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--extended") == 0) extended = true;
        else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) out = argv[++i];
        else {
            std::fprintf(stderr, "usage: acceptance [--extended] [--out DIR]\n");
            return 2;
        }
    }
    fs::create_directories(out);
    const unsigned hw = std::thread::hardware_concurrency();
    g_threads = hw == 0 ? 1 : static_cast<int>(hw);

    struct Entry {
        int id;
        const char* title;
        std::function<void(Criterion&)> body;
        bool skip = false;
    };
    const std::vector<Entry> entries{
        {1, "numeric substrate", criterion_numerics},
        {2, "DTMC occupancy and bursts", criterion_dtmc},
        {3, "gradient correctness", criterion_gradients},
        {4, "holomorphic complex layers", criterion_holomorphy},
        {5, "loss terms and rho metric", criterion_loss_metric},
        {6, "baseline exactness", criterion_baselines},
        {7, "factored-attention scaling", criterion_scaling},
        {8, "desk-scale training run", [&](Criterion& c) { criterion_desk_training(c, out); }},
        {9, "desk-scale evaluation", [&](Criterion& c) { criterion_desk_evaluation(c, out); }},
        {10, "velocity-randomization ablation",
         [&](Criterion& c) { criterion_ablation(c, out); }, !extended},
        {11, "reference results schema", [&](Criterion& c) { criterion_reference_columns(c, out); }},
    };

    int failures = 0;
    for (const auto& e : entries) {
        if (e.skip) {
            std::printf("[SKIP] %2d. %s (enable with --extended)\n", e.id, e.title);
            continue;
        }
        Criterion c;
        try {
            e.body(c);
        } catch (const std::exception& ex) {
            c.ok = false;
            c.failures.push_back(std::string("exception: ") + ex.what());
        }
        if (c.ok) {
            std::printf("[PASS] %2d. %s: %s\n", e.id, e.title, c.info.str().c_str());
        } else {
            ++failures;
            std::printf("[FAIL] %2d. %s\n", e.id, e.title);
            for (const auto& f : c.failures) std::printf("         - %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all criteria passed\n");
    return failures == 0 ? 0 : 1;
}
