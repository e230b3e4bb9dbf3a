#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cfr/autograd.hpp"
#include "cfr/binio.hpp"
#include "cfr/features.hpp"
#include "cfr/grid.hpp"
#include "cfr/params.hpp"
#include "cfr/rng.hpp"

namespace cfr {

/// Architecture and grid geometry of the reconstruction model.
struct ModelConfig {
    int d_model = 128;
    int n_heads = 4;
    int n_blocks = 2;
    int ffn_hidden = 256;  // 2 * d_model by default
    int snapshots = 20;    // T
    int nb_subbands = 5;
    int bins_per_subband = 256;

    int bins() const { return nb_subbands * bins_per_subband; }  // F

    void validate() const {
        require(d_model >= 2 && d_model % 2 == 0, "ModelConfig: d_model must be even and >= 2");
        require(n_heads >= 1 && d_model % n_heads == 0,
                "ModelConfig: d_model must be divisible by n_heads");
        require(n_blocks >= 1, "ModelConfig: n_blocks must be >= 1");
        require(ffn_hidden >= 1, "ModelConfig: ffn_hidden must be >= 1");
        require(snapshots >= 1, "ModelConfig: snapshot count must be >= 1");
        require(nb_subbands >= 1 && bins_per_subband >= 1, "ModelConfig: Nb, Fb must be >= 1");
        require(bins() >= 2, "ModelConfig: need at least two frequency bins");
    }

    bool same_geometry(int T, int F, int Nb, int Fb) const {
        return snapshots == T && bins() == F && nb_subbands == Nb && bins_per_subband == Fb;
    }
};

/// Sinusoidal frequency positional encoding:
///   pe[f, 2k]   = sin(2 pi f/(F-1) (k+1))
///   pe[f, 2k+1] = cos(2 pi f/(F-1) (k+1))
/// added to both the real and imaginary token streams after embedding.
inline RealGrid positional_encoding(int F, int d_model) {
    require(F >= 2, "positional_encoding: F must be >= 2");
    require(d_model >= 2 && d_model % 2 == 0, "positional_encoding: d_model must be even");
    RealGrid pe(F, d_model);
    for (int f = 0; f < F; ++f) {
        const double pos = static_cast<double>(f) / (F - 1);
        for (int k = 0; k < d_model / 2; ++k) {
            const double ang = 2.0 * std::numbers::pi * pos * (k + 1);
            pe.at(f, 2 * k) = std::sin(ang);
            pe.at(f, 2 * k + 1) = std::cos(ang);
        }
    }
    return pe;
}

namespace model_names {

inline std::vector<std::pair<std::string, std::vector<int>>> ordering(const ModelConfig& cfg) {
    std::vector<std::pair<std::string, std::vector<int>>> out;
    const int d = cfg.d_model;
    out.push_back({"embed.w_r", {d, 2}});
    out.push_back({"embed.w_i", {d, 2}});
    out.push_back({"embed.b_r", {1, d}});
    out.push_back({"embed.b_i", {1, d}});
    for (int k = 0; k < cfg.n_blocks; ++k) {
        for (const char* axis : {"freq", "time"}) {
            const std::string p = "block" + std::to_string(k) + "." + axis;
            for (const char* m : {"wq", "wk", "wv", "wo"}) out.push_back({p + "." + m, {d, d}});
            for (const char* b : {"bq", "bk", "bv", "bo"}) out.push_back({p + "." + b, {1, d}});
            out.push_back({p + "_norm.gain", {1, d}});
            out.push_back({p + "_norm.bias", {1, d}});
        }
    }
    out.push_back({"ffn.w1", {cfg.ffn_hidden, d}});
    out.push_back({"ffn.b1", {1, cfg.ffn_hidden}});
    out.push_back({"ffn.w2", {d, cfg.ffn_hidden}});
    out.push_back({"ffn.b2", {1, d}});
    out.push_back({"ffn_norm.gain", {1, d}});
    out.push_back({"ffn_norm.bias", {1, d}});
    out.push_back({"head.w_r", {1, d}});
    out.push_back({"head.w_i", {1, d}});
    out.push_back({"head.b_r", {1, 1}});
    out.push_back({"head.b_i", {1, 1}});
    return out;
}

inline bool is_weight_matrix(const std::string& name) {
    const auto pos = name.rfind('.');
    const std::string leaf = pos == std::string::npos ? name : name.substr(pos + 1);
    return !leaf.empty() && leaf[0] == 'w';
}

inline bool is_norm_gain(const std::string& name) { return name.ends_with("norm.gain"); }

}  // namespace model_names

/// Registers all learnable tensors in canonical (checkpoint) order and
/// initializes them: weight matrices fan-based uniform, biases zero,
/// LayerNorm gain one.
template <typename S>
inline void register_model_params(ParameterStoreT<S>& store, const ModelConfig& cfg,
                                  RngStream& rng) {
    cfg.validate();
    for (const auto& [name, shape] : model_names::ordering(cfg)) {
        auto& e = store.add(name, shape, model_names::is_weight_matrix(name));
        if (model_names::is_weight_matrix(name)) {
            init_uniform_fan<S>(e, rng);
        } else if (model_names::is_norm_gain(name)) {
            std::fill(e.value.begin(), e.value.end(), S(1));
        }
    }
}

/// Per-forward pass state: binds store entries onto a tape as leaves (one
/// leaf per parameter, shared by both streams) and writes gradients back
/// after the backward sweep.
template <typename S>
class ForwardBuilder {
public:
    ForwardBuilder(ad::Tape<S>& tape, ParameterStoreT<S>& store, const ModelConfig& cfg)
        : tape_(tape), store_(store), cfg_(cfg) {
        cfg.validate();
    }

    ad::Var param(const std::string& name) {
        auto it = bound_.find(name);
        if (it != bound_.end()) return it->second;
        auto& e = store_.at(name);
        const int rows = e.shape[0];
        const int cols = e.shape.size() > 1 ? e.shape[1] : 1;
        ad::Var v = tape_.leaf(std::span<const S>(e.value), rows, cols);
        bound_.emplace(name, v);
        return v;
    }

    /// out_r = W_r x_r - W_i x_i + b_r ; out_i = W_i x_r + W_r x_i + b_i
    std::pair<ad::Var, ad::Var> complex_linear(ad::Var xr, ad::Var xi, const std::string& prefix) {
        ad::Var wr = param(prefix + ".w_r");
        ad::Var wi = param(prefix + ".w_i");
        ad::Var br = param(prefix + ".b_r");
        ad::Var bi = param(prefix + ".b_i");
        ad::Var out_r =
            tape_.add(tape_.linear(xr, wr, br), tape_.scale(tape_.linear(xi, wi, bi, false), S(-1)));
        ad::Var out_i = tape_.add(tape_.linear(xr, wi, bi), tape_.linear(xi, wr, br, false));
        return {out_r, out_i};
    }

    struct MhaOut {
        ad::Var out;
        std::vector<ad::Var> attn;  // softmax weights per head
    };

    /// Standard multi-head self-attention over `batch` independent
    /// sequences of `len` tokens. With identity_attention the softmax is
    /// replaced by a fixed identity mixing matrix (structural tests only).
    MhaOut mha(ad::Var x, const std::string& prefix, int batch, int len, const std::string& tag,
               bool identity_attention = false) {
        const int d = cfg_.d_model;
        const int nh = cfg_.n_heads;
        const int hd = d / nh;
        ad::Var q = tape_.linear(x, param(prefix + ".wq"), param(prefix + ".bq"));
        ad::Var k = tape_.linear(x, param(prefix + ".wk"), param(prefix + ".bk"));
        ad::Var v = tape_.linear(x, param(prefix + ".wv"), param(prefix + ".bv"));
        std::vector<ad::Var> heads;
        std::vector<ad::Var> attn;
        const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(hd)));
        for (int h = 0; h < nh; ++h) {
            ad::Var qh = tape_.slice_cols(q, h * hd, hd);
            ad::Var kh = tape_.slice_cols(k, h * hd, hd);
            ad::Var vh = tape_.slice_cols(v, h * hd, hd);
            ad::Var p;
            if (identity_attention) {
                std::vector<S> eye(static_cast<std::size_t>(batch) * len * len, S(0));
                for (int b = 0; b < batch; ++b)
                    for (int i = 0; i < len; ++i)
                        eye[(static_cast<std::size_t>(b) * len + i) * len + i] = S(1);
                p = tape_.constant(eye, batch * len, len);
            } else {
                ad::Var s = tape_.attention_scores(qh, kh, batch, len, scale, tag);
                p = tape_.softmax_rows(s);
            }
            attn.push_back(p);
            heads.push_back(tape_.attention_mix(p, vh, batch, len));
        }
        ad::Var ctx = nh == 1 ? heads[0] : tape_.concat_cols(heads);
        ad::Var out = tape_.linear(ctx, param(prefix + ".wo"), param(prefix + ".bo"));
        return {out, std::move(attn)};
    }

    /// One factored block: frequency pass (T sequences of F tokens) then
    /// time pass (F sequences of T tokens), each with residual + LayerNorm.
    /// The real and imaginary streams share all weights.
    std::pair<ad::Var, ad::Var> factored_block(ad::Var xr, ad::Var xi, int block_index,
                                               bool identity_attention = false) {
        const int T = cfg_.snapshots;
        const int F = cfg_.bins();
        const std::string p = "block" + std::to_string(block_index);

        auto freq_pass = [&](ad::Var x) {
            ad::Var a = mha(x, p + ".freq", T, F, "freq", identity_attention).out;
            return tape_.layernorm(tape_.add(x, a), param(p + ".freq_norm.gain"),
                                   param(p + ".freq_norm.bias"));
        };
        xr = freq_pass(xr);
        xi = freq_pass(xi);

        const auto& [to_time, to_freq] = permutations();
        auto time_pass = [&](ad::Var x) {
            ad::Var xp = tape_.permute_rows(x, to_time);
            ad::Var a = mha(xp, p + ".time", F, T, "time", identity_attention).out;
            ad::Var yp = tape_.layernorm(tape_.add(xp, a), param(p + ".time_norm.gain"),
                                         param(p + ".time_norm.bias"));
            return tape_.permute_rows(yp, to_freq);
        };
        xr = time_pass(xr);
        xi = time_pass(xi);
        return {xr, xi};
    }

    /// Position-wise feed-forward applied once after the block stack:
    /// Linear(d, ffn_hidden) - GELU - Linear(ffn_hidden, d), residual + LN.
    ad::Var ffn(ad::Var x) {
        ad::Var h = tape_.gelu(tape_.linear(x, param("ffn.w1"), param("ffn.b1")));
        ad::Var y = tape_.linear(h, param("ffn.w2"), param("ffn.b2"));
        return tape_.layernorm(tape_.add(x, y), param("ffn_norm.gain"), param("ffn_norm.bias"));
    }

    struct Output {
        ad::Var out_r;  // T x F
        ad::Var out_i;  // T x F
    };

    /// Full forward pass over one feature grid. Token rows are t-major:
    /// row = t * F + f.
    Output run(const FeatureGrid& features) {
        const int T = cfg_.snapshots;
        const int F = cfg_.bins();
        require(features.rows() == T && features.cols() == F,
                "model_forward: feature grid is " + std::to_string(features.rows()) + "x" +
                    std::to_string(features.cols()) + " but the model expects " +
                    std::to_string(T) + "x" + std::to_string(F));
        const std::size_t n = static_cast<std::size_t>(T) * F;

        // Eq-5 channels split across the two streams; the mask feeds both.
        std::vector<S> fr(n * 2), fi(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
            fr[2 * i] = static_cast<S>(features.re.data[i]);
            fr[2 * i + 1] = static_cast<S>(features.mask.data[i]);
            fi[2 * i] = static_cast<S>(features.im.data[i]);
            fi[2 * i + 1] = static_cast<S>(features.mask.data[i]);
        }
        ad::Var xr = tape_.constant(fr, T * F, 2);
        ad::Var xi = tape_.constant(fi, T * F, 2);

        auto [er, ei] = complex_linear(xr, xi, "embed");
        check_stage(er, ei, "embed");

        const std::vector<S>& pe = pe_table();
        er = tape_.add_cyclic_rows(er, pe, F);
        ei = tape_.add_cyclic_rows(ei, pe, F);

        for (int k = 0; k < cfg_.n_blocks; ++k) {
            std::tie(er, ei) = factored_block(er, ei, k);
            check_stage(er, ei, "block" + std::to_string(k));
        }

        er = ffn(er);
        ei = ffn(ei);
        check_stage(er, ei, "ffn");

        auto [hr, hi] = complex_linear(er, ei, "head");
        check_stage(hr, hi, "head");
        return {tape_.reshape(hr, T, F), tape_.reshape(hi, T, F)};
    }

    /// Accumulates d(loss)/d(param) from the tape back into the store.
    void writeback_grads() {
        for (const auto& [name, var] : bound_) {
            auto& e = store_.at(name);
            auto g = tape_.grad(var);
            for (std::size_t i = 0; i < e.grad.size(); ++i) e.grad[i] += g[i];
        }
    }

    ad::Tape<S>& tape() { return tape_; }

private:
    const std::pair<std::vector<int>, std::vector<int>>& permutations() {
        if (perm_.first.empty()) {
            const int T = cfg_.snapshots, F = cfg_.bins();
            perm_.first.resize(static_cast<std::size_t>(T) * F);
            perm_.second.resize(static_cast<std::size_t>(T) * F);
            for (int f = 0; f < F; ++f)
                for (int t = 0; t < T; ++t) perm_.first[static_cast<std::size_t>(f) * T + t] = t * F + f;
            for (int t = 0; t < T; ++t)
                for (int f = 0; f < F; ++f) perm_.second[static_cast<std::size_t>(t) * F + f] = f * T + t;
        }
        return perm_;
    }

    const std::vector<S>& pe_table() {
        if (pe_.empty()) {
            RealGrid pe = positional_encoding(cfg_.bins(), cfg_.d_model);
            pe_.assign(pe.data.begin(), pe.data.end());
        }
        return pe_;
    }

    void check_stage(ad::Var a, ad::Var b, const std::string& stage) {
        if (!tape_.all_finite(a) || !tape_.all_finite(b))
            throw Error("model_forward: non-finite activations after " + stage);
    }

    ad::Tape<S>& tape_;
    ParameterStoreT<S>& store_;
    ModelConfig cfg_;
    std::unordered_map<std::string, ad::Var> bound_;
    std::pair<std::vector<int>, std::vector<int>> perm_;
    std::vector<S> pe_;
};

/// Inference-only forward pass: returns the reconstructed CFR grid.
inline ComplexGrid model_forward(const FeatureGrid& features, ParameterStore& store,
                                 const ModelConfig& cfg) {
    ad::Tape<float> tape;
    ForwardBuilder<float> fb(tape, store, cfg);
    auto out = fb.run(features);
    const int T = cfg.snapshots, F = cfg.bins();
    ComplexGrid est(T, F);
    auto r = tape.val(out.out_r);
    auto i = tape.val(out.out_i);
    for (std::size_t k = 0; k < est.data.size(); ++k)
        est.data[k] = cplx(static_cast<double>(r[k]), static_cast<double>(i[k]));
    return est;
}

// ---- checkpoint format ----
// "CFRT" | u32 version | u64 header bytes | ASCII header | f32 payload.
// The header lists config values and every parameter with its shape in
// store order; payload floats follow in exactly that order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    ParameterStore store;
};

inline void save_checkpoint(const std::string& path, const ParameterStore& store,
                            const ModelConfig& cfg) {
    std::ostringstream header;
    header << "d_model=" << cfg.d_model << "\n"
           << "n_heads=" << cfg.n_heads << "\n"
           << "n_blocks=" << cfg.n_blocks << "\n"
           << "ffn_hidden=" << cfg.ffn_hidden << "\n"
           << "snapshots=" << cfg.snapshots << "\n"
           << "nb_subbands=" << cfg.nb_subbands << "\n"
           << "bins_per_subband=" << cfg.bins_per_subband << "\n";
    for (const auto& e : store.entries) {
        header << "param " << e.name;
        for (int d : e.shape) header << " " << d;
        header << "\n";
    }
    const std::string h = header.str();

    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "save_checkpoint: cannot open " + path);
    os.write("CFRT", 4);
    binio::put_u32(os, kCheckpointVersion);
    binio::put_u64(os, h.size());
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& e : store.entries)
        for (float v : e.value) binio::put_f32(os, v);
    require(static_cast<bool>(os), "save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "load_checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(static_cast<bool>(is) && std::string(magic, 4) == "CFRT",
            "load_checkpoint: " + path + " is not a checkpoint file");
    const std::uint32_t version = binio::get_u32(is);
    require(version == kCheckpointVersion,
            "load_checkpoint: unsupported format version " + std::to_string(version));
    const std::uint64_t hsize = binio::get_u64(is);
    std::string header(hsize, '\0');
    is.read(header.data(), static_cast<std::streamsize>(hsize));
    require(static_cast<bool>(is), "load_checkpoint: truncated header");

    Checkpoint ck;
    std::vector<std::pair<std::string, std::vector<int>>> params;
    std::istringstream hs(header);
    std::string line;
    while (std::getline(hs, line)) {
        if (line.empty()) continue;
        if (line.starts_with("param ")) {
            std::istringstream ls(line.substr(6));
            std::string name;
            ls >> name;
            std::vector<int> shape;
            int d;
            while (ls >> d) shape.push_back(d);
            require(!name.empty() && !shape.empty(), "load_checkpoint: malformed param line");
            params.emplace_back(name, shape);
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, "load_checkpoint: malformed header line: " + line);
        const std::string key = line.substr(0, eq);
        const int value = std::stoi(line.substr(eq + 1));
        if (key == "d_model") ck.config.d_model = value;
        else if (key == "n_heads") ck.config.n_heads = value;
        else if (key == "n_blocks") ck.config.n_blocks = value;
        else if (key == "ffn_hidden") ck.config.ffn_hidden = value;
        else if (key == "snapshots") ck.config.snapshots = value;
        else if (key == "nb_subbands") ck.config.nb_subbands = value;
        else if (key == "bins_per_subband") ck.config.bins_per_subband = value;
        else throw Error("load_checkpoint: unknown header key: " + key);
    }
    ck.config.validate();

    for (const auto& [name, shape] : params) {
        auto& e = ck.store.add(name, shape, model_names::is_weight_matrix(name));
        for (auto& v : e.value) v = binio::get_f32(is);
    }
    require(static_cast<bool>(is), "load_checkpoint: truncated payload");
    return ck;
}

}  // namespace cfr
