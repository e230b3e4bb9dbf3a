#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cfr/params.hpp"

namespace cfr {

/// AdamW moment estimates, laid out parallel to the store's entries.
struct OptimizerState {
    struct Slot {
        std::vector<double> m;  // first moment
        std::vector<double> v;  // second moment
    };
    std::vector<Slot> slots;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double current_lr = 0.0;

    template <typename S>
    static OptimizerState for_store(const ParameterStoreT<S>& store) {
        OptimizerState st;
        st.slots.resize(store.entries.size());
        for (std::size_t i = 0; i < store.entries.size(); ++i) {
            st.slots[i].m.assign(store.entries[i].value.size(), 0.0);
            st.slots[i].v.assign(store.entries[i].value.size(), 0.0);
        }
        return st;
    }
};

/// Cosine annealing without warmup or restarts:
/// lr(step) = lr0 * 0.5 * (1 + cos(pi * step / total_steps)).
inline double cosine_lr(long step, long total_steps, double lr0) {
    require(total_steps > 0, "cosine_lr: total_steps must be > 0");
    require(step >= 0 && step <= total_steps, "cosine_lr: step out of range");
    return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                       static_cast<double>(total_steps)));
}

/// Scales all gradients so the global L2 norm does not exceed max_norm;
/// returns the pre-clip norm.
template <typename S>
inline double clip_gradients(ParameterStoreT<S>& store, double max_norm) {
    require(max_norm > 0.0, "clip_gradients: max_norm must be > 0");
    const double norm = store.grad_norm();
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& e : store.entries)
            for (auto& g : e.grad) g = static_cast<S>(static_cast<double>(g) * scale);
    }
    return norm;
}

/// One decoupled-weight-decay Adam update. Weight decay touches only the
/// entries registered with decay=true (weight matrices). Gradients are
/// cleared afterwards.
template <typename S>
inline void adamw_step(ParameterStoreT<S>& store, OptimizerState& state, double lr,
                       double weight_decay) {
    require(state.slots.size() == store.entries.size(), "adamw_step: state/store mismatch");
    state.step += 1;
    state.current_lr = lr;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t e = 0; e < store.entries.size(); ++e) {
        auto& entry = store.entries[e];
        auto& slot = state.slots[e];
        for (std::size_t i = 0; i < entry.value.size(); ++i) {
            const double g = static_cast<double>(entry.grad[i]);
            require(std::isfinite(g), "adamw_step: non-finite gradient in " + entry.name);
            slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g;
            slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g * g;
            const double mhat = slot.m[i] / bias1;
            const double vhat = slot.v[i] / bias2;
            double value = static_cast<double>(entry.value[i]);
            value -= lr * mhat / (std::sqrt(vhat) + state.eps);
            if (entry.decay) value -= lr * weight_decay * value;
            entry.value[i] = static_cast<S>(value);
        }
        std::fill(entry.grad.begin(), entry.grad.end(), S(0));
    }
    store.check_values_finite("after optimizer step " + std::to_string(state.step));
}

}  // namespace cfr
