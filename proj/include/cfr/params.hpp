#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfr/rng.hpp"
#include "cfr/util.hpp"

namespace cfr {

/// Named, shape-tagged real tensors with matching gradient slots. Entry
/// order is fixed at registration time and defines the checkpoint layout.
template <typename S>
struct ParameterStoreT {
    struct Entry {
        std::string name;
        std::vector<int> shape;
        std::vector<S> value;
        std::vector<S> grad;
        bool decay = false;  // participates in weight decay
    };

    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> index;

    Entry& add(const std::string& name, std::vector<int> shape, bool decay) {
        require(!index.contains(name), "ParameterStore: duplicate name " + name);
        std::size_t n = 1;
        for (int d : shape) {
            require(d > 0, "ParameterStore: non-positive dimension in " + name);
            n *= static_cast<std::size_t>(d);
        }
        index[name] = entries.size();
        entries.push_back(Entry{name, std::move(shape), std::vector<S>(n, S(0)),
                                std::vector<S>(n, S(0)), decay});
        return entries.back();
    }

    Entry& at(const std::string& name) {
        auto it = index.find(name);
        require(it != index.end(), "ParameterStore: unknown parameter " + name);
        return entries[it->second];
    }
    const Entry& at(const std::string& name) const {
        auto it = index.find(name);
        require(it != index.end(), "ParameterStore: unknown parameter " + name);
        return entries[it->second];
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.value.size();
        return n;
    }

    void zero_grad() {
        for (auto& e : entries) std::fill(e.grad.begin(), e.grad.end(), S(0));
    }

    double grad_norm() const {
        double acc = 0.0;
        for (const auto& e : entries)
            for (S g : e.grad) acc += static_cast<double>(g) * static_cast<double>(g);
        return std::sqrt(acc);
    }

    void check_values_finite(const std::string& when) const {
        for (const auto& e : entries)
            for (S v : e.value)
                require(std::isfinite(static_cast<double>(v)),
                        "non-finite parameter value in " + e.name + " " + when);
    }
};

using ParameterStore = ParameterStoreT<float>;

/// Fan-based uniform init U(+-sqrt(6/(fan_in+fan_out))) for a matrix entry
/// of shape (out, in); vectors default to zero and are left untouched.
template <typename S>
inline void init_uniform_fan(typename ParameterStoreT<S>::Entry& e, RngStream& rng) {
    require(e.shape.size() == 2, "init_uniform_fan: expected a matrix");
    const double fan_out = e.shape[0];
    const double fan_in = e.shape[1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : e.value) v = static_cast<S>(rng.uniform(-bound, bound));
}

}  // namespace cfr
