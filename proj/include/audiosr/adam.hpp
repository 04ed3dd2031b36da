#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "audiosr/params.hpp"

namespace audiosr {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    ParamMap<T> m;
    ParamMap<T> v;

    bool operator==(const AdamState& o) const {
        return config.lr == o.config.lr && config.beta1 == o.config.beta1 && config.beta2 == o.config.beta2 &&
               config.eps == o.config.eps && step == o.step && m == o.m && v == o.v;
    }
};

template <class T>
AdamState<T> make_adam(const ParamMap<T>& params, AdamConfig config = {}) {
    AdamState<T> s{config, 0, {}, {}};
    for (const auto& [name, p] : params) {
        s.m.emplace(name, Tensor<T>(p.shape()));
        s.v.emplace(name, Tensor<T>(p.shape()));
    }
    return s;
}

// One bias-corrected ADAM update of every parameter in `params`.
template <class T>
void adam_step(ParamMap<T>& params, const ParamMap<T>& grads, AdamState<T>& state) {
    for (const auto& [name, p] : params) {
        auto g = grads.find(name);
        if (g == grads.end()) throw std::invalid_argument("adam_step: no gradient for '" + name + "'");
        if (g->second.shape() != p.shape() || state.m.at(name).shape() != p.shape() ||
            state.v.at(name).shape() != p.shape())
            throw std::invalid_argument("adam_step: shape mismatch for '" + name + "'");
    }
    state.step += 1;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step);
    const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
    const T corr1 = static_cast<T>(1.0 - std::pow(c.beta1, t));
    const T corr2 = static_cast<T>(1.0 - std::pow(c.beta2, t));
    const T lr = static_cast<T>(c.lr), eps = static_cast<T>(c.eps);
    for (auto& [name, p] : params) {
        const Tensor<T>& g = grads.at(name);
        Tensor<T>& m = state.m.at(name);
        Tensor<T>& v = state.v.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            const T mhat = m[i] / corr1;
            const T vhat = v[i] / corr2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace audiosr
