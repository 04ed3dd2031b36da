#pragma once

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

#include "audiosr/autodiff.hpp"
#include "audiosr/tensor.hpp"

namespace audiosr {

// Named learnable arrays of one network. Ordered so that iteration (and
// therefore serialization and optimizer updates) is deterministic.
template <class T>
using ParamMap = std::map<std::string, Tensor<T>>;

template <class U, class T>
ParamMap<U> cast_params(const ParamMap<T>& p) {
    ParamMap<U> out;
    for (const auto& [name, t] : p) out.emplace(name, t.template cast<U>());
    return out;
}

template <class T>
std::size_t parameter_count(const ParamMap<T>& p) {
    std::size_t n = 0;
    for (const auto& [name, t] : p) n += t.size();
    return n;
}

// He-style scaled normal init: std = sqrt(gain / fan_in).
template <class T>
Tensor<T> he_normal(Shape shape, std::size_t fan_in, std::mt19937_64& rng, double gain = 2.0) {
    std::normal_distribution<double> nd(0.0, std::sqrt(gain / static_cast<double>(fan_in)));
    Tensor<T> t(shape);
    for (auto& v : t.storage()) v = static_cast<T>(nd(rng));
    return t;
}

// A ParamMap placed on a tape as leaves. Frozen networks bind with
// requires_grad = false so no gradient is ever accumulated for them.
template <class T>
class BoundParams {
public:
    BoundParams(Tape<T>& tape, const ParamMap<T>& params, bool requires_grad) : tape_(&tape) {
        for (const auto& [name, t] : params) vars_.emplace(name, tape.leaf(t, requires_grad));
    }

    Var<T> operator[](const std::string& name) const {
        auto it = vars_.find(name);
        if (it == vars_.end()) throw std::invalid_argument("missing parameter '" + name + "'");
        return it->second;
    }

    ParamMap<T> grads() const {
        ParamMap<T> out;
        for (const auto& [name, v] : vars_) out.emplace(name, tape_->grad(v));
        return out;
    }

private:
    Tape<T>* tape_;
    std::map<std::string, Var<T>> vars_;
};

}  // namespace audiosr
