#pragma once

// Test-only helpers: random data and a central finite-difference gradient
// checker that runs in double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "audiosr/autodiff.hpp"
#include "audiosr/params.hpp"

namespace testing_support {

using audiosr::ParamMap;
using audiosr::Shape;
using audiosr::Tape;
using audiosr::Tensor;
using audiosr::Var;

constexpr double kFdStep = 1e-4;
constexpr double kGradTolerance = 1e-4;

template <class T = double>
Tensor<T> random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor<T> t(s);
    for (auto& v : t.storage()) v = static_cast<T>(u(rng));
    return t;
}

inline double norm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||), over the checked
// entries; 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - n[i];
    const double scale = std::max(norm(a), norm(n));
    return scale == 0.0 ? 0.0 : norm(d) / scale;
}

// Entries of a tensor to perturb: all of them, or an evenly spread subset.
inline std::vector<std::size_t> probe_indices(std::size_t size, std::size_t max_probes) {
    std::vector<std::size_t> idx;
    if (size <= max_probes) {
        for (std::size_t i = 0; i < size; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t k = 0; k < max_probes; ++k) idx.push_back(k * size / max_probes);
    return idx;
}

using LossFn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

// Worst relative error over all inputs of `loss`.
inline double gradcheck(const LossFn& loss, std::vector<Tensor<double>> inputs, std::size_t max_probes = 256,
                        double h = kFdStep) {
    std::vector<Tensor<double>> analytic;
    {
        Tape<double> tape;
        std::vector<Var<double>> vars;
        for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
        tape.backward(loss(tape, vars));
        for (const auto& v : vars) analytic.push_back(tape.grad(v));
    }
    auto eval = [&](const std::vector<Tensor<double>>& in) {
        Tape<double> tape(false);
        std::vector<Var<double>> vars;
        for (const auto& t : in) vars.push_back(tape.leaf(t, false));
        return loss(tape, vars).value().item();
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        std::vector<double> a, n;
        for (std::size_t i : probe_indices(inputs[k].size(), max_probes)) {
            const double orig = inputs[k][i];
            inputs[k][i] = orig + h;
            const double up = eval(inputs);
            inputs[k][i] = orig - h;
            const double down = eval(inputs);
            inputs[k][i] = orig;
            a.push_back(analytic[k][i]);
            n.push_back((up - down) / (2.0 * h));
        }
        worst = std::max(worst, relative_error(a, n));
    }
    return worst;
}

using ParamLossFn = std::function<Var<double>(Tape<double>&, const audiosr::BoundParams<double>&)>;

// Per-parameter-tensor relative errors of a network loss.
inline std::map<std::string, double> gradcheck_params(const ParamLossFn& loss, ParamMap<double> params,
                                                      std::size_t max_probes = 64, double h = kFdStep) {
    ParamMap<double> analytic;
    {
        Tape<double> tape;
        audiosr::BoundParams<double> p(tape, params, true);
        tape.backward(loss(tape, p));
        analytic = p.grads();
    }
    auto eval = [&]() {
        Tape<double> tape(false);
        audiosr::BoundParams<double> p(tape, params, false);
        return loss(tape, p).value().item();
    };
    std::map<std::string, double> out;
    for (auto& [name, t] : params) {
        std::vector<double> a, n;
        for (std::size_t i : probe_indices(t.size(), max_probes)) {
            const double orig = t[i];
            t[i] = orig + h;
            const double up = eval();
            t[i] = orig - h;
            const double down = eval();
            t[i] = orig;
            a.push_back(analytic.at(name)[i]);
            n.push_back((up - down) / (2.0 * h));
        }
        out[name] = relative_error(a, n);
    }
    return out;
}

inline double worst(const std::map<std::string, double>& errs) {
    double w = 0;
    for (const auto& [k, v] : errs) w = std::max(w, v);
    return w;
}

// Weighted sum of all elements with fixed pseudo-random weights; turns any
// tensor output into a scalar whose gradient exercises every element.
inline Var<double> probe_loss(Var<double> y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    Tape<double>& tape = *y.tape();
    Tensor<double> w = random_tensor(y.shape(), rng);
    // mean((y + w)^2 - y^2) = mean(2 w y) + const
    Var<double> wv = tape.constant(w);
    Var<double> sq = audiosr::square(audiosr::add(y, wv));
    Var<double> ys = audiosr::square(y);
    return audiosr::mean_all(audiosr::sub(sq, ys));
}

}  // namespace testing_support
