#pragma once

// Define-by-run reverse-mode differentiation over rank-3 tensors.
//
// A Tape owns every value produced during one forward pass. Ops append a
// node holding the output value, the ids of their inputs and a closure that
// maps the output gradient onto input gradients. Nodes are appended in
// execution order, so the node list is already topologically sorted and
// backward() is a single reverse sweep.

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "audiosr/error.hpp"
#include "audiosr/kernels.hpp"
#include "audiosr/tensor.hpp"

namespace audiosr {

template <class T>
class Tape;

// Lightweight handle to a node on a Tape. Valid only while the tape lives.
template <class T>
class Var {
public:
    Var() = default;

    Tape<T>* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }
    const Tensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const { return tape_->requires_grad(id_); }

private:
    friend class Tape<T>;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

template <class T>
class Tape {
public:
    // Receives the tape and the gradient flowing into the node's output.
    using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

    explicit Tape(bool recording = true) : recording_(recording) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    std::size_t size() const { return nodes_.size(); }

    Var<T> leaf(Tensor<T> value, bool requires_grad = true) {
        check_finite(value, "leaf");
        nodes_.push_back(Node{std::move(value), {}, recording_ && requires_grad, {}});
        return Var<T>(this, nodes_.size() - 1);
    }

    Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

    // Copy of v's value with no path back to v.
    Var<T> detach(Var<T> v) { return constant(v.value()); }

    // Appends an op node. The closure is dropped when no input needs a gradient.
    Var<T> record(Tensor<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn, const char* op) {
        check_finite(value, op);
        bool needs = false;
        for (const auto& in : inputs) {
            if (in.tape() != this) throw std::invalid_argument(std::string(op) + ": input belongs to another tape");
            needs = needs || nodes_[in.id()].requires_grad;
        }
        needs = needs && recording_;
        nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
        return Var<T>(this, nodes_.size() - 1);
    }

    const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

    // Gradient of the last backward() target with respect to v; zeros when no
    // gradient reached v.
    Tensor<T> grad(Var<T> v) const {
        const Node& n = nodes_.at(v.id());
        if (n.grad.empty() && n.value.size() != 0) return Tensor<T>(n.value.shape());
        return n.grad;
    }

    // Accumulation target used by backward closures.
    Tensor<T>& grad_buffer(std::size_t id) {
        Node& n = nodes_[id];
        if (n.grad.shape() != n.value.shape() || (n.grad.empty() && n.value.size() != 0))
            n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    void accumulate(std::size_t id, const Tensor<T>& g) {
        if (!nodes_[id].requires_grad) return;
        Tensor<T>& dst = grad_buffer(id);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }

    void backward(Var<T> loss) {
        if (loss.tape() != this) throw std::invalid_argument("backward: loss is not on this tape");
        if (loss.value().size() != 1)
            throw std::invalid_argument("backward: loss must be scalar, got " + to_string(loss.shape()));
        if (!nodes_[loss.id()].requires_grad)
            throw std::invalid_argument("backward: loss does not depend on any requires_grad leaf");
        for (auto& n : nodes_) n.grad = Tensor<T>();
        grad_buffer(loss.id())[0] = T(1);
        for (std::size_t id = loss.id() + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
            n.backward(*this, n.grad);
        }
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    static void check_finite(const Tensor<T>& v, const char* op) {
        if (!v.all_finite()) throw NonFiniteError(std::string("non-finite value produced by ") + op);
    }

    bool recording_;
    std::deque<Node> nodes_;  // deque: value() references stay valid as ops are appended
};

// ---------------------------------------------------------------------------
// Ops

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

template <class T>
Tape<T>& tape_of(const Var<T>& v) {
    require(v.valid(), "operation on an empty Var");
    return *v.tape();
}

}  // namespace detail

// Same-padded cross-correlation. kernel: (out, in, width), bias: (out, 1, 1).
// With stride > 1 the output length is time / stride.
template <class T>
Var<T> conv1d(Var<T> x, Var<T> kernel, Var<T> bias, std::size_t stride = 1) {
    auto& tape = detail::tape_of(x);
    const Shape xs = x.shape(), ks = kernel.shape();
    detail::require(ks.time % 2 == 1, "conv1d: kernel width must be odd, got " + std::to_string(ks.time));
    detail::require(xs.channels == ks.channels, "conv1d: input has " + std::to_string(xs.channels) +
                                                    " channels, kernel expects " + std::to_string(ks.channels));
    detail::require(bias.shape() == Shape{ks.batch, 1, 1}, "conv1d: bias must have shape (out,1,1)");
    detail::require(stride >= 1 && xs.time % stride == 0, "conv1d: time not divisible by stride");

    const std::size_t xi = x.id(), ki = kernel.id(), bi = bias.id();
    if (stride == 1) {
        Tensor<T> out = kernels::correlate_same(x.value(), kernel.value(), &bias.value());
        return tape.record(std::move(out), {x, kernel, bias}, [xi, ki, bi](Tape<T>& tp, const Tensor<T>& g) {
            const Tensor<T>& w = tp.value(ki);
            if (tp.requires_grad(xi)) tp.accumulate(xi, kernels::correlate_same_input_grad(g, w));
            if (tp.requires_grad(ki))
                tp.accumulate(ki, kernels::correlate_same_weight_grad(tp.value(xi), g, w.shape().time));
            if (tp.requires_grad(bi)) {
                Tensor<T>& db = tp.grad_buffer(bi);
                for (std::size_t b = 0; b < g.shape().batch; ++b)
                    for (std::size_t o = 0; o < g.shape().channels; ++o) {
                        T s = T(0);
                        for (T v : g.row(b, o)) s += v;
                        db[o] += s;
                    }
            }
        }, "conv1d");
    }
    Tensor<T> out = kernels::correlate_strided(x.value(), kernel.value(), &bias.value(), stride);
    return tape.record(std::move(out), {x, kernel, bias}, [xi, ki, bi, stride](Tape<T>& tp, const Tensor<T>& g) {
        Tensor<T>* dx = tp.requires_grad(xi) ? &tp.grad_buffer(xi) : nullptr;
        Tensor<T>* dw = tp.requires_grad(ki) ? &tp.grad_buffer(ki) : nullptr;
        kernels::correlate_strided_backward(tp.value(xi), tp.value(ki), g, stride, dx, dw);
        if (tp.requires_grad(bi)) {
            Tensor<T>& db = tp.grad_buffer(bi);
            for (std::size_t b = 0; b < g.shape().batch; ++b)
                for (std::size_t o = 0; o < g.shape().channels; ++o)
                    for (T v : g.row(b, o)) db[o] += v;
        }
    }, "conv1d");
}

template <class T>
Var<T> leaky_relu(Var<T> x, double alpha) {
    auto& tape = detail::tape_of(x);
    detail::require(alpha >= 0.0 && alpha < 1.0, "leaky_relu: alpha must lie in [0,1)");
    const T a = static_cast<T>(alpha);
    Tensor<T> out = x.value();
    for (auto& v : out.storage()) v = v >= T(0) ? v : a * v;
    const std::size_t xi = x.id();
    return tape.record(std::move(out), {x}, [xi, a](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& xv = tp.value(xi);
        Tensor<T>& dx = tp.grad_buffer(xi);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += xv[i] > T(0) ? g[i] : a * g[i];
    }, "leaky_relu");
}

template <class T>
Var<T> relu(Var<T> x) {
    return leaky_relu(x, 0.0);
}

// Channels of a followed by channels of b.
template <class T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
    auto& tape = detail::tape_of(a);
    const Shape as = a.shape(), bs = b.shape();
    detail::require(as.batch == bs.batch && as.time == bs.time,
                    "concat_channels: shapes " + to_string(as) + " and " + to_string(bs) + " disagree");
    Tensor<T> out({as.batch, as.channels + bs.channels, as.time});
    for (std::size_t n = 0; n < as.batch; ++n) {
        for (std::size_t c = 0; c < as.channels; ++c) {
            auto r = a.value().row(n, c);
            std::copy(r.begin(), r.end(), out.row(n, c).begin());
        }
        for (std::size_t c = 0; c < bs.channels; ++c) {
            auto r = b.value().row(n, c);
            std::copy(r.begin(), r.end(), out.row(n, as.channels + c).begin());
        }
    }
    const std::size_t ai = a.id(), bi = b.id();
    return tape.record(std::move(out), {a, b}, [ai, bi, as, bs](Tape<T>& tp, const Tensor<T>& g) {
        for (std::size_t n = 0; n < as.batch; ++n) {
            if (tp.requires_grad(ai)) {
                Tensor<T>& da = tp.grad_buffer(ai);
                for (std::size_t c = 0; c < as.channels; ++c) {
                    auto src = g.row(n, c);
                    auto dst = da.row(n, c);
                    for (std::size_t t = 0; t < as.time; ++t) dst[t] += src[t];
                }
            }
            if (tp.requires_grad(bi)) {
                Tensor<T>& db = tp.grad_buffer(bi);
                for (std::size_t c = 0; c < bs.channels; ++c) {
                    auto src = g.row(n, as.channels + c);
                    auto dst = db.row(n, c);
                    for (std::size_t t = 0; t < bs.time; ++t) dst[t] += src[t];
                }
            }
        }
    }, "concat_channels");
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
    auto& tape = detail::tape_of(a);
    detail::require(a.shape() == b.shape(), "add: shapes " + to_string(a.shape()) + " and " +
                                                to_string(b.shape()) + " disagree");
    Tensor<T> out = a.value();
    const Tensor<T>& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const std::size_t ai = a.id(), bi = b.id();
    return tape.record(std::move(out), {a, b}, [ai, bi](Tape<T>& tp, const Tensor<T>& g) {
        tp.accumulate(ai, g);
        tp.accumulate(bi, g);
    }, "add");
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
    auto& tape = detail::tape_of(a);
    detail::require(a.shape() == b.shape(), "sub: shapes " + to_string(a.shape()) + " and " +
                                                to_string(b.shape()) + " disagree");
    Tensor<T> out = a.value();
    const Tensor<T>& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const std::size_t ai = a.id(), bi = b.id();
    return tape.record(std::move(out), {a, b}, [ai, bi](Tape<T>& tp, const Tensor<T>& g) {
        tp.accumulate(ai, g);
        if (tp.requires_grad(bi)) {
            Tensor<T>& db = tp.grad_buffer(bi);
            for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
        }
    }, "sub");
}

template <class T>
Var<T> mul_scalar(Var<T> a, double c) {
    auto& tape = detail::tape_of(a);
    const T k = static_cast<T>(c);
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v *= k;
    const std::size_t ai = a.id();
    return tape.record(std::move(out), {a}, [ai, k](Tape<T>& tp, const Tensor<T>& g) {
        Tensor<T>& da = tp.grad_buffer(ai);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += k * g[i];
    }, "mul_scalar");
}

template <class T>
Var<T> add_scalar(Var<T> a, double c) {
    auto& tape = detail::tape_of(a);
    const T k = static_cast<T>(c);
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v += k;
    const std::size_t ai = a.id();
    return tape.record(std::move(out), {a}, [ai](Tape<T>& tp, const Tensor<T>& g) { tp.accumulate(ai, g); },
                       "add_scalar");
}

// Mean over every element; result has shape (1,1,1).
template <class T>
Var<T> mean_all(Var<T> a) {
    auto& tape = detail::tape_of(a);
    const std::size_t n = a.value().size();
    detail::require(n > 0, "mean_all: empty tensor");
    T s = T(0);
    for (T v : a.value().data()) s += v;
    const std::size_t ai = a.id();
    return tape.record(Tensor<T>::scalar(s / static_cast<T>(n)), {a}, [ai, n](Tape<T>& tp, const Tensor<T>& g) {
        Tensor<T>& da = tp.grad_buffer(ai);
        const T share = g[0] / static_cast<T>(n);
        for (auto& v : da.storage()) v += share;
    }, "mean_all");
}

template <class T>
Var<T> square(Var<T> a) {
    auto& tape = detail::tape_of(a);
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v *= v;
    const std::size_t ai = a.id();
    return tape.record(std::move(out), {a}, [ai](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& av = tp.value(ai);
        Tensor<T>& da = tp.grad_buffer(ai);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += T(2) * av[i] * g[i];
    }, "square");
}

template <class T>
Var<T> log(Var<T> a) {
    auto& tape = detail::tape_of(a);
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) {
        if (!(v > T(0))) throw std::invalid_argument("log: non-positive input " + std::to_string(v));
        v = std::log(v);
    }
    const std::size_t ai = a.id();
    return tape.record(std::move(out), {a}, [ai](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& av = tp.value(ai);
        Tensor<T>& da = tp.grad_buffer(ai);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / av[i];
    }, "log");
}

template <class T>
Var<T> sigmoid(Var<T> a) {
    auto& tape = detail::tape_of(a);
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v = T(1) / (T(1) + std::exp(-v));
    const std::size_t ai = a.id();
    const std::size_t self = tape.size();
    return tape.record(std::move(out), {a}, [ai, self](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& y = tp.value(self);
        Tensor<T>& da = tp.grad_buffer(ai);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (T(1) - y[i]);
    }, "sigmoid");
}

// max(a, floor); gradient passes only where a > floor.
template <class T>
Var<T> clamp_min(Var<T> a, double floor) {
    auto& tape = detail::tape_of(a);
    const T f = static_cast<T>(floor);
    Tensor<T> out = a.value();
    for (auto& v : out.storage()) v = v > f ? v : f;
    const std::size_t ai = a.id();
    return tape.record(std::move(out), {a}, [ai, f](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& av = tp.value(ai);
        Tensor<T>& da = tp.grad_buffer(ai);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av[i] > f) da[i] += g[i];
    }, "clamp_min");
}

// Fully connected layer over each batch item flattened to channels*time
// features. weights: (out, features, 1), bias: (out, 1, 1); output (batch, out, 1).
template <class T>
Var<T> dense(Var<T> x, Var<T> weights, Var<T> bias) {
    auto& tape = detail::tape_of(x);
    const Shape xs = x.shape(), ws = weights.shape();
    const std::size_t features = xs.channels * xs.time, nout = ws.batch;
    detail::require(ws.channels == features && ws.time == 1,
                    "dense: weights " + to_string(ws) + " do not match " + std::to_string(features) + " features");
    detail::require(bias.shape() == Shape{nout, 1, 1}, "dense: bias must have shape (out,1,1)");
    const Tensor<T>& xv = x.value();
    const Tensor<T>& wv = weights.value();
    Tensor<T> out({xs.batch, nout, 1});
    for (std::size_t b = 0; b < xs.batch; ++b) {
        const T* xr = xv.data().data() + b * features;
        for (std::size_t o = 0; o < nout; ++o) {
            const T* wr = wv.data().data() + o * features;
            T s = T(0);
            for (std::size_t f = 0; f < features; ++f) s += wr[f] * xr[f];
            out[b * nout + o] = s + bias.value()[o];
        }
    }
    const std::size_t xi = x.id(), wi = weights.id(), bi = bias.id();
    return tape.record(std::move(out), {x, weights, bias}, [xi, wi, bi, features, nout](Tape<T>& tp, const Tensor<T>& g) {
        const Tensor<T>& xv = tp.value(xi);
        const Tensor<T>& wv = tp.value(wi);
        const std::size_t batch = g.shape().batch;
        if (tp.requires_grad(xi)) {
            Tensor<T>& dx = tp.grad_buffer(xi);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < nout; ++o) {
                    const T go = g[b * nout + o];
                    const T* wr = wv.data().data() + o * features;
                    T* dr = dx.data().data() + b * features;
                    for (std::size_t f = 0; f < features; ++f) dr[f] += go * wr[f];
                }
        }
        if (tp.requires_grad(wi)) {
            Tensor<T>& dw = tp.grad_buffer(wi);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < nout; ++o) {
                    const T go = g[b * nout + o];
                    const T* xr = xv.data().data() + b * features;
                    T* dr = dw.data().data() + o * features;
                    for (std::size_t f = 0; f < features; ++f) dr[f] += go * xr[f];
                }
        }
        if (tp.requires_grad(bi)) {
            Tensor<T>& db = tp.grad_buffer(bi);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t o = 0; o < nout; ++o) db[o] += g[b * nout + o];
        }
    }, "dense");
}

}  // namespace audiosr
