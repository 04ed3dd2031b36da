#pragma once

// Raw 1-D cross-correlation kernels shared by the autodiff ops.
//
// Layout is (batch, channels, time) for signals and (out, in, width) for
// weights. All loops run in a fixed order, so results are bit-reproducible
// for a given build regardless of how batches are composed: every batch item
// is computed independently.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "audiosr/tensor.hpp"

namespace audiosr::kernels {

namespace detail {

constexpr std::size_t kTimeBlock = 32;
constexpr std::size_t kOutBlock = 4;

inline std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

}  // namespace detail

// out[b,o,t] = bias[o] + sum_i sum_k w[o,i,k] * x[b,i,t+k-pad], pad = width/2,
// zero outside the signal. Output has the input's time length.
template <class T>
Tensor<T> correlate_same(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias) {
    using namespace detail;
    const Shape xs = x.shape();
    const Shape ws = w.shape();
    const std::size_t cin = xs.channels, n = xs.time, cout = ws.batch, width = ws.time;
    if (ws.channels != cin)
        throw std::invalid_argument("conv1d: input has " + std::to_string(cin) +
                                    " channels, kernel expects " + std::to_string(ws.channels));
    const std::size_t pad = width / 2;
    const std::size_t n_round = round_up(std::max<std::size_t>(n, 1), kTimeBlock);
    const std::size_t row_len = n_round + width - 1;
    const std::size_t cout_round = round_up(std::max<std::size_t>(cout, 1), kOutBlock);

    // Zero rows for out-channel padding keep the inner block branch-free.
    std::vector<T> wpad(cout_round * cin * width, T(0));
    std::copy(w.data().begin(), w.data().end(), wpad.begin());

    Tensor<T> out({xs.batch, cout, n});
    std::vector<T> xp(cin * row_len);
    for (std::size_t b = 0; b < xs.batch; ++b) {
        std::fill(xp.begin(), xp.end(), T(0));
        for (std::size_t i = 0; i < cin; ++i) {
            auto r = x.row(b, i);
            std::copy(r.begin(), r.end(), xp.begin() + i * row_len + pad);
        }
        for (std::size_t o0 = 0; o0 < cout_round; o0 += kOutBlock) {
            T binit[kOutBlock];
            for (std::size_t q = 0; q < kOutBlock; ++q)
                binit[q] = (bias && o0 + q < cout) ? (*bias)[o0 + q] : T(0);
            for (std::size_t t0 = 0; t0 < n_round; t0 += kTimeBlock) {
                T acc[kOutBlock][kTimeBlock];
                for (std::size_t q = 0; q < kOutBlock; ++q)
                    for (std::size_t j = 0; j < kTimeBlock; ++j) acc[q][j] = binit[q];
                for (std::size_t i = 0; i < cin; ++i) {
                    const T* xr = xp.data() + i * row_len + t0;
                    const T* w0 = wpad.data() + ((o0 + 0) * cin + i) * width;
                    const T* w1 = wpad.data() + ((o0 + 1) * cin + i) * width;
                    const T* w2 = wpad.data() + ((o0 + 2) * cin + i) * width;
                    const T* w3 = wpad.data() + ((o0 + 3) * cin + i) * width;
                    for (std::size_t k = 0; k < width; ++k) {
                        const T a0 = w0[k], a1 = w1[k], a2 = w2[k], a3 = w3[k];
                        const T* xk = xr + k;
                        for (std::size_t j = 0; j < kTimeBlock; ++j) {
                            const T v = xk[j];
                            acc[0][j] += a0 * v;
                            acc[1][j] += a1 * v;
                            acc[2][j] += a2 * v;
                            acc[3][j] += a3 * v;
                        }
                    }
                }
                const std::size_t valid = std::min(kTimeBlock, n - std::min(n, t0));
                for (std::size_t q = 0; q < kOutBlock && o0 + q < cout; ++q) {
                    auto orow = out.row(b, o0 + q);
                    std::copy(acc[q], acc[q] + valid, orow.begin() + t0);
                }
            }
        }
    }
    return out;
}

// dw[o,i,k] = sum_b sum_t g[b,o,t] * x[b,i,t+k-pad] for the same-padded
// correlation above. Vectorized across taps: for fixed (o,i) this is itself a
// correlation of the padded input with g, evaluated at `width` lags.
template <class T>
Tensor<T> correlate_same_weight_grad(const Tensor<T>& x, const Tensor<T>& g, std::size_t width) {
    using namespace detail;
    const Shape xs = x.shape();
    const std::size_t cin = xs.channels, n = xs.time, cout = g.shape().channels;
    const std::size_t pad = width / 2;
    const std::size_t width_round = round_up(width, kTimeBlock);
    const std::size_t row_len = n + width_round;
    const std::size_t cout_round = round_up(std::max<std::size_t>(cout, 1), kOutBlock);

    std::vector<T> acc_w(cout_round * cin * width_round, T(0));
    std::vector<T> xp(cin * row_len);
    std::vector<T> gt(n * kOutBlock);
    for (std::size_t b = 0; b < xs.batch; ++b) {
        std::fill(xp.begin(), xp.end(), T(0));
        for (std::size_t i = 0; i < cin; ++i) {
            auto r = x.row(b, i);
            std::copy(r.begin(), r.end(), xp.begin() + i * row_len + pad);
        }
        for (std::size_t o0 = 0; o0 < cout_round; o0 += kOutBlock) {
            // Interleave kOutBlock gradient rows so one load feeds one block.
            for (std::size_t t = 0; t < n; ++t)
                for (std::size_t q = 0; q < kOutBlock; ++q)
                    gt[t * kOutBlock + q] = o0 + q < cout ? g.at(b, o0 + q, t) : T(0);
            for (std::size_t i = 0; i < cin; ++i) {
                const T* xr = xp.data() + i * row_len;
                for (std::size_t k0 = 0; k0 < width_round; k0 += kTimeBlock) {
                    T acc[kOutBlock][kTimeBlock] = {};
                    for (std::size_t t = 0; t < n; ++t) {
                        const T a0 = gt[t * kOutBlock + 0], a1 = gt[t * kOutBlock + 1];
                        const T a2 = gt[t * kOutBlock + 2], a3 = gt[t * kOutBlock + 3];
                        const T* xk = xr + t + k0;
                        for (std::size_t j = 0; j < kTimeBlock; ++j) {
                            const T v = xk[j];
                            acc[0][j] += a0 * v;
                            acc[1][j] += a1 * v;
                            acc[2][j] += a2 * v;
                            acc[3][j] += a3 * v;
                        }
                    }
                    for (std::size_t q = 0; q < kOutBlock; ++q) {
                        T* dst = acc_w.data() + ((o0 + q) * cin + i) * width_round + k0;
                        for (std::size_t j = 0; j < kTimeBlock; ++j) dst[j] += acc[q][j];
                    }
                }
            }
        }
    }
    Tensor<T> dw({cout, cin, width});
    for (std::size_t oi = 0; oi < cout * cin; ++oi)
        std::copy_n(acc_w.begin() + oi * width_round, width, dw.data().begin() + oi * width);
    return dw;
}

// Gradient with respect to the input of the same-padded correlation: a
// same-padded correlation of g with the flipped, transposed kernel.
template <class T>
Tensor<T> correlate_same_input_grad(const Tensor<T>& g, const Tensor<T>& w) {
    const Shape ws = w.shape();
    const std::size_t cout = ws.batch, cin = ws.channels, width = ws.time;
    Tensor<T> wt({cin, cout, width});
    for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t i = 0; i < cin; ++i)
            for (std::size_t k = 0; k < width; ++k) wt.at(i, o, width - 1 - k) = w.at(o, i, k);
    return correlate_same<T>(g, wt, nullptr);
}

// Strided variant used only by the strided-convolution comparison model:
// out[b,o,t] = bias[o] + sum_i sum_k w[o,i,k] * x[b,i,t*stride+k-pad].
//
// Evaluated as a same-padded correlation over the stride phases: tap k reads
// phase j = (k-pad) mod s of x at time offset q = floor((k-pad)/s), so with
// xs(b, i*s+j, t) = x(b, i, t*s+j) the strided op is an ordinary correlation
// of xs with a rearranged kernel of half-width ceil(pad/s).

namespace detail {

template <class T>
Tensor<T> phase_split(const Tensor<T>& x, std::size_t s) {
    const Shape xs = x.shape();
    Tensor<T> out({xs.batch, xs.channels * s, xs.time / s});
    for (std::size_t b = 0; b < xs.batch; ++b)
        for (std::size_t c = 0; c < xs.channels; ++c) {
            auto src = x.row(b, c);
            for (std::size_t j = 0; j < s; ++j) {
                auto dst = out.row(b, c * s + j);
                for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = src[t * s + j];
            }
        }
    return out;
}

struct PolyphaseTap {
    std::size_t channel_phase;  // j
    std::size_t tap;            // q + half
};

inline PolyphaseTap polyphase_tap(std::size_t k, std::size_t width, std::size_t s) {
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(width / 2);
    const std::ptrdiff_t half = (pad + static_cast<std::ptrdiff_t>(s) - 1) / static_cast<std::ptrdiff_t>(s);
    const std::ptrdiff_t d = static_cast<std::ptrdiff_t>(k) - pad;
    const std::ptrdiff_t ss = static_cast<std::ptrdiff_t>(s);
    const std::ptrdiff_t j = ((d % ss) + ss) % ss;
    return {static_cast<std::size_t>(j), static_cast<std::size_t>((d - j) / ss + half)};
}

inline std::size_t polyphase_width(std::size_t width, std::size_t s) { return 2 * ((width / 2 + s - 1) / s) + 1; }

template <class T>
Tensor<T> polyphase_kernel(const Tensor<T>& w, std::size_t s) {
    const Shape ws = w.shape();
    Tensor<T> out({ws.batch, ws.channels * s, polyphase_width(ws.time, s)});
    for (std::size_t o = 0; o < ws.batch; ++o)
        for (std::size_t i = 0; i < ws.channels; ++i)
            for (std::size_t k = 0; k < ws.time; ++k) {
                const PolyphaseTap p = polyphase_tap(k, ws.time, s);
                out.at(o, i * s + p.channel_phase, p.tap) = w.at(o, i, k);
            }
    return out;
}

}  // namespace detail

template <class T>
Tensor<T> correlate_strided(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                            std::size_t stride) {
    if (w.shape().channels != x.shape().channels) throw std::invalid_argument("conv1d: channel mismatch");
    if (x.shape().time % stride != 0) throw std::invalid_argument("conv1d: time not divisible by stride");
    return correlate_same<T>(detail::phase_split(x, stride), detail::polyphase_kernel(w, stride), bias);
}

// Accumulates the input and kernel gradients into dx / dw (either may be null).
template <class T>
void correlate_strided_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& g,
                                std::size_t stride, Tensor<T>* dx, Tensor<T>* dw) {
    const Shape ws = w.shape();
    if (dx) {
        const Tensor<T> dxs = correlate_same_input_grad(g, detail::polyphase_kernel(w, stride));
        const Shape xs = x.shape();
        for (std::size_t b = 0; b < xs.batch; ++b)
            for (std::size_t c = 0; c < xs.channels; ++c) {
                auto dst = dx->row(b, c);
                for (std::size_t j = 0; j < stride; ++j) {
                    auto src = dxs.row(b, c * stride + j);
                    for (std::size_t t = 0; t < src.size(); ++t) dst[t * stride + j] += src[t];
                }
            }
    }
    if (dw) {
        const Tensor<T> dwp =
            correlate_same_weight_grad(detail::phase_split(x, stride), g, detail::polyphase_width(ws.time, stride));
        for (std::size_t o = 0; o < ws.batch; ++o)
            for (std::size_t i = 0; i < ws.channels; ++i)
                for (std::size_t k = 0; k < ws.time; ++k) {
                    const detail::PolyphaseTap p = detail::polyphase_tap(k, ws.time, stride);
                    dw->at(o, i, k) += dwp.at(o, i * stride + p.channel_phase, p.tap);
                }
    }
}

}  // namespace audiosr::kernels
