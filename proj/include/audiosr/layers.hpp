#pragma once

// Architectural building blocks: resolution shuffles, the four-width
// multiscale convolution, and the down/up blocks of the U-net.

#include <array>
#include <cstddef>
#include <random>
#include <string>

#include "audiosr/autodiff.hpp"
#include "audiosr/params.hpp"

namespace audiosr {

// ---------------------------------------------------------------------------
// Superpixel / subpixel
//
// Phase-major ordering: superpixel output channel c*r + j at time t is input
// channel c at time t*r + j. Both are exact permutations.

namespace detail {

template <class T>
Tensor<T> superpixel_values(const Tensor<T>& x, std::size_t r) {
    const Shape s = x.shape();
    Tensor<T> out({s.batch, s.channels * r, s.time / r});
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t c = 0; c < s.channels; ++c) {
            auto src = x.row(b, c);
            for (std::size_t j = 0; j < r; ++j) {
                auto dst = out.row(b, c * r + j);
                for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = src[t * r + j];
            }
        }
    return out;
}

template <class T>
Tensor<T> subpixel_values(const Tensor<T>& x, std::size_t r) {
    const Shape s = x.shape();
    Tensor<T> out({s.batch, s.channels / r, s.time * r});
    for (std::size_t b = 0; b < s.batch; ++b)
        for (std::size_t c = 0; c < s.channels / r; ++c) {
            auto dst = out.row(b, c);
            for (std::size_t j = 0; j < r; ++j) {
                auto src = x.row(b, c * r + j);
                for (std::size_t t = 0; t < s.time; ++t) dst[t * r + j] = src[t];
            }
        }
    return out;
}

}  // namespace detail

// (batch, C, T) -> (batch, C*r, T/r).
template <class T>
Var<T> superpixel(Var<T> x, std::size_t r) {
    auto& tape = detail::tape_of(x);
    detail::require(r >= 1, "superpixel: factor must be >= 1");
    detail::require(x.shape().time % r == 0, "superpixel: time " + std::to_string(x.shape().time) +
                                                 " not divisible by " + std::to_string(r));
    const std::size_t xi = x.id();
    return tape.record(detail::superpixel_values(x.value(), r), {x}, [xi, r](Tape<T>& tp, const Tensor<T>& g) {
        tp.accumulate(xi, detail::subpixel_values(g, r));
    }, "superpixel");
}

// (batch, C, T) -> (batch, C/r, T*r); inverse of superpixel.
template <class T>
Var<T> subpixel(Var<T> x, std::size_t r) {
    auto& tape = detail::tape_of(x);
    detail::require(r >= 1, "subpixel: factor must be >= 1");
    detail::require(x.shape().channels % r == 0, "subpixel: channels " + std::to_string(x.shape().channels) +
                                                     " not divisible by " + std::to_string(r));
    const std::size_t xi = x.id();
    return tape.record(detail::subpixel_values(x.value(), r), {x}, [xi, r](Tape<T>& tp, const Tensor<T>& g) {
        tp.accumulate(xi, detail::superpixel_values(g, r));
    }, "subpixel");
}

// ---------------------------------------------------------------------------
// Multiscale convolution

inline constexpr std::array<std::size_t, 4> kMultiscaleWidths{3, 9, 27, 81};

inline std::string kernel_name(const std::string& prefix, std::size_t width) {
    return prefix + ".w" + std::to_string(width);
}
inline std::string bias_name(const std::string& prefix, std::size_t width) {
    return prefix + ".b" + std::to_string(width);
}

// Four same-padded branches of widths 3, 9, 27, 81, each producing out_ch/4
// channels, concatenated in that order.
template <class T>
struct MultiscaleConvParams {
    std::array<Var<T>, 4> kernels;
    std::array<Var<T>, 4> biases;

    std::size_t in_channels() const { return kernels[0].shape().channels; }
    std::size_t out_channels() const {
        std::size_t n = 0;
        for (const auto& k : kernels) n += k.shape().batch;
        return n;
    }
};

template <class T>
void init_multiscale(ParamMap<T>& params, const std::string& prefix, std::size_t in_ch, std::size_t out_ch,
                     std::mt19937_64& rng) {
    detail::require(out_ch % 4 == 0, "multiscale conv: out channels " + std::to_string(out_ch) +
                                         " not divisible by 4");
    for (std::size_t w : kMultiscaleWidths) {
        params[kernel_name(prefix, w)] = he_normal<T>({out_ch / 4, in_ch, w}, in_ch * w, rng);
        params[bias_name(prefix, w)] = Tensor<T>({out_ch / 4, 1, 1});
    }
}

template <class T>
MultiscaleConvParams<T> bind_multiscale(const BoundParams<T>& p, const std::string& prefix) {
    MultiscaleConvParams<T> m;
    for (std::size_t i = 0; i < kMultiscaleWidths.size(); ++i) {
        m.kernels[i] = p[kernel_name(prefix, kMultiscaleWidths[i])];
        m.biases[i] = p[bias_name(prefix, kMultiscaleWidths[i])];
    }
    return m;
}

template <class T>
Var<T> multiscale_conv(Var<T> x, const MultiscaleConvParams<T>& p, std::size_t stride = 1) {
    detail::require(x.shape().channels == p.in_channels(),
                    "multiscale_conv: input has " + std::to_string(x.shape().channels) + " channels, layer expects " +
                        std::to_string(p.in_channels()));
    Var<T> out = conv1d(x, p.kernels[0], p.biases[0], stride);
    for (std::size_t i = 1; i < p.kernels.size(); ++i)
        out = concat_channels(out, conv1d(x, p.kernels[i], p.biases[i], stride));
    return out;
}

// ---------------------------------------------------------------------------
// Blocks

template <class T>
struct BlockParams {
    MultiscaleConvParams<T> conv;
    double alpha = 0.0;  // 0 is plain ReLU
    std::size_t factor = 2;
};

// multiscale_conv -> superpixel -> activation. Halves time, doubles the
// channel count produced by the convolution.
template <class T>
Var<T> d_block(Var<T> x, const BlockParams<T>& p) {
    detail::require(x.shape().time % p.factor == 0, "d_block: time " + std::to_string(x.shape().time) +
                                                        " not divisible by " + std::to_string(p.factor));
    return leaky_relu(superpixel(multiscale_conv(x, p.conv), p.factor), p.alpha);
}

// multiscale_conv -> activation -> subpixel -> stack the skip tensor after the
// upsampled channels. An empty skip Var gives the skip-free variant.
template <class T>
Var<T> u_block(Var<T> x, Var<T> skip, const BlockParams<T>& p) {
    Var<T> up = subpixel(leaky_relu(multiscale_conv(x, p.conv), p.alpha), p.factor);
    if (!skip.valid()) return up;
    detail::require(skip.shape().batch == up.shape().batch && skip.shape().time == up.shape().time,
                    "u_block: skip " + to_string(skip.shape()) + " does not match upsampled " + to_string(up.shape()));
    return concat_channels(up, skip);
}

template <class T>
Var<T> u_block(Var<T> x, const BlockParams<T>& p) {
    return u_block(x, Var<T>{}, p);
}

}  // namespace audiosr
