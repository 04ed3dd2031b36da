#pragma once

// The three networks: U-net generator, discriminator and skip-free
// convolutional autoencoder whose bottleneck supplies the feature loss.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "audiosr/layers.hpp"

namespace audiosr {

namespace detail {

inline std::size_t schedule(std::size_t c0, std::size_t cmax, std::size_t b) {
    return std::min(cmax, c0 << b);
}

inline void validate_schedule(const char* who, std::size_t depth, std::size_t c0, std::size_t cmax) {
    require(depth >= 1, std::string(who) + ": depth must be >= 1");
    require(depth < 20, std::string(who) + ": depth too large");
    require(c0 >= 4 && cmax >= c0, std::string(who) + ": need 4 <= c0 <= c_max");
    for (std::size_t b = 0; b < depth; ++b)
        require(schedule(c0, cmax, b) % 4 == 0, std::string(who) + ": channel schedule must be divisible by 4");
}

inline std::string block_name(const char* kind, std::size_t b) { return std::string(kind) + std::to_string(b); }

}  // namespace detail

// How D-blocks reduce resolution. The strided variant exists for timing
// comparisons only: its D-blocks are a stride-2 multiscale conv producing the
// same channel count the superpixel would.
enum class Downsampling { superpixel, strided };

struct GeneratorSpec {
    std::size_t depth = 4;  // number of D-blocks (= U-blocks)
    std::size_t c0 = 16;
    std::size_t cmax = 128;
    std::size_t patch_length = 8192;
    Downsampling downsampling = Downsampling::superpixel;

    std::size_t channels(std::size_t b) const { return detail::schedule(c0, cmax, b); }
    void validate() const {
        detail::validate_schedule("generator", depth, c0, cmax);
        detail::require(patch_length % (std::size_t{1} << depth) == 0,
                        "generator: patch length " + std::to_string(patch_length) + " not divisible by 2^" +
                            std::to_string(depth));
    }
    bool operator==(const GeneratorSpec&) const = default;
};

struct DiscriminatorSpec {
    std::size_t depth = 4;
    std::size_t c0 = 16;
    std::size_t cmax = 128;
    std::size_t input_length = 8192;

    std::size_t channels(std::size_t b) const { return detail::schedule(c0, cmax, b); }
    std::size_t head_features() const { return 2 * channels(depth - 1) * (input_length >> depth); }
    void validate() const {
        detail::validate_schedule("discriminator", depth, c0, cmax);
        detail::require(input_length % (std::size_t{1} << depth) == 0,
                        "discriminator: input length not divisible by 2^depth");
    }
    bool operator==(const DiscriminatorSpec&) const = default;
};

struct AutoencoderSpec {
    std::size_t depth = 4;
    std::size_t c0 = 16;
    std::size_t cmax = 128;

    std::size_t channels(std::size_t b) const { return detail::schedule(c0, cmax, b); }
    void validate() const { detail::validate_schedule("autoencoder", depth, c0, cmax); }
    bool operator==(const AutoencoderSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Generator
//
// D-block b sees time T/2^b; its input is kept as the stacking skip for the
// mirrored U-block, which restores time T/2^b. Block b's convolution has
// c_b outputs going down and 2*c_b going up. A width-9 conv maps the last
// U-block to one channel and the result is added to the input.

namespace detail {

inline std::size_t generator_skip_channels(const GeneratorSpec& s, std::size_t b) {
    return b == 0 ? 1 : 2 * s.channels(b - 1);
}

inline std::size_t generator_up_in_channels(const GeneratorSpec& s, std::size_t b) {
    if (b + 1 == s.depth) return 2 * s.channels(b);
    return s.channels(b + 1) + generator_skip_channels(s, b + 1);
}

}  // namespace detail

constexpr std::size_t kOutputConvWidth = 9;

template <class T>
ParamMap<T> init_generator(const GeneratorSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    ParamMap<T> p;
    for (std::size_t b = 0; b < spec.depth; ++b) {
        const std::size_t in = detail::generator_skip_channels(spec, b);
        const std::size_t out = spec.downsampling == Downsampling::superpixel ? spec.channels(b) : 2 * spec.channels(b);
        init_multiscale(p, detail::block_name("down", b), in, out, rng);
    }
    for (std::size_t b = spec.depth; b-- > 0;)
        init_multiscale(p, detail::block_name("up", b), detail::generator_up_in_channels(spec, b),
                        2 * spec.channels(b), rng);
    // Zero residual: the untrained generator is exactly the spline baseline.
    p["out.w"] = Tensor<T>({1, spec.channels(0) + 1, kOutputConvWidth});
    p["out.b"] = Tensor<T>({1, 1, 1});
    return p;
}

template <class T>
Var<T> generator_forward(Var<T> x_up, const BoundParams<T>& p, const GeneratorSpec& spec) {
    const Shape s = x_up.shape();
    detail::require(s.channels == 1, "generator: input must have 1 channel");
    detail::require(s.time % (std::size_t{1} << spec.depth) == 0,
                    "generator: length " + std::to_string(s.time) + " not divisible by 2^" + std::to_string(spec.depth));
    std::vector<Var<T>> skips;
    Var<T> h = x_up;
    for (std::size_t b = 0; b < spec.depth; ++b) {
        skips.push_back(h);
        auto conv = bind_multiscale(p, detail::block_name("down", b));
        if (spec.downsampling == Downsampling::superpixel)
            h = d_block(h, BlockParams<T>{conv, 0.0, 2});
        else
            h = relu(multiscale_conv(h, conv, 2));
    }
    for (std::size_t b = spec.depth; b-- > 0;)
        h = u_block(h, skips[b], BlockParams<T>{bind_multiscale(p, detail::block_name("up", b)), 0.0, 2});
    Var<T> residual = conv1d(h, p["out.w"], p["out.b"]);
    return add(x_up, residual);
}

// ---------------------------------------------------------------------------
// Discriminator: (multiscale conv -> superpixel -> LeakyReLU(0.2)) blocks,
// flatten, dense, sigmoid. One probability per batch item, shape (B,1,1).

constexpr double kDiscriminatorSlope = 0.2;

template <class T>
ParamMap<T> init_discriminator(const DiscriminatorSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    ParamMap<T> p;
    for (std::size_t b = 0; b < spec.depth; ++b)
        init_multiscale(p, detail::block_name("down", b), b == 0 ? 1 : 2 * spec.channels(b - 1), spec.channels(b), rng);
    const std::size_t features = spec.head_features();
    p["head.w"] = he_normal<T>({1, features, 1}, features, rng, 1.0);
    p["head.b"] = Tensor<T>({1, 1, 1});
    return p;
}

template <class T>
Var<T> discriminator_forward(Var<T> x, const BoundParams<T>& p, const DiscriminatorSpec& spec) {
    detail::require(x.shape().channels == 1 && x.shape().time == spec.input_length,
                    "discriminator: expected input (B,1," + std::to_string(spec.input_length) + "), got " +
                        to_string(x.shape()));
    Var<T> h = x;
    for (std::size_t b = 0; b < spec.depth; ++b)
        h = d_block(h, BlockParams<T>{bind_multiscale(p, detail::block_name("down", b)), kDiscriminatorSlope, 2});
    return sigmoid(dense(h, p["head.w"], p["head.b"]));
}

// ---------------------------------------------------------------------------
// Autoencoder: the generator without any skip connections. The encoder's
// output is the feature tensor phi.

template <class T>
ParamMap<T> init_autoencoder(const AutoencoderSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    ParamMap<T> p;
    for (std::size_t b = 0; b < spec.depth; ++b)
        init_multiscale(p, detail::block_name("down", b), b == 0 ? 1 : 2 * spec.channels(b - 1), spec.channels(b), rng);
    for (std::size_t b = spec.depth; b-- > 0;) {
        const std::size_t in = b + 1 == spec.depth ? 2 * spec.channels(b) : spec.channels(b + 1);
        init_multiscale(p, detail::block_name("up", b), in, 2 * spec.channels(b), rng);
    }
    p["out.w"] = he_normal<T>({1, spec.channels(0), kOutputConvWidth}, spec.channels(0) * kOutputConvWidth, rng, 1.0);
    p["out.b"] = Tensor<T>({1, 1, 1});
    return p;
}

template <class T>
Var<T> autoencoder_encode(Var<T> x, const BoundParams<T>& p, const AutoencoderSpec& spec) {
    detail::require(x.shape().channels == 1, "autoencoder: input must have 1 channel");
    detail::require(x.shape().time % (std::size_t{1} << spec.depth) == 0,
                    "autoencoder: length " + std::to_string(x.shape().time) + " not divisible by 2^" +
                        std::to_string(spec.depth));
    Var<T> h = x;
    for (std::size_t b = 0; b < spec.depth; ++b)
        h = d_block(h, BlockParams<T>{bind_multiscale(p, detail::block_name("down", b)), 0.0, 2});
    return h;
}

template <class T>
struct AutoencoderOutput {
    Var<T> phi;
    Var<T> reconstruction;
};

template <class T>
AutoencoderOutput<T> autoencoder_forward(Var<T> x, const BoundParams<T>& p, const AutoencoderSpec& spec) {
    Var<T> phi = autoencoder_encode(x, p, spec);
    Var<T> h = phi;
    for (std::size_t b = spec.depth; b-- > 0;)
        h = u_block(h, BlockParams<T>{bind_multiscale(p, detail::block_name("up", b)), 0.0, 2});
    return {phi, conv1d(h, p["out.w"], p["out.b"])};
}

// ---------------------------------------------------------------------------
// Convenience forwards on a non-recording tape.

template <class T>
Tensor<T> run_generator(const ParamMap<T>& params, const GeneratorSpec& spec, const Tensor<T>& x_up) {
    Tape<T> tape(false);
    BoundParams<T> p(tape, params, false);
    return generator_forward(tape.constant(x_up), p, spec).value();
}

template <class T>
Tensor<T> run_discriminator(const ParamMap<T>& params, const DiscriminatorSpec& spec, const Tensor<T>& x) {
    Tape<T> tape(false);
    BoundParams<T> p(tape, params, false);
    return discriminator_forward(tape.constant(x), p, spec).value();
}

template <class T>
Tensor<T> run_encoder(const ParamMap<T>& params, const AutoencoderSpec& spec, const Tensor<T>& x) {
    Tape<T> tape(false);
    BoundParams<T> p(tape, params, false);
    return autoencoder_encode(tape.constant(x), p, spec).value();
}

}  // namespace audiosr
