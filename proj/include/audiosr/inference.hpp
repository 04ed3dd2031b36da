#pragma once

// Full-clip super-resolution. The LR clip is spline-upsampled, reflect-padded
// by half a patch on each side and tiled into patch-length windows with 50%
// overlap. Each window's residual G(x) - x is weighted by a triangular ramp
// and the weighted residuals are normalized by the ramp sum, so adjacent
// windows cross-fade linearly. The output is the spline signal plus the
// blended residual.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "audiosr/checkpoint.hpp"
#include "audiosr/dsp.hpp"
#include "audiosr/models.hpp"
#include "audiosr/training.hpp"

namespace audiosr {

// Weight of sample t in a window of length 2*hop.
inline double crossfade_weight(std::size_t t, std::size_t hop) {
    const double u = static_cast<double>(t) + 0.5;
    return t < hop ? u / static_cast<double>(hop) : (2.0 * static_cast<double>(hop) - u) / static_cast<double>(hop);
}

inline Waveform enhance_upsampled(const ParamMap<float>& g, const GeneratorSpec& spec, const Waveform& x_up,
                                  std::size_t windows_per_batch = 8) {
    const std::size_t P = spec.patch_length;
    const std::size_t n = x_up.size();
    if (P < 2 || P % 2 != 0) throw std::invalid_argument("inference: patch length must be even");
    if (n < P)
        throw std::invalid_argument("inference: upsampled clip has " + std::to_string(n) +
                                    " samples, shorter than one " + std::to_string(P) + "-sample patch");
    const std::size_t hop = P / 2;
    const std::size_t windows = (n + hop - 1) / hop + 1;
    const std::size_t padded = (windows + 1) * hop;

    std::vector<float> xp(padded);
    for (std::size_t i = 0; i < padded; ++i)
        xp[i] = static_cast<float>(
            x_up.samples[dsp::reflect_index(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(hop), n)]);

    std::vector<double> acc(padded, 0.0), wsum(padded, 0.0);
    for (std::size_t first = 0; first < windows; first += windows_per_batch) {
        const std::size_t count = std::min(windows_per_batch, windows - first);
        Tensor<float> batch({count, 1, P});
        for (std::size_t k = 0; k < count; ++k)
            std::copy_n(xp.begin() + static_cast<std::ptrdiff_t>((first + k) * hop), P, batch.row(k, 0).begin());
        const Tensor<float> y = run_generator(g, spec, batch);
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t off = (first + k) * hop;
            for (std::size_t t = 0; t < P; ++t) {
                const double w = crossfade_weight(t, hop);
                acc[off + t] += w * static_cast<double>(y.at(k, 0, t) - batch.at(k, 0, t));
                wsum[off + t] += w;
            }
        }
    }

    Waveform out = x_up;
    for (std::size_t i = 0; i < n; ++i) out.samples[i] += acc[i + hop] / wsum[i + hop];
    return out;
}

// Output length is R times the input length.
inline AudioClip infer(const ParamMap<float>& g, const GeneratorSpec& spec, const AudioClip& lr, std::size_t ratio) {
    if (ratio < 2) throw std::invalid_argument("inference: ratio must be >= 2");
    return enhance_upsampled(g, spec, dsp::spline_upsample(lr, ratio));
}

inline AudioClip infer(const Checkpoint& c, const AudioClip& lr, std::size_t ratio) {
    const ModelState& g = c.model(kGeneratorName);
    return infer(g.params, generator_spec_of(g), lr, ratio);
}

}  // namespace audiosr
