#pragma once

// Training-step timing of the superpixel generator against the same model
// with stride-2 convolutions in its D-blocks.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "audiosr/adam.hpp"
#include "audiosr/models.hpp"
#include "audiosr/training.hpp"

namespace audiosr {

struct BenchConfig {
    GeneratorSpec generator{2, 16, 128, 2048, Downsampling::superpixel};
    std::size_t batch_size = 8;
    std::size_t warmup_steps = 2;
    std::size_t steps = 10;
    std::uint64_t seed = 1;
};

struct VariantTiming {
    std::vector<double> step_ms;
    double median_ms = 0;
};

struct BenchReport {
    VariantTiming superpixel;
    VariantTiming strided;
    // Fraction of the strided step time saved by the superpixel variant.
    double saving() const { return 1.0 - superpixel.median_ms / strided.median_ms; }
};

namespace detail {

inline VariantTiming time_variant(GeneratorSpec spec, Downsampling mode, const BenchConfig& cfg) {
    spec.downsampling = mode;
    std::mt19937_64 rng(cfg.seed);
    ParamMap<float> params = init_generator<float>(spec, rng);
    AdamState<float> adam = make_adam(params);
    Tensor<float> x_up({cfg.batch_size, 1, spec.patch_length}), x_h({cfg.batch_size, 1, spec.patch_length});
    std::normal_distribution<float> nd(0.0f, 0.1f);
    for (auto& v : x_up.storage()) v = nd(rng);
    for (auto& v : x_h.storage()) v = nd(rng);
    GeneratorObjective<float> obj;
    VariantTiming out;
    for (std::size_t s = 0; s < cfg.warmup_steps + cfg.steps; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        auto g = generator_gradients(params, spec, x_up, x_h, obj);
        adam_step(params, g.grads, adam);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (s >= cfg.warmup_steps) out.step_ms.push_back(ms);
    }
    std::vector<double> sorted = out.step_ms;
    std::sort(sorted.begin(), sorted.end());
    out.median_ms = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    return out;
}

}  // namespace detail

inline BenchReport bench_superpixel(const BenchConfig& cfg) {
    cfg.generator.validate();
    if (cfg.steps == 0 || cfg.batch_size == 0) throw ConfigError("bench: steps and batch size must be positive");
    return BenchReport{detail::time_variant(cfg.generator, Downsampling::superpixel, cfg),
                       detail::time_variant(cfg.generator, Downsampling::strided, cfg)};
}

inline void write_bench_report(std::ostream& os, const BenchReport& r) {
    for (std::size_t i = 0; i < r.superpixel.step_ms.size(); ++i)
        os << "step=" << i + 1 << " superpixel_ms=" << r.superpixel.step_ms[i]
           << " strided_ms=" << r.strided.step_ms[i] << '\n';
    os << "median superpixel_ms=" << r.superpixel.median_ms << " strided_ms=" << r.strided.median_ms
       << " saving=" << 100.0 * r.saving() << "%\n";
}

}  // namespace audiosr
