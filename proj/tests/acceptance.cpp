// Acceptance gate. Runs every criterion at its pinned tolerance and prints
// one PASS/FAIL line per criterion; exits nonzero if any criterion fails.
//
//   acceptance            run all criteria
//   acceptance 2 3 9      run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "audiosr/audiosr.hpp"
#include "support.hpp"

using namespace audiosr;
namespace ts = testing_support;

namespace tol {

constexpr double kGradRelError = 1e-4;
constexpr double kGradStep = 1e-4;
constexpr double kGradSuiteSeconds = 120.0;
constexpr int kShuffleTensors = 1000;
constexpr int kMetricPairs = 100;
constexpr double kMetricOracle = 1e-9;
constexpr double kClosedForm = 1e-6;
constexpr double kLossAlgebra = 1e-12;
constexpr double kDeskSnrMarginDb = 1.0;
constexpr double kDeskSeconds = 15 * 60.0;
constexpr double kAblationLsdSlack = 0.05;
constexpr double kWavLsb = 1.0 / 32768.0;

}  // namespace tol

// Desk-scale experiment shared by criteria 5, 6 and 7.
namespace desk {

constexpr std::size_t kPatch = 512;
constexpr std::size_t kBatch = 8;
constexpr std::uint64_t kSteps = 2000;
constexpr std::uint64_t kAeSteps = 500;
constexpr double kLr = 1e-3;

DatasetSpec data(std::size_t ratio, std::uint64_t seed) {
    DatasetSpec d;
    d.ratio = ratio;
    d.patch_length = kPatch;
    d.patches_per_epoch = 512;
    d.seed = seed;
    d.synth.clips = 24;
    d.synth.clip_length = 16384;
    return d;
}

TrainConfig config(LossMode mode, std::uint64_t seed) {
    TrainConfig c;
    c.generator = GeneratorSpec{2, 16, 128, kPatch};
    c.discriminator = DiscriminatorSpec{2, 8, 64, kPatch};
    c.autoencoder = AutoencoderSpec{2, 8, 32};
    c.batch_size = kBatch;
    c.steps = kSteps;
    c.ae_steps = kAeSteps;
    c.seed = seed;
    c.mode = mode;
    c.adam.lr = kLr;
    return c;
}

struct Run {
    Checkpoint ae;
    Checkpoint gan;
    MetricsReport heldout;
    double seconds = 0;
};

MetricsReport evaluate(const Checkpoint& gan, const Dataset& ds) {
    const ModelState& g = gan.model(kGeneratorName);
    const GeneratorSpec spec = generator_spec_of(g);
    std::vector<ClipMetrics> rows;
    for (const auto* part : {&ds.val, &ds.test})
        for (const auto& cp : *part)
            rows.push_back(evaluate_clip(enhance_upsampled(g.params, spec, cp.x_up), cp.hr, cp.x_up, cp.id));
    return summarize(std::move(rows));
}

Run run(std::size_t ratio, LossMode mode, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = build_dataset(data(ratio, seed), 4);
    const TrainConfig cfg = config(mode, seed);
    Run r;
    if (uses_feature(mode)) r.ae = train_autoencoder(cfg, ds.patches);
    r.gan = train_gan(cfg, ds.patches, uses_feature(mode) ? &r.ae : nullptr);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.heldout = evaluate(r.gan, ds);
    return r;
}

}  // namespace desk

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Finite-difference gradient checks

Outcome gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::map<std::string, double> errs;
    std::mt19937_64 rng(1);
    auto rt = [&](Shape s, double lo = -1, double hi = 1) { return ts::random_tensor(s, rng, lo, hi); };
    auto check = [&](const std::string& name, const ts::LossFn& fn, std::vector<Tensor<double>> in) {
        errs[name] = ts::gradcheck(fn, std::move(in), 256, tol::kGradStep);
    };
    using V = std::vector<Var<double>>;
    using Tp = Tape<double>;

    check("conv1d", [](Tp&, const V& v) { return ts::probe_loss(conv1d(v[0], v[1], v[2])); },
          {rt({2, 3, 16}), rt({5, 3, 9}), rt({5, 1, 1})});
    check("conv1d_stride2", [](Tp&, const V& v) { return ts::probe_loss(conv1d(v[0], v[1], v[2], 2)); },
          {rt({2, 3, 16}), rt({4, 3, 7}), rt({4, 1, 1})});
    check("leaky_relu", [](Tp&, const V& v) { return ts::probe_loss(leaky_relu(v[0], 0.2)); }, {rt({2, 3, 8})});
    check("relu", [](Tp&, const V& v) { return ts::probe_loss(relu(v[0])); }, {rt({2, 3, 8})});
    check("concat", [](Tp&, const V& v) { return ts::probe_loss(concat_channels(v[0], v[1])); },
          {rt({2, 2, 8}), rt({2, 3, 8})});
    check("add_sub", [](Tp&, const V& v) { return ts::probe_loss(sub(add(v[0], v[1]), v[1])); },
          {rt({2, 2, 5}), rt({2, 2, 5})});
    check("scalar_ops", [](Tp&, const V& v) { return ts::probe_loss(add_scalar(mul_scalar(v[0], -1.7), 0.3)); },
          {rt({1, 2, 5})});
    check("mean_square", [](Tp&, const V& v) { return mean_all(square(v[0])); }, {rt({2, 3, 4})});
    check("log", [](Tp&, const V& v) { return mean_all(log(v[0])); }, {rt({2, 1, 6}, 0.2, 2.0)});
    check("sigmoid", [](Tp&, const V& v) { return ts::probe_loss(sigmoid(v[0])); }, {rt({2, 1, 6}, -3, 3)});
    check("clamp_min", [](Tp&, const V& v) { return ts::probe_loss(clamp_min(v[0], 0.1)); }, {rt({2, 1, 16})});
    check("dense", [](Tp&, const V& v) { return ts::probe_loss(dense(v[0], v[1], v[2])); },
          {rt({3, 2, 4}), rt({2, 8, 1}), rt({2, 1, 1})});
    check("superpixel", [](Tp&, const V& v) { return ts::probe_loss(superpixel(v[0], 2)); }, {rt({2, 2, 8})});
    check("subpixel", [](Tp&, const V& v) { return ts::probe_loss(subpixel(v[0], 2)); }, {rt({2, 4, 4})});
    check("l2_loss", [](Tp&, const V& v) { return l2_loss(v[0], v[1]); }, {rt({2, 1, 8}), rt({2, 1, 8})});
    check("feature_loss", [](Tp&, const V& v) { return feature_loss(v[0], v[1]); }, {rt({2, 4, 2}), rt({2, 4, 2})});
    check("adversarial_loss", [](Tp&, const V& v) { return adversarial_loss_g(sigmoid(v[0])); }, {rt({3, 1, 1})});
    check("discriminator_loss",
          [](Tp&, const V& v) { return discriminator_loss(sigmoid(v[0]), sigmoid(v[1])); },
          {rt({3, 1, 1}), rt({3, 1, 1})});

    auto check_net = [&](const std::string& name, ParamMap<double> params, const ts::ParamLossFn& fn) {
        errs[name] = ts::worst(ts::gradcheck_params(fn, std::move(params), 64, tol::kGradStep));
    };
    {
        std::mt19937_64 r(2);
        ParamMap<double> p;
        init_multiscale(p, "m", 2, 8, r);
        check_net("multiscale_conv", p, [](Tp& t, const BoundParams<double>& bp) {
            std::mt19937_64 q(3);
            return ts::probe_loss(multiscale_conv(t.constant(ts::random_tensor({2, 2, 16}, q)), bind_multiscale(bp, "m")));
        });
        ParamMap<double> blocks;
        init_multiscale(blocks, "d", 2, 4, r);
        init_multiscale(blocks, "u", 8, 8, r);
        check_net("d_block_u_block", blocks, [](Tp& t, const BoundParams<double>& bp) {
            std::mt19937_64 q(4);
            auto x = t.constant(ts::random_tensor({2, 2, 16}, q));
            auto h = d_block(x, BlockParams<double>{bind_multiscale(bp, "d"), 0.2, 2});
            return ts::probe_loss(u_block(h, x, BlockParams<double>{bind_multiscale(bp, "u"), 0.0, 2}));
        });
    }
    {
        const GeneratorSpec gs{2, 4, 8, 16};
        std::mt19937_64 r(5);
        auto p = init_generator<double>(gs, r);
        for (auto& v : p.at("out.w").storage()) v = std::uniform_real_distribution<double>(-0.3, 0.3)(r);
        check_net("generator", p, [gs](Tp& t, const BoundParams<double>& bp) {
            std::mt19937_64 q(6);
            return ts::probe_loss(generator_forward(t.constant(ts::random_tensor({2, 1, 16}, q)), bp, gs));
        });
    }
    {
        const DiscriminatorSpec ds{2, 4, 8, 16};
        std::mt19937_64 r(7);
        check_net("discriminator", init_discriminator<double>(ds, r), [ds](Tp& t, const BoundParams<double>& bp) {
            std::mt19937_64 q(8);
            return mean_all(log(discriminator_forward(t.constant(ts::random_tensor({2, 1, 16}, q)), bp, ds)));
        });
    }
    {
        const AutoencoderSpec as{2, 4, 8};
        std::mt19937_64 r(9);
        check_net("autoencoder", init_autoencoder<double>(as, r), [as](Tp& t, const BoundParams<double>& bp) {
            std::mt19937_64 q(10);
            return ts::probe_loss(
                autoencoder_forward(t.constant(ts::random_tensor({2, 1, 16}, q)), bp, as).reconstruction);
        });
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto worst = std::max_element(errs.begin(), errs.end(), [](auto& a, auto& b) { return a.second < b.second; });
    const bool pass = worst->second < tol::kGradRelError && secs < tol::kGradSuiteSeconds;
    return {pass, fmt("%zu checks, worst %s rel err %.2e (< %.0e); %.1f s (< %.0f s)", errs.size(),
                      worst->first.c_str(), worst->second, tol::kGradRelError, secs, tol::kGradSuiteSeconds)};
}

// ---------------------------------------------------------------------------
// 2. Shuffle inversion

Outcome shuffle_inversion() {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim(1, 6);
    int failures = 0;
    for (int i = 0; i < tol::kShuffleTensors; ++i) {
        const std::size_t r = i % 2 ? 4 : 2;
        const Shape s{dim(rng), dim(rng), r * dim(rng)};
        const Tensor<double> x = ts::random_tensor(s, rng, -1e3, 1e3);
        Tape<double> tape(false);
        if (subpixel(superpixel(tape.constant(x), r), r).value() != x) ++failures;
    }
    return {failures == 0, fmt("%d of %d random tensors (r in {2,4}) not restored bit-exactly", failures,
                               tol::kShuffleTensors)};
}

// ---------------------------------------------------------------------------
// 3. Metric oracles

double loop_snr(const std::vector<double>& x, const std::vector<double>& ref) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += ref[i] * ref[i];
        den += (x[i] - ref[i]) * (x[i] - ref[i]);
    }
    return 10.0 * std::log10(num / den);
}

// Direct DFT per 2048-sample window; twiddles are tabulated once.
double loop_lsd(const std::vector<double>& x, const std::vector<double>& ref) {
    constexpr std::size_t n = 2048, bins = n / 2 + 1;
    static const auto table = [] {
        std::vector<double> c(n), s(n);
        for (std::size_t i = 0; i < n; ++i) {
            c[i] = std::cos(2 * std::numbers::pi * i / n);
            s[i] = -std::sin(2 * std::numbers::pi * i / n);
        }
        return std::pair{c, s};
    }();
    auto power = [&](const std::vector<double>& v, std::size_t off, std::size_t k) {
        double re = 0, im = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t idx = (k * t) % n;
            re += v[off + t] * table.first[idx];
            im += v[off + t] * table.second[idx];
        }
        return re * re + im * im;
    };
    const std::size_t windows = x.size() / n;
    double total = 0;
    for (std::size_t w = 0; w < windows; ++w) {
        double acc = 0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double d = std::log10(std::max(power(x, w * n, k), 1e-10) / std::max(power(ref, w * n, k), 1e-10));
            acc += d * d;
        }
        total += std::sqrt(acc / bins);
    }
    return total / windows;
}

Outcome metric_oracles() {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd(0, 1);
    std::uniform_int_distribution<std::size_t> len(2048, 2048 * 2 + 700);
    double worst_snr = 0, worst_lsd = 0;
    for (int i = 0; i < tol::kMetricPairs; ++i) {
        const std::size_t n = len(rng);
        Waveform x{std::vector<double>(n)}, ref{std::vector<double>(n)};
        const double noise = std::exp(std::uniform_real_distribution<double>(-5, 1)(rng));
        for (std::size_t t = 0; t < n; ++t) {
            ref.samples[t] = nd(rng);
            x.samples[t] = ref.samples[t] + noise * nd(rng);
        }
        worst_snr = std::max(worst_snr, std::abs(snr(x, ref) - loop_snr(x.samples, ref.samples)));
        worst_lsd = std::max(worst_lsd, std::abs(lsd(x, ref) - loop_lsd(x.samples, ref.samples)));
    }
    Waveform ref{std::vector<double>(4096)};
    for (auto& v : ref.samples) v = nd(rng);
    Waveform x10 = ref;
    for (auto& v : x10.samples) v *= 10.0;
    const double lsd100 = lsd(x10, ref);
    const double snr4 = snr(Waveform{{1, 0, 0, 0}}, Waveform{{2, 0, 0, 0}});
    const double snr_same = snr(ref, ref), lsd_same = lsd(ref, ref);
    const bool closed = std::abs(lsd100 - 2.0) <= tol::kClosedForm &&
                        std::abs(snr4 - 10 * std::log10(4.0)) <= tol::kClosedForm &&
                        std::abs(snr4 - 6.0206) <= 1e-4 && snr_same == metrics::kSnrCapDb && lsd_same == 0.0;
    const bool pass = worst_snr <= tol::kMetricOracle && worst_lsd <= tol::kMetricOracle && closed;
    return {pass, fmt("%d pairs: max |snr - oracle| %.1e, max |lsd - oracle| %.1e (<= %.0e); lsd(x10)=%.9f, "
                      "snr(E=4)=%.6f dB, exact match snr=%g lsd=%g",
                      tol::kMetricPairs, worst_snr, worst_lsd, tol::kMetricOracle, lsd100, snr4, snr_same, lsd_same)};
}

// ---------------------------------------------------------------------------
// 4. Loss algebra and gradient contracts

Outcome loss_algebra() {
    std::mt19937_64 rng(13);
    Tape<double> tape;
    auto xh = tape.constant(ts::random_tensor({2, 1, 16}, rng));
    auto g = tape.constant(ts::random_tensor({2, 1, 16}, rng));
    auto ph = tape.constant(ts::random_tensor({2, 4, 4}, rng));
    auto pg = tape.constant(ts::random_tensor({2, 4, 4}, rng));
    auto d = tape.constant(ts::random_tensor({2, 1, 1}, rng, 0.05, 0.95));
    const LossWeights w{1.0, 0.001};
    const double total = generator_loss(xh, g, ph, pg, d, w).total.value().item();
    const double manual = l2_loss(xh, g).value().item() + 1.0 * feature_loss(ph, pg).value().item() +
                          0.001 * adversarial_loss_g(d).value().item();
    auto s = [&](double v) { return tape.constant(Tensor<double>({1, 1, 1}, {v})); };
    const double example = combine_generator_loss(s(1.0), s(2.0), s(0.693), w).value().item();
    const double algebra_err = std::max(std::abs(total - manual), std::abs(example - 3.000693));

    // frozen A: nothing reaches the autoencoder through the feature term
    const GeneratorSpec gs{2, 4, 8, 16};
    const AutoencoderSpec as{2, 4, 8};
    const DiscriminatorSpec ds{2, 4, 8, 16};
    auto gp = init_generator<double>(gs, rng);
    for (auto& v : gp.at("out.w").storage()) v = 0.1;
    const auto ap = init_autoencoder<double>(as, rng);
    const auto dp = init_discriminator<double>(ds, rng);
    const auto xu = ts::random_tensor({2, 1, 16}, rng), xhv = ts::random_tensor({2, 1, 16}, rng);
    double a_grad = 0, g_grad_feat = 0;
    {
        Tape<double> t;
        BoundParams<double> G(t, gp, true), A(t, ap, false);
        auto out = generator_forward(t.constant(xu), G, gs);
        t.backward(feature_loss(autoencoder_encode(t.constant(xhv), A, as), autoencoder_encode(out, A, as)));
        for (const auto& [n, gr] : A.grads())
            for (double v : gr.storage()) a_grad = std::max(a_grad, std::abs(v));
        for (const auto& [n, gr] : G.grads())
            for (double v : gr.storage()) g_grad_feat = std::max(g_grad_feat, std::abs(v));
    }
    // detached G: the D loss sends nothing back into the generator
    double g_grad_d = 0, d_grad = 0;
    {
        Tape<double> t;
        BoundParams<double> G(t, gp, true), D(t, dp, true);
        auto fake = t.detach(generator_forward(t.constant(xu), G, gs));
        t.backward(discriminator_loss(discriminator_forward(t.constant(xhv), D, ds), discriminator_forward(fake, D, ds)));
        for (const auto& [n, gr] : G.grads())
            for (double v : gr.storage()) g_grad_d = std::max(g_grad_d, std::abs(v));
        for (const auto& [n, gr] : D.grads())
            for (double v : gr.storage()) d_grad = std::max(d_grad, std::abs(v));
    }
    const bool pass = algebra_err <= tol::kLossAlgebra && a_grad == 0.0 && g_grad_d == 0.0 && g_grad_feat > 0.0 &&
                      d_grad > 0.0;
    return {pass, fmt("composition err %.1e (<= %.0e); max |dL_f/dA| = %g (G receives %.2e); max |dL_D/dG| = %g "
                      "(D receives %.2e)",
                      algebra_err, tol::kLossAlgebra, a_grad, g_grad_feat, g_grad_d, d_grad)};
}

// ---------------------------------------------------------------------------
// 5. Desk-scale training

std::optional<desk::Run> g_desk_run;

const desk::Run& desk_run() {
    if (!g_desk_run) g_desk_run = desk::run(2, LossMode::l2_feature_adv, 1);
    return *g_desk_run;
}

Outcome desk_training() {
    const auto& r = desk_run();
    const auto& h = r.heldout;
    const bool pass = h.snr_db >= h.baseline_snr_db + tol::kDeskSnrMarginDb && h.lsd < h.baseline_lsd &&
                      r.seconds < tol::kDeskSeconds;
    return {pass, fmt("l2+f+adv, R=2, %zu held-out clips: snr %.2f dB vs spline %.2f dB (need +%.1f); "
                      "lsd %.4f vs spline %.4f; %.0f s (< %.0f s)",
                      h.clips.size(), h.snr_db, h.baseline_snr_db, tol::kDeskSnrMarginDb, h.lsd, h.baseline_lsd,
                      r.seconds, tol::kDeskSeconds)};
}

// ---------------------------------------------------------------------------
// 6. Ablation: feature loss does not hurt LSD

Outcome ablation() {
    std::vector<double> diffs;
    std::string per_seed;
    for (std::uint64_t seed : {1, 2, 3}) {
        const double l2 = desk::run(4, LossMode::l2, seed).heldout.lsd;
        const double lf = desk::run(4, LossMode::l2_feature, seed).heldout.lsd;
        diffs.push_back(lf - l2);
        per_seed += fmt(" seed %llu: l2 %.4f, l2+f %.4f;", static_cast<unsigned long long>(seed), l2, lf);
    }
    std::sort(diffs.begin(), diffs.end());
    const double median = diffs[1];
    return {median <= tol::kAblationLsdSlack,
            fmt("R=4 median lsd(l2+f) - lsd(l2) = %+.4f (<= %.2f);%s", median, tol::kAblationLsdSlack,
                per_seed.c_str())};
}

// ---------------------------------------------------------------------------
// 7. Determinism across a resume boundary

Outcome determinism() {
    const auto& first = desk_run();
    const Dataset ds = build_dataset(desk::data(2, 1), 4);
    const TrainConfig cfg = desk::config(LossMode::l2_feature_adv, 1);
    const Checkpoint ae = train_autoencoder(cfg, ds.patches);
    TrainOptions part;
    part.stop_at = desk::kSteps / 2;
    const Checkpoint half = train_gan(cfg, ds.patches, &ae, part);
    // through the byte format, as a restarted process would see it
    const Checkpoint reloaded = decode_checkpoint(encode_checkpoint(half));
    TrainOptions rest;
    rest.resume = &reloaded;
    const Checkpoint second = train_gan(cfg, ds.patches, nullptr, rest);
    const bool ae_same = encode_checkpoint(ae) == encode_checkpoint(first.ae);
    const bool gan_same = encode_checkpoint(second) == encode_checkpoint(first.gan);
    return {ae_same && gan_same, fmt("autoencoder checkpoints %s; GAN checkpoint resumed at step %llu %s the "
                                     "uninterrupted run (%zu bytes)",
                                     ae_same ? "identical" : "DIFFER", static_cast<unsigned long long>(half.step),
                                     gan_same ? "identical to" : "DIFFERS from", encode_checkpoint(second).size())};
}

// ---------------------------------------------------------------------------
// 8. Superpixel timing report (informational)

Outcome timing_report() {
    BenchConfig b;
    b.generator = GeneratorSpec{2, 16, 128, 2048};
    b.steps = 10;
    const BenchReport r = bench_superpixel(b);
    std::ostringstream os;
    write_bench_report(os, r);
    std::cout << os.str();
    const bool emitted = r.superpixel.step_ms.size() == b.steps && r.strided.step_ms.size() == b.steps;
    return {emitted, fmt("informational: median superpixel %.1f ms, strided %.1f ms per step, saving %+.1f%%",
                         r.superpixel.median_ms, r.strided.median_ms, 100.0 * r.saving())};
}

// ---------------------------------------------------------------------------
// 9. I/O round trips

Outcome io_round_trips() {
    const auto dir = std::filesystem::temp_directory_path() / "audiosr_acceptance";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Waveform w{std::vector<double>(10000), 16000};
    for (auto& v : w.samples) v = u(rng);
    write_wav(dir / "rt.wav", w);
    const Waveform back = read_wav(dir / "rt.wav");
    double worst = 0;
    for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]));
    const bool wav_ok = back.size() == w.size() && worst <= tol::kWavLsb;

    TrainConfig cfg = desk::config(LossMode::l2_feature_adv, 5);
    cfg.generator = GeneratorSpec{2, 8, 16, 64};
    cfg.discriminator = DiscriminatorSpec{2, 4, 8, 64};
    cfg.autoencoder = AutoencoderSpec{2, 4, 8};
    cfg.batch_size = 4;
    cfg.steps = cfg.ae_steps = 3;
    DatasetSpec ds = desk::data(2, 5);
    ds.patch_length = 64;
    ds.patches_per_epoch = 16;
    const auto pool = build_dataset(ds).patches;
    const Checkpoint ae = train_autoencoder(cfg, pool);
    const Checkpoint gan = train_gan(cfg, pool, &ae);
    save_checkpoint(dir / "rt.mugn", gan);
    const Checkpoint loaded = load_checkpoint(dir / "rt.mugn");
    const auto original = encode_checkpoint(gan);
    const bool ckpt_ok = loaded == gan && encode_checkpoint(loaded) == original;
    return {wav_ok && ckpt_ok, fmt("wav max error %.2e (<= 1 LSB = %.2e); checkpoint %zu bytes %s", worst,
                                   tol::kWavLsb, original.size(), ckpt_ok ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, gradient_suite}, {2, shuffle_inversion}, {3, metric_oracles}, {4, loss_algebra},   {5, desk_training},
        {6, ablation},       {7, determinism},       {8, timing_report},  {9, io_round_trips},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
