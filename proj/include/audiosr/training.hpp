#pragma once

// Autoencoder pretraining and alternating GAN training.
//
// Every source of randomness is derived from TrainConfig::seed: parameter
// initialization draws from seeded engines and batch composition is a pure
// function of (seed, global step). Together with single-threaded kernels this
// makes a run bit-reproducible, including across checkpoint/resume.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "audiosr/adam.hpp"
#include "audiosr/checkpoint.hpp"
#include "audiosr/config.hpp"
#include "audiosr/dataset.hpp"
#include "audiosr/error.hpp"
#include "audiosr/models.hpp"
#include "audiosr/objectives.hpp"

namespace audiosr {

enum class LossMode { l2, l2_feature, l2_feature_adv };

inline std::string to_string(LossMode m) {
    switch (m) {
        case LossMode::l2: return "l2";
        case LossMode::l2_feature: return "l2+f";
        case LossMode::l2_feature_adv: return "l2+f+adv";
    }
    return "?";
}

inline LossMode parse_loss_mode(const std::string& s) {
    if (s == "l2") return LossMode::l2;
    if (s == "l2+f") return LossMode::l2_feature;
    if (s == "l2+f+adv") return LossMode::l2_feature_adv;
    throw ConfigError("unknown mode '" + s + "' (expected l2, l2+f or l2+f+adv)");
}

inline bool uses_feature(LossMode m) { return m != LossMode::l2; }
inline bool uses_adversarial(LossMode m) { return m == LossMode::l2_feature_adv; }

struct TrainConfig {
    GeneratorSpec generator;
    DiscriminatorSpec discriminator;
    AutoencoderSpec autoencoder;
    LossWeights weights;
    AdamConfig adam;
    std::size_t batch_size = 32;
    std::size_t epochs = 150;
    std::size_t ae_epochs = 400;
    // Explicit step budgets; when unset the epoch counts decide.
    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> ae_steps;
    std::uint64_t seed = 1;
    std::uint64_t checkpoint_every = 0;  // 0: only the final checkpoint
    std::uint64_t log_every = 1;
    LossMode mode = LossMode::l2_feature_adv;

    void validate() const {
        generator.validate();
        autoencoder.validate();
        if (uses_adversarial(mode)) {
            discriminator.validate();
            if (discriminator.input_length != generator.patch_length)
                throw ConfigError("discriminator input length must equal the generator patch length");
        }
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (!(adam.lr > 0) || !(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) ||
            !(adam.eps > 0))
            throw ConfigError("invalid ADAM hyperparameters");
        if (!(weights.lambda_f >= 0) || !(weights.lambda_adv >= 0))
            throw ConfigError("loss weights must be non-negative");
        if (log_every == 0) throw ConfigError("log_every must be positive");
    }

    std::uint64_t steps_for(std::size_t pool_size) const {
        if (steps) return *steps;
        return static_cast<std::uint64_t>(epochs) * (pool_size / batch_size);
    }
    std::uint64_t ae_steps_for(std::size_t pool_size) const {
        if (ae_steps) return *ae_steps;
        return static_cast<std::uint64_t>(ae_epochs) * (pool_size / batch_size);
    }
};

inline const std::set<std::string>& train_config_keys() {
    static const std::set<std::string> keys{
        "g_depth",   "g_c0",       "g_cmax",     "d_depth",    "d_c0",       "d_cmax", "a_depth",
        "a_c0",      "a_cmax",     "lambda_f",   "lambda_adv", "lr",         "beta1",  "beta2",
        "eps",       "batch_size", "epochs",     "ae_epochs",  "steps",      "ae_steps", "checkpoint_every",
        "log_every", "mode",       "downsampling"};
    return keys;
}

// Model sizes follow the dataset's patch length; the seed is shared with it.
inline TrainConfig train_config_from(const KeyValueConfig& c, const DatasetSpec& data) {
    TrainConfig t;
    t.generator.depth = c.get_uint("g_depth", t.generator.depth);
    t.generator.c0 = c.get_uint("g_c0", t.generator.c0);
    t.generator.cmax = c.get_uint("g_cmax", t.generator.cmax);
    t.generator.patch_length = data.patch_length;
    const std::string ds = c.get_string("downsampling", "superpixel");
    if (ds == "superpixel")
        t.generator.downsampling = Downsampling::superpixel;
    else if (ds == "strided")
        t.generator.downsampling = Downsampling::strided;
    else
        throw ConfigError("downsampling must be 'superpixel' or 'strided'");
    t.discriminator.depth = c.get_uint("d_depth", t.discriminator.depth);
    t.discriminator.c0 = c.get_uint("d_c0", t.discriminator.c0);
    t.discriminator.cmax = c.get_uint("d_cmax", t.discriminator.cmax);
    t.discriminator.input_length = data.patch_length;
    t.autoencoder.depth = c.get_uint("a_depth", t.autoencoder.depth);
    t.autoencoder.c0 = c.get_uint("a_c0", t.autoencoder.c0);
    t.autoencoder.cmax = c.get_uint("a_cmax", t.autoencoder.cmax);
    t.weights.lambda_f = c.get_double("lambda_f", t.weights.lambda_f);
    t.weights.lambda_adv = c.get_double("lambda_adv", t.weights.lambda_adv);
    t.adam.lr = c.get_double("lr", t.adam.lr);
    t.adam.beta1 = c.get_double("beta1", t.adam.beta1);
    t.adam.beta2 = c.get_double("beta2", t.adam.beta2);
    t.adam.eps = c.get_double("eps", t.adam.eps);
    t.batch_size = c.get_uint("batch_size", t.batch_size);
    t.epochs = c.get_uint("epochs", t.epochs);
    t.ae_epochs = c.get_uint("ae_epochs", t.ae_epochs);
    if (c.has("steps")) t.steps = c.get_uint("steps", 0);
    if (c.has("ae_steps")) t.ae_steps = c.get_uint("ae_steps", 0);
    t.checkpoint_every = c.get_uint("checkpoint_every", t.checkpoint_every);
    t.log_every = c.get_uint("log_every", t.log_every);
    t.mode = parse_loss_mode(c.get_string("mode", to_string(t.mode)));
    t.seed = data.seed;
    return t;
}

// ---------------------------------------------------------------------------
// Architecture records stored with each model.

inline std::map<std::string, std::int64_t> arch_of(const GeneratorSpec& s) {
    return {{"depth", static_cast<std::int64_t>(s.depth)},
            {"c0", static_cast<std::int64_t>(s.c0)},
            {"cmax", static_cast<std::int64_t>(s.cmax)},
            {"patch_length", static_cast<std::int64_t>(s.patch_length)},
            {"strided", s.downsampling == Downsampling::strided ? 1 : 0}};
}

inline std::map<std::string, std::int64_t> arch_of(const DiscriminatorSpec& s) {
    return {{"depth", static_cast<std::int64_t>(s.depth)},
            {"c0", static_cast<std::int64_t>(s.c0)},
            {"cmax", static_cast<std::int64_t>(s.cmax)},
            {"input_length", static_cast<std::int64_t>(s.input_length)}};
}

inline std::map<std::string, std::int64_t> arch_of(const AutoencoderSpec& s) {
    return {{"depth", static_cast<std::int64_t>(s.depth)},
            {"c0", static_cast<std::int64_t>(s.c0)},
            {"cmax", static_cast<std::int64_t>(s.cmax)}};
}

namespace detail {

inline std::size_t arch_field(const ModelState& m, const char* key) {
    auto it = m.arch.find(key);
    if (it == m.arch.end() || it->second < 0)
        throw FormatError("checkpoint model '" + m.name + "' lacks architecture field '" + key + "'");
    return static_cast<std::size_t>(it->second);
}

inline std::string rng_state(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

}  // namespace detail

inline GeneratorSpec generator_spec_of(const ModelState& m) {
    GeneratorSpec s;
    s.depth = detail::arch_field(m, "depth");
    s.c0 = detail::arch_field(m, "c0");
    s.cmax = detail::arch_field(m, "cmax");
    s.patch_length = detail::arch_field(m, "patch_length");
    s.downsampling = detail::arch_field(m, "strided") ? Downsampling::strided : Downsampling::superpixel;
    return s;
}

inline DiscriminatorSpec discriminator_spec_of(const ModelState& m) {
    DiscriminatorSpec s;
    s.depth = detail::arch_field(m, "depth");
    s.c0 = detail::arch_field(m, "c0");
    s.cmax = detail::arch_field(m, "cmax");
    s.input_length = detail::arch_field(m, "input_length");
    return s;
}

inline AutoencoderSpec autoencoder_spec_of(const ModelState& m) {
    AutoencoderSpec s;
    s.depth = detail::arch_field(m, "depth");
    s.c0 = detail::arch_field(m, "c0");
    s.cmax = detail::arch_field(m, "cmax");
    return s;
}

constexpr const char* kGeneratorName = "generator";
constexpr const char* kDiscriminatorName = "discriminator";
constexpr const char* kAutoencoderName = "autoencoder";

// Fresh (step 0) checkpoints.
inline Checkpoint init_autoencoder_checkpoint(const TrainConfig& cfg) {
    std::mt19937_64 rng(cfg.seed ^ 0xa0e0c0d3ULL);
    Checkpoint c;
    ModelState a{kAutoencoderName, arch_of(cfg.autoencoder), init_autoencoder<float>(cfg.autoencoder, rng), {}};
    a.adam = make_adam(a.params, cfg.adam);
    c.rng_state = detail::rng_state(rng);
    c.meta = {{"kind", "autoencoder"}, {"seed", std::to_string(cfg.seed)}};
    c.models.push_back(std::move(a));
    return c;
}

inline Checkpoint init_gan_checkpoint(const TrainConfig& cfg, const Checkpoint* ae) {
    std::mt19937_64 rng(cfg.seed);
    Checkpoint c;
    ModelState g{kGeneratorName, arch_of(cfg.generator), init_generator<float>(cfg.generator, rng), {}};
    g.adam = make_adam(g.params, cfg.adam);
    c.models.push_back(std::move(g));
    if (uses_adversarial(cfg.mode)) {
        ModelState d{kDiscriminatorName, arch_of(cfg.discriminator),
                     init_discriminator<float>(cfg.discriminator, rng), {}};
        d.adam = make_adam(d.params, cfg.adam);
        c.models.push_back(std::move(d));
    }
    if (uses_feature(cfg.mode)) {
        if (!ae || !ae->has_model(kAutoencoderName))
            throw ConfigError("mode " + to_string(cfg.mode) + " needs a pretrained autoencoder checkpoint");
        const ModelState& a = ae->model(kAutoencoderName);
        if (autoencoder_spec_of(a) != cfg.autoencoder)
            throw ConfigError("autoencoder checkpoint architecture does not match the configuration");
        c.models.push_back(a);
    }
    c.rng_state = detail::rng_state(rng);
    c.meta = {{"kind", "gan"}, {"mode", to_string(cfg.mode)}, {"seed", std::to_string(cfg.seed)}};
    return c;
}

// ---------------------------------------------------------------------------
// Single steps

struct StepLosses {
    double loss_g = 0;
    double l2 = 0;
    double feature = 0;
    double adversarial = 0;
    double loss_d = 0;
};

// Networks other than G that enter its objective; null pointers drop the term.
template <class T>
struct GeneratorObjective {
    LossMode mode = LossMode::l2;
    LossWeights weights;
    const ParamMap<T>* autoencoder = nullptr;
    AutoencoderSpec autoencoder_spec;
    const ParamMap<T>* discriminator = nullptr;
    DiscriminatorSpec discriminator_spec;
};

template <class T>
struct GeneratorGradients {
    ParamMap<T> grads;
    GeneratorLoss<T> loss;  // Vars valid only while `tape` lives
    std::unique_ptr<Tape<T>> tape;
    Tensor<T> output;
};

// Gradient of the generator objective with respect to G only. A and D are
// bound as constants, so nothing accumulates for them.
template <class T>
GeneratorGradients<T> generator_gradients(const ParamMap<T>& g_params, const GeneratorSpec& g_spec,
                                          const Tensor<T>& x_up, const Tensor<T>& x_h,
                                          const GeneratorObjective<T>& obj) {
    GeneratorGradients<T> out;
    out.tape = std::make_unique<Tape<T>>(true);
    Tape<T>& tape = *out.tape;
    BoundParams<T> g(tape, g_params, true);
    Var<T> xu = tape.constant(x_up);
    Var<T> xh = tape.constant(x_h);
    Var<T> fake = generator_forward(xu, g, g_spec);
    Var<T> phi_h, phi_g, d_fake;
    if (uses_feature(obj.mode)) {
        detail::require(obj.autoencoder != nullptr, "feature loss without an autoencoder");
        BoundParams<T> a(tape, *obj.autoencoder, false);
        phi_h = autoencoder_encode(xh, a, obj.autoencoder_spec);
        phi_g = autoencoder_encode(fake, a, obj.autoencoder_spec);
    }
    if (uses_adversarial(obj.mode)) {
        detail::require(obj.discriminator != nullptr, "adversarial loss without a discriminator");
        BoundParams<T> d(tape, *obj.discriminator, false);
        d_fake = discriminator_forward(fake, d, obj.discriminator_spec);
    }
    out.loss = generator_loss(xh, fake, phi_h, phi_g, d_fake, obj.weights);
    tape.backward(out.loss.total);
    out.grads = g.grads();
    out.output = fake.value();
    return out;
}

// Gradient of the discriminator loss with respect to D. `fake` is a plain
// tensor, so no path back into G exists.
template <class T>
std::pair<ParamMap<T>, double> discriminator_gradients(const ParamMap<T>& d_params, const DiscriminatorSpec& d_spec,
                                                       const Tensor<T>& real, const Tensor<T>& fake) {
    Tape<T> tape(true);
    BoundParams<T> d(tape, d_params, true);
    Var<T> d_real = discriminator_forward(tape.constant(real), d, d_spec);
    Var<T> d_fake = discriminator_forward(tape.constant(fake), d, d_spec);
    Var<T> loss = discriminator_loss(d_real, d_fake);
    tape.backward(loss);
    return {d.grads(), static_cast<double>(loss.value().item())};
}

// D update only; G and A are untouched.
inline double discriminator_step(ModelState& d, const Tensor<float>& real, const Tensor<float>& fake) {
    auto [grads, loss] = discriminator_gradients(d.params, discriminator_spec_of(d), real, fake);
    adam_step(d.params, grads, d.adam);
    return loss;
}

// One D update on detached fakes (adversarial mode only), then one G update
// against the updated D. The autoencoder is read-only.
inline StepLosses gan_step(Checkpoint& c, const TrainConfig& cfg, const Batch& batch) {
    ModelState& g = c.model(kGeneratorName);
    const GeneratorSpec g_spec = generator_spec_of(g);
    GeneratorObjective<float> obj;
    obj.mode = cfg.mode;
    obj.weights = cfg.weights;
    StepLosses out;
    ModelState* d = nullptr;
    if (uses_feature(cfg.mode)) {
        const ModelState& a = c.model(kAutoencoderName);
        obj.autoencoder = &a.params;
        obj.autoencoder_spec = autoencoder_spec_of(a);
    }
    if (uses_adversarial(cfg.mode)) {
        d = &c.model(kDiscriminatorName);
        const Tensor<float> fake = run_generator(g.params, g_spec, batch.x_up);
        out.loss_d = discriminator_step(*d, batch.x_h, fake);
        obj.discriminator = &d->params;
        obj.discriminator_spec = discriminator_spec_of(*d);
    }
    auto grads = generator_gradients(g.params, g_spec, batch.x_up, batch.x_h, obj);
    out.loss_g = grads.loss.total.value().item();
    out.l2 = grads.loss.l2.value().item();
    if (grads.loss.feature.valid()) out.feature = grads.loss.feature.value().item();
    if (grads.loss.adversarial.valid()) out.adversarial = grads.loss.adversarial.value().item();
    adam_step(g.params, grads.grads, g.adam);
    return out;
}

// Reconstruction step on HR patches.
inline double autoencoder_step(ModelState& a, const Batch& batch) {
    const AutoencoderSpec spec = autoencoder_spec_of(a);
    Tape<float> tape(true);
    BoundParams<float> p(tape, a.params, true);
    Var<float> x = tape.constant(batch.x_h);
    Var<float> loss = l2_loss(x, autoencoder_forward(x, p, spec).reconstruction);
    tape.backward(loss);
    adam_step(a.params, p.grads(), a.adam);
    return loss.value().item();
}

// ---------------------------------------------------------------------------
// Loops

struct TrainOptions {
    const Checkpoint* resume = nullptr;  // continue from this state
    std::optional<std::uint64_t> stop_at;  // stop early at this global step
    std::function<void(const Checkpoint&)> on_checkpoint;  // every checkpoint_every steps
    std::ostream* log = nullptr;
};

namespace detail {

inline bool finite(const StepLosses& l) {
    return std::isfinite(l.loss_g) && std::isfinite(l.l2) && std::isfinite(l.feature) &&
           std::isfinite(l.adversarial) && std::isfinite(l.loss_d);
}

inline void write_log(std::ostream& os, std::uint64_t step, const StepLosses& l, double wall) {
    os << "step=" << step << " loss_g=" << l.loss_g << " l2=" << l.l2 << " feat=" << l.feature
       << " adv=" << l.adversarial << " loss_d=" << l.loss_d << " wall=" << wall << '\n';
}

template <class Step>
Checkpoint run_loop(Checkpoint c, const TrainConfig& cfg, const std::vector<TrainingPair>& pool,
                    std::uint64_t total, const TrainOptions& opt, Step step_fn) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t end = opt.stop_at ? std::min(*opt.stop_at, total) : total;
    while (c.step < end) {
        const std::uint64_t step = c.step;
        const Batch batch = make_batch(pool, batch_indices(pool.size(), cfg.batch_size, cfg.seed, step));
        StepLosses l;
        try {
            l = step_fn(c, batch);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError("diverged at step " + std::to_string(step + 1) + ": " + e.what());
        }
        if (!finite(l)) throw NonFiniteError("diverged at step " + std::to_string(step + 1) + ": non-finite loss");
        c.step = step + 1;
        if (opt.log && (c.step % cfg.log_every == 0 || c.step == end)) {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            write_log(*opt.log, c.step, l, wall);
        }
        if (opt.on_checkpoint && cfg.checkpoint_every && c.step % cfg.checkpoint_every == 0) opt.on_checkpoint(c);
    }
    return c;
}

inline void check_pool(const TrainConfig& cfg, const std::vector<TrainingPair>& pool, std::size_t patch_length) {
    if (pool.empty()) throw ConfigError("training pool is empty");
    if (pool.size() < cfg.batch_size) throw ConfigError("batch size exceeds patches_per_epoch");
    if (pool.front().x_h.size() != patch_length)
        throw ConfigError("training patches have length " + std::to_string(pool.front().x_h.size()) +
                          " but the model expects " + std::to_string(patch_length));
}

inline void check_resume(const Checkpoint& r, const Checkpoint& fresh) {
    if (r.meta != fresh.meta) throw ConfigError("resume checkpoint was produced by a different configuration");
    if (r.models.size() != fresh.models.size()) throw ConfigError("resume checkpoint has a different model set");
    for (std::size_t i = 0; i < r.models.size(); ++i)
        if (r.models[i].name != fresh.models[i].name || r.models[i].arch != fresh.models[i].arch)
            throw ConfigError("resume checkpoint architecture differs for '" + fresh.models[i].name + "'");
}

}  // namespace detail

inline Checkpoint train_autoencoder(const TrainConfig& cfg, const std::vector<TrainingPair>& pool,
                                    const TrainOptions& opt = {}) {
    cfg.autoencoder.validate();
    if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
    Checkpoint c = init_autoencoder_checkpoint(cfg);
    if (pool.empty()) throw ConfigError("training pool is empty");
    if (pool.size() < cfg.batch_size) throw ConfigError("batch size exceeds patches_per_epoch");
    if (pool.front().x_h.size() % (std::size_t{1} << cfg.autoencoder.depth) != 0)
        throw ConfigError("patch length not divisible by 2^depth of the autoencoder");
    if (opt.resume) {
        detail::check_resume(*opt.resume, c);
        c = *opt.resume;
    }
    return detail::run_loop(std::move(c), cfg, pool, cfg.ae_steps_for(pool.size()), opt,
                            [](Checkpoint& ck, const Batch& b) {
                                StepLosses l;
                                l.l2 = autoencoder_step(ck.model(kAutoencoderName), b);
                                l.loss_g = l.l2;
                                return l;
                            });
}

inline Checkpoint train_gan(const TrainConfig& cfg, const std::vector<TrainingPair>& pool, const Checkpoint* ae,
                            const TrainOptions& opt = {}) {
    cfg.validate();
    detail::check_pool(cfg, pool, cfg.generator.patch_length);
    Checkpoint c = opt.resume && uses_feature(cfg.mode) && !ae ? Checkpoint{} : init_gan_checkpoint(cfg, ae);
    if (opt.resume) {
        if (c.models.empty()) c = init_gan_checkpoint(cfg, opt.resume);
        detail::check_resume(*opt.resume, c);
        c = *opt.resume;
    }
    return detail::run_loop(std::move(c), cfg, pool, cfg.steps_for(pool.size()), opt,
                            [&cfg](Checkpoint& ck, const Batch& b) { return gan_step(ck, cfg, b); });
}

}  // namespace audiosr
