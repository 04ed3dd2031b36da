#pragma once

// Dataset construction: source clips (WAV directory or synthetic tones) are
// split by clip, turned into (spline-upsampled LR, HR) pairs and cut into
// fixed-length training patches.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "audiosr/config.hpp"
#include "audiosr/dsp.hpp"
#include "audiosr/error.hpp"
#include "audiosr/tensor.hpp"
#include "audiosr/wav.hpp"

namespace audiosr {

// Sum of random sinusoids plus optional white noise.
struct SynthRecipe {
    std::size_t clips = 24;
    std::size_t clip_length = 16384;
    double sample_rate = 16000.0;
    std::size_t tones = 4;
    double freq_min = 50.0;
    double freq_max = 3600.0;
    double amp_min = 0.05;
    double amp_max = 0.25;
    double noise = 0.0;  // standard deviation of additive white noise

    void validate() const {
        if (clips == 0 || clip_length == 0) throw ConfigError("synthetic recipe: need clips > 0 and clip_length > 0");
        if (!(sample_rate > 0)) throw ConfigError("synthetic recipe: sample_rate must be positive");
        if (tones == 0) throw ConfigError("synthetic recipe: need at least one tone");
        if (!(freq_min > 0 && freq_min <= freq_max && freq_max < sample_rate / 2))
            throw ConfigError("synthetic recipe: need 0 < freq_min <= freq_max < sample_rate/2");
        if (!(amp_min >= 0 && amp_min <= amp_max)) throw ConfigError("synthetic recipe: need 0 <= amp_min <= amp_max");
        if (!(noise >= 0)) throw ConfigError("synthetic recipe: noise must be >= 0");
    }
};

struct Tone {
    double freq = 0;
    double amp = 0;
    double phase = 0;
};

struct SynthClip {
    AudioClip clip;
    std::vector<Tone> tones;
};

inline AudioClip render_tones(const std::vector<Tone>& tones, std::size_t length, double sample_rate) {
    AudioClip clip{std::vector<double>(length, 0.0), sample_rate};
    for (std::size_t t = 0; t < length; ++t) {
        double v = 0.0;
        for (const auto& tone : tones)
            v += tone.amp * std::sin(2.0 * std::numbers::pi * tone.freq * static_cast<double>(t) / sample_rate + tone.phase);
        clip.samples[t] = v;
    }
    return clip;
}

inline std::vector<SynthClip> synth_dataset(const SynthRecipe& recipe, std::uint64_t seed) {
    recipe.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(recipe.freq_min, recipe.freq_max);
    std::uniform_real_distribution<double> amp(recipe.amp_min, recipe.amp_max);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<SynthClip> out;
    out.reserve(recipe.clips);
    for (std::size_t c = 0; c < recipe.clips; ++c) {
        SynthClip sc;
        for (std::size_t k = 0; k < recipe.tones; ++k) {
            Tone t;
            t.freq = freq(rng);
            t.amp = amp(rng);
            t.phase = phase(rng);
            sc.tones.push_back(t);
        }
        sc.clip = render_tones(sc.tones, recipe.clip_length, recipe.sample_rate);
        if (recipe.noise > 0)
            for (auto& v : sc.clip.samples) v += recipe.noise * noise(rng);
        out.push_back(std::move(sc));
    }
    return out;
}

// (spline-upsampled LR, HR) at equal length.
struct TrainingPair {
    Waveform x_up;
    Waveform x_h;
};

// Lowpass at 1/R of Nyquist, decimate by R, spline back up by R.
// `multiple` is an extra divisibility requirement (2^L of the target model).
inline TrainingPair make_pair(const Waveform& x_h, std::size_t ratio, std::size_t multiple = 1) {
    if (ratio < 2) throw std::invalid_argument("make_pair: ratio must be >= 2");
    if (x_h.size() % ratio != 0)
        throw std::invalid_argument("make_pair: length " + std::to_string(x_h.size()) + " not divisible by ratio " +
                                    std::to_string(ratio));
    if (multiple == 0 || x_h.size() % multiple != 0)
        throw std::invalid_argument("make_pair: length " + std::to_string(x_h.size()) + " not divisible by " +
                                    std::to_string(multiple));
    const Waveform lr = dsp::decimate(dsp::lowpass_fir(x_h, 1.0 / static_cast<double>(ratio)), ratio);
    return TrainingPair{dsp::spline_upsample(lr, ratio), x_h};
}

// The low-resolution observation of an HR clip.
inline Waveform make_low_resolution(const Waveform& x_h, std::size_t ratio) {
    return dsp::decimate(dsp::lowpass_fir(x_h, 1.0 / static_cast<double>(ratio)), ratio);
}

// Uniform start offsets in [0, clip_length - patch_length].
inline std::vector<std::size_t> sample_offsets(std::size_t clip_length, std::size_t patch_length, std::size_t count,
                                               std::mt19937_64& rng) {
    if (patch_length == 0 || clip_length <= patch_length)
        throw std::invalid_argument("sample_patches: clip of " + std::to_string(clip_length) +
                                    " samples is not longer than patch length " + std::to_string(patch_length));
    std::uniform_int_distribution<std::size_t> pick(0, clip_length - patch_length);
    std::vector<std::size_t> out(count);
    for (auto& o : out) o = pick(rng);
    return out;
}

inline Waveform slice(const Waveform& x, std::size_t offset, std::size_t length) {
    return Waveform{std::vector<double>(x.samples.begin() + static_cast<std::ptrdiff_t>(offset),
                                        x.samples.begin() + static_cast<std::ptrdiff_t>(offset + length)),
                    x.sample_rate};
}

inline std::vector<Waveform> sample_patches(const AudioClip& clip, std::size_t patch_length, std::size_t count,
                                            std::mt19937_64& rng) {
    std::vector<Waveform> out;
    for (std::size_t o : sample_offsets(clip.size(), patch_length, count, rng))
        out.push_back(slice(clip, o, patch_length));
    return out;
}

// ---------------------------------------------------------------------------

struct DatasetSpec {
    std::string source = "synthetic";  // "synthetic" or a directory of .wav files
    std::size_t ratio = 2;
    std::size_t patch_length = 8192;
    std::size_t patches_per_epoch = 256;
    std::uint64_t seed = 1;
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    SynthRecipe synth;

    void validate(std::size_t model_multiple = 1) const {
        if (ratio != 2 && ratio != 4 && ratio != 6)
            throw ConfigError("dataset: ratio must be 2, 4 or 6, got " + std::to_string(ratio));
        if (patch_length == 0 || patch_length % ratio != 0)
            throw ConfigError("dataset: patch_length must be a positive multiple of the ratio");
        if (model_multiple == 0 || patch_length % model_multiple != 0)
            throw ConfigError("dataset: patch_length " + std::to_string(patch_length) + " not divisible by 2^L = " +
                              std::to_string(model_multiple));
        if (patches_per_epoch == 0) throw ConfigError("dataset: patches_per_epoch must be positive");
        if (!(train_fraction > 0 && val_fraction >= 0 && train_fraction + val_fraction < 1.0))
            throw ConfigError("dataset: need train_fraction > 0, val_fraction >= 0 and their sum < 1");
        if (source == "synthetic") synth.validate();
    }
};

inline const std::set<std::string>& dataset_config_keys() {
    static const std::set<std::string> keys{
        "source",      "ratio",         "patch_length",  "patches_per_epoch", "seed",          "train_fraction",
        "val_fraction", "synth_clips",  "synth_clip_length", "synth_sample_rate", "synth_tones", "synth_freq_min",
        "synth_freq_max", "synth_amp_min", "synth_amp_max", "synth_noise"};
    return keys;
}

inline DatasetSpec dataset_spec_from(const KeyValueConfig& c) {
    DatasetSpec s;
    s.source = c.get_string("source", s.source);
    s.ratio = c.get_uint("ratio", s.ratio);
    s.patch_length = c.get_uint("patch_length", s.patch_length);
    s.patches_per_epoch = c.get_uint("patches_per_epoch", s.patches_per_epoch);
    s.seed = c.get_uint("seed", s.seed);
    s.train_fraction = c.get_double("train_fraction", s.train_fraction);
    s.val_fraction = c.get_double("val_fraction", s.val_fraction);
    s.synth.clips = c.get_uint("synth_clips", s.synth.clips);
    s.synth.clip_length = c.get_uint("synth_clip_length", s.synth.clip_length);
    s.synth.sample_rate = c.get_double("synth_sample_rate", s.synth.sample_rate);
    s.synth.tones = c.get_uint("synth_tones", s.synth.tones);
    s.synth.freq_min = c.get_double("synth_freq_min", s.synth.freq_min);
    s.synth.freq_max = c.get_double("synth_freq_max", s.synth.freq_max);
    s.synth.amp_min = c.get_double("synth_amp_min", s.synth.amp_min);
    s.synth.amp_max = c.get_double("synth_amp_max", s.synth.amp_max);
    s.synth.noise = c.get_double("synth_noise", s.synth.noise);
    return s;
}

// One source clip with its derived signals, trimmed to a multiple of R.
struct ClipPair {
    std::string id;
    Waveform hr;
    Waveform lr;
    Waveform x_up;
};

struct Dataset {
    DatasetSpec spec;
    std::vector<ClipPair> train, val, test;
    std::vector<TrainingPair> patches;  // training pool, cut from `train`
};

inline ClipPair make_clip_pair(std::string id, const AudioClip& clip, std::size_t ratio) {
    Waveform hr{std::vector<double>(clip.samples.begin(),
                                    clip.samples.begin() + static_cast<std::ptrdiff_t>(clip.size() / ratio * ratio)),
                clip.sample_rate};
    Waveform lr = make_low_resolution(hr, ratio);
    Waveform x_up = dsp::spline_upsample(lr, ratio);
    return ClipPair{std::move(id), std::move(hr), std::move(lr), std::move(x_up)};
}

inline std::vector<std::pair<std::string, AudioClip>> load_source_clips(const DatasetSpec& spec) {
    std::vector<std::pair<std::string, AudioClip>> clips;
    if (spec.source == "synthetic") {
        auto synth = synth_dataset(spec.synth, spec.seed);
        for (std::size_t i = 0; i < synth.size(); ++i)
            clips.emplace_back("synth" + std::to_string(i), std::move(synth[i].clip));
        return clips;
    }
    const std::filesystem::path dir(spec.source);
    if (!std::filesystem::is_directory(dir)) throw IoError("dataset source '" + spec.source + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .wav files in '" + spec.source + "'");
    for (const auto& f : files) clips.emplace_back(f.stem().string(), read_wav(f));
    return clips;
}

// Deterministic in (spec, seed). Splits are disjoint by source clip.
inline Dataset build_dataset(const DatasetSpec& spec, std::size_t model_multiple = 1) {
    spec.validate(model_multiple);
    auto clips = load_source_clips(spec);
    const std::size_t n = clips.size();
    const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(n * spec.train_fraction)));
    const std::size_t n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(n * spec.val_fraction)));

    std::mt19937_64 rng(spec.seed ^ 0x5eed5a1175ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    Dataset ds;
    ds.spec = spec;
    for (std::size_t i = 0; i < n; ++i) {
        auto& [id, clip] = clips[order[i]];
        ClipPair cp = make_clip_pair(id, clip, spec.ratio);
        (i < n_train ? ds.train : i < n_train + n_val ? ds.val : ds.test).push_back(std::move(cp));
    }
    for (const auto& c : ds.train)
        if (c.hr.size() <= spec.patch_length)
            throw ConfigError("training clip '" + c.id + "' is not longer than patch_length");

    std::uniform_int_distribution<std::size_t> pick_clip(0, ds.train.size() - 1);
    ds.patches.reserve(spec.patches_per_epoch);
    for (std::size_t p = 0; p < spec.patches_per_epoch; ++p) {
        const ClipPair& c = ds.train[pick_clip(rng)];
        const std::size_t off = sample_offsets(c.hr.size(), spec.patch_length, 1, rng)[0];
        ds.patches.push_back(TrainingPair{slice(c.x_up, off, spec.patch_length), slice(c.hr, off, spec.patch_length)});
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Batching

struct Batch {
    Tensor<float> x_up;
    Tensor<float> x_h;
};

inline Batch make_batch(const std::vector<TrainingPair>& pool, const std::vector<std::size_t>& indices) {
    const std::size_t len = pool.at(indices.at(0)).x_h.size();
    Batch b{Tensor<float>({indices.size(), 1, len}), Tensor<float>({indices.size(), 1, len})};
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& p = pool.at(indices[i]);
        for (std::size_t t = 0; t < len; ++t) {
            b.x_up.at(i, 0, t) = static_cast<float>(p.x_up.samples[t]);
            b.x_h.at(i, 0, t) = static_cast<float>(p.x_h.samples[t]);
        }
    }
    return b;
}

// Patch indices of one epoch: a permutation that depends only on (seed, epoch).
inline std::vector<std::size_t> epoch_order(std::size_t pool_size, std::uint64_t seed, std::uint64_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), 0xba7c4u};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(pool_size);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

// Indices of the batch at a global step; a pure function of its arguments.
inline std::vector<std::size_t> batch_indices(std::size_t pool_size, std::size_t batch_size, std::uint64_t seed,
                                              std::uint64_t step) {
    const std::size_t per_epoch = pool_size / batch_size;
    if (per_epoch == 0) throw ConfigError("batch size exceeds patches_per_epoch");
    const auto order = epoch_order(pool_size, seed, step / per_epoch);
    const std::size_t start = (step % per_epoch) * batch_size;
    return std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(start + batch_size));
}

}  // namespace audiosr
