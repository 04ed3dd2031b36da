#pragma once

// Command-line front end. run() never calls exit(); it returns the process
// exit status so it can be driven from tests.
//
// Exit status: 0 success, 1 other failure, 2 usage error, 3 bad
// configuration, 4 missing or unreadable file, 5 training diverged.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "audiosr/bench.hpp"
#include "audiosr/checkpoint.hpp"
#include "audiosr/config.hpp"
#include "audiosr/dataset.hpp"
#include "audiosr/error.hpp"
#include "audiosr/inference.hpp"
#include "audiosr/metrics.hpp"
#include "audiosr/spectrogram.hpp"
#include "audiosr/training.hpp"
#include "audiosr/wav.hpp"

namespace audiosr::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kBadConfig = 3, kIo = 4, kDiverged = 5 };

namespace detail {

namespace fs = std::filesystem;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> ratio;
    std::optional<std::size_t> depth;
    std::optional<std::string> mode;
    std::string out;
    std::string checkpoint;
    std::string ae_checkpoint;
    std::string input;
    std::string sr;
    std::string hr;
    std::string log;
    std::string format = "kv";
    std::size_t bench_steps = 10;
    std::size_t bench_batch = 8;
    std::size_t bench_patch = 2048;
    std::size_t bench_c0 = 16;
};

struct Settings {
    DatasetSpec data;
    TrainConfig train;
};

// Config file, then flag overrides; the result is validated before any data
// is touched.
inline Settings load_settings(const Flags& f, bool need_train) {
    KeyValueConfig c;
    if (!f.config.empty()) c = KeyValueConfig::load(f.config);
    std::set<std::string> known = dataset_config_keys();
    known.insert(train_config_keys().begin(), train_config_keys().end());
    c.require_known(known);
    if (f.seed) c.set("seed", std::to_string(*f.seed));
    if (f.ratio) c.set("ratio", std::to_string(*f.ratio));
    if (f.depth) c.set("g_depth", std::to_string(*f.depth));
    if (f.mode) c.set("mode", *f.mode);
    Settings s;
    s.data = dataset_spec_from(c);
    s.train = train_config_from(c, s.data);
    if (need_train) s.train.validate();
    s.data.validate(std::size_t{1} << s.train.generator.depth);
    return s;
}

inline void require_flag(const std::string& value, const char* name) {
    if (value.empty()) throw ConfigError(std::string("missing required flag ") + name);
}

inline void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw IoError("no such file '" + path + "'");
}

class LogSink {
public:
    LogSink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::app);
            if (!file_) throw IoError("cannot open log '" + path + "'");
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

inline void write_clip(const fs::path& p, const Waveform& w) { write_wav(p, w); }

inline int cmd_prepare(const Flags& f, std::ostream& out) {
    const Settings s = load_settings(f, false);
    require_flag(f.out, "--out");
    const Dataset ds = build_dataset(s.data, std::size_t{1} << s.train.generator.depth);
    const fs::path dir(f.out);
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
    if (!manifest) throw IoError("cannot write '" + (dir / "manifest.txt").string() + "'");
    manifest << "ratio=" << s.data.ratio << " patch_length=" << s.data.patch_length
             << " patches=" << ds.patches.size() << " seed=" << s.data.seed << '\n';
    auto emit = [&](const char* split, const std::vector<ClipPair>& clips, bool files) {
        for (const auto& c : clips) {
            manifest << "split=" << split << " clip_id=" << c.id << " hr_samples=" << c.hr.size()
                     << " lr_samples=" << c.lr.size() << " sample_rate=" << c.hr.sample_rate << '\n';
            if (files) {
                fs::create_directories(dir / split);
                write_clip(dir / split / (c.id + "_hr.wav"), c.hr);
                write_clip(dir / split / (c.id + "_lr.wav"), c.lr);
            }
        }
    };
    emit("train", ds.train, false);
    emit("val", ds.val, true);
    emit("test", ds.test, true);
    out << "prepared " << ds.train.size() << " train, " << ds.val.size() << " val, " << ds.test.size()
        << " test clips in " << dir.string() << '\n';
    return kOk;
}

inline std::optional<Checkpoint> load_resume(const Flags& f) {
    if (f.checkpoint.empty()) return std::nullopt;
    require_file(f.checkpoint);
    return load_checkpoint(f.checkpoint);
}

inline int cmd_train_ae(const Flags& f, std::ostream& out) {
    const Settings s = load_settings(f, false);
    s.train.autoencoder.validate();
    require_flag(f.out, "--out");
    const auto resume = load_resume(f);
    const Dataset ds = build_dataset(s.data, std::size_t{1} << std::max(s.train.generator.depth, s.train.autoencoder.depth));
    LogSink log(f.log, out);
    TrainOptions opt;
    opt.resume = resume ? &*resume : nullptr;
    opt.log = &log.stream();
    opt.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(f.out, c); };
    save_checkpoint(f.out, train_autoencoder(s.train, ds.patches, opt));
    return kOk;
}

inline int cmd_train_gan(const Flags& f, std::ostream& out) {
    const Settings s = load_settings(f, true);
    require_flag(f.out, "--out");
    std::optional<Checkpoint> ae;
    if (!f.ae_checkpoint.empty()) {
        require_file(f.ae_checkpoint);
        ae = load_checkpoint(f.ae_checkpoint);
    }
    const auto resume = load_resume(f);
    if (uses_feature(s.train.mode) && !ae && !resume)
        throw ConfigError("mode " + to_string(s.train.mode) + " needs --ae-checkpoint");
    const Dataset ds = build_dataset(s.data, std::size_t{1} << s.train.generator.depth);
    LogSink log(f.log, out);
    TrainOptions opt;
    opt.resume = resume ? &*resume : nullptr;
    opt.log = &log.stream();
    opt.on_checkpoint = [&](const Checkpoint& c) { save_checkpoint(f.out, c); };
    save_checkpoint(f.out, train_gan(s.train, ds.patches, ae ? &*ae : nullptr, opt));
    return kOk;
}

inline int cmd_infer(const Flags& f, std::ostream& out) {
    require_flag(f.checkpoint, "--checkpoint");
    require_flag(f.input, "--input");
    require_flag(f.out, "--out");
    const std::size_t ratio = f.ratio.value_or(2);
    if (ratio != 2 && ratio != 4 && ratio != 6) throw ConfigError("--ratio must be 2, 4 or 6");
    require_file(f.checkpoint);
    require_file(f.input);
    const Checkpoint c = load_checkpoint(f.checkpoint);
    const AudioClip lr = read_wav(f.input);
    write_wav(f.out, infer(c, lr, ratio));
    out << "wrote " << lr.size() * ratio << " samples to " << f.out << '\n';
    return kOk;
}

inline void emit_report(const Flags& f, std::ostream& out, const MetricsReport& r) {
    if (f.format != "kv" && f.format != "text") throw ConfigError("--format must be kv or text");
    auto write = [&](std::ostream& os) { f.format == "kv" ? write_report_kv(os, r) : write_report_text(os, r); };
    if (f.out.empty()) {
        write(out);
        return;
    }
    std::ofstream os(f.out, std::ios::trunc);
    if (!os) throw IoError("cannot write '" + f.out + "'");
    write(os);
}

// Either a single (--sr, --hr) pair, or a checkpoint evaluated on the test
// clips of the configured dataset.
inline int cmd_eval(const Flags& f, std::ostream& out) {
    const std::size_t ratio = f.ratio.value_or(2);
    if (!f.sr.empty() || !f.hr.empty()) {
        require_flag(f.sr, "--sr");
        require_flag(f.hr, "--hr");
        if (ratio != 2 && ratio != 4 && ratio != 6) throw ConfigError("--ratio must be 2, 4 or 6");
        require_file(f.sr);
        require_file(f.hr);
        const AudioClip sr = read_wav(f.sr);
        const ClipPair ref = make_clip_pair(fs::path(f.hr).stem().string(), read_wav(f.hr), ratio);
        if (sr.size() < ref.hr.size())
            throw ConfigError("--sr has " + std::to_string(sr.size()) + " samples, fewer than the reference's " +
                              std::to_string(ref.hr.size()));
        const Waveform sr_trim = slice(sr, 0, ref.hr.size());
        emit_report(f, out, summarize({evaluate_clip(sr_trim, ref.hr, ref.x_up, ref.id)}));
        return kOk;
    }
    require_flag(f.checkpoint, "--checkpoint");
    const Settings s = load_settings(f, false);
    require_file(f.checkpoint);
    const Checkpoint c = load_checkpoint(f.checkpoint);
    const ModelState& g = c.model(kGeneratorName);
    const GeneratorSpec gs = generator_spec_of(g);
    const Dataset ds = build_dataset(s.data, std::size_t{1} << gs.depth);
    const auto& clips = ds.test.empty() ? ds.val : ds.test;
    if (clips.empty()) throw ConfigError("dataset has no held-out clips to evaluate");
    std::vector<ClipMetrics> rows;
    for (const auto& cp : clips) rows.push_back(evaluate_clip(enhance_upsampled(g.params, gs, cp.x_up), cp.hr, cp.x_up, cp.id));
    emit_report(f, out, summarize(std::move(rows)));
    return kOk;
}

inline int cmd_spectrogram(const Flags& f, std::ostream& out) {
    require_flag(f.input, "--input");
    require_flag(f.out, "--out");
    require_file(f.input);
    const GrayImage img = render_spectrogram(dsp::stft_mag_sq(read_wav(f.input)));
    write_pgm(f.out, img);
    out << "wrote " << img.width << "x" << img.height << " spectrogram to " << f.out << '\n';
    return kOk;
}

inline int cmd_bench(const Flags& f, std::ostream& out) {
    BenchConfig b;
    b.generator.depth = f.depth.value_or(b.generator.depth);
    b.generator.c0 = f.bench_c0;
    b.generator.patch_length = f.bench_patch;
    b.batch_size = f.bench_batch;
    b.steps = f.bench_steps;
    b.seed = f.seed.value_or(b.seed);
    try {
        b.generator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    write_bench_report(out, bench_superpixel(b));
    return kOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    Flags f;
    CLI::App app{"Audio super-resolution with a multiscale U-net GAN", "audiosr"};
    app.require_subcommand(1);

    auto common = [&f](CLI::App* sc) {
        sc->add_option("--config", f.config, "key=value configuration file");
        sc->add_option("--seed", f.seed, "seed for every stochastic step");
        sc->add_option("--ratio", f.ratio, "upsampling ratio (2, 4 or 6)");
        sc->add_option("--depth", f.depth, "generator depth L");
        sc->add_option("--mode", f.mode, "loss mode: l2, l2+f or l2+f+adv");
        sc->add_option("--out", f.out, "output path");
        sc->add_option("--checkpoint", f.checkpoint, "model checkpoint (resume point when training)");
    };

    CLI::App* prepare = app.add_subcommand("prepare", "build the dataset and write its manifest");
    CLI::App* train_ae = app.add_subcommand("train-ae", "pretrain the feature autoencoder");
    CLI::App* train_gan = app.add_subcommand("train-gan", "train the generator (and discriminator)");
    CLI::App* infer_cmd = app.add_subcommand("infer", "super-resolve a low-resolution WAV file");
    CLI::App* eval = app.add_subcommand("eval", "SNR/LSD report against the spline baseline");
    CLI::App* spec = app.add_subcommand("spectrogram", "render a log-power spectrogram as PGM");
    CLI::App* bench = app.add_subcommand("bench-superpixel", "time superpixel vs strided-conv training steps");
    for (CLI::App* sc : {prepare, train_ae, train_gan, infer_cmd, eval, spec, bench}) common(sc);
    for (CLI::App* sc : {train_ae, train_gan}) sc->add_option("--log", f.log, "append training log here");
    train_gan->add_option("--ae-checkpoint", f.ae_checkpoint, "pretrained autoencoder checkpoint");
    infer_cmd->add_option("--input", f.input, "low-resolution WAV");
    spec->add_option("--input", f.input, "WAV file");
    eval->add_option("--sr", f.sr, "super-resolved WAV");
    eval->add_option("--hr", f.hr, "reference high-resolution WAV");
    eval->add_option("--format", f.format, "kv or text");
    bench->add_option("--steps", f.bench_steps, "timed steps per variant");
    bench->add_option("--batch", f.bench_batch, "batch size");
    bench->add_option("--patch", f.bench_patch, "patch length");
    bench->add_option("--c0", f.bench_c0, "base channel count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kUsage;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(f, out);
        if (train_ae->parsed()) return cmd_train_ae(f, out);
        if (train_gan->parsed()) return cmd_train_gan(f, out);
        if (infer_cmd->parsed()) return cmd_infer(f, out);
        if (eval->parsed()) return cmd_eval(f, out);
        if (spec->parsed()) return cmd_spectrogram(f, out);
        if (bench->parsed()) return cmd_bench(f, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIo;
    } catch (const NonFiniteError& e) {
        err << "training aborted: " << e.what() << '\n';
        return kDiverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace audiosr::cli
