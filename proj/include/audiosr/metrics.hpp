#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "audiosr/dsp.hpp"

namespace audiosr {

namespace metrics {

// Reported in place of +inf when the approximation is exact.
constexpr double kSnrCapDb = 100.0;
// Floor applied to every |X(w,k)|^2 before the log ratio.
constexpr double kSpectralFloor = 1e-10;

}  // namespace metrics

// 10 log10(|x_ref|^2 / |x - x_ref|^2), capped at +100 dB.
inline double snr(const Waveform& x, const Waveform& x_ref) {
    if (x.size() != x_ref.size())
        throw std::invalid_argument("snr: length mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(x_ref.size()) + ")");
    double ref_energy = 0.0, err_energy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.samples[i] - x_ref.samples[i];
        ref_energy += x_ref.samples[i] * x_ref.samples[i];
        err_energy += d * d;
    }
    if (ref_energy == 0.0) throw std::invalid_argument("snr: reference signal is all zero");
    if (err_energy == 0.0) return metrics::kSnrCapDb;
    return std::min(metrics::kSnrCapDb, 10.0 * std::log10(ref_energy / err_energy));
}

// Log-spectral distance over non-overlapping 2048-sample windows, averaged
// over windows, with K = N = 1025 one-sided bins.
inline double lsd(const Waveform& x, const Waveform& x_ref) {
    if (x.size() != x_ref.size())
        throw std::invalid_argument("lsd: length mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(x_ref.size()) + ")");
    const dsp::Spectrogram s = dsp::stft_mag_sq(x);
    const dsp::Spectrogram r = dsp::stft_mag_sq(x_ref);
    double total = 0.0;
    for (std::size_t w = 0; w < s.windows; ++w) {
        double acc = 0.0;
        for (std::size_t k = 0; k < s.bins; ++k) {
            const double d = std::log10(std::max(s.at(w, k), metrics::kSpectralFloor) /
                                        std::max(r.at(w, k), metrics::kSpectralFloor));
            acc += d * d;
        }
        total += std::sqrt(acc / static_cast<double>(s.bins));
    }
    return total / static_cast<double>(s.windows);
}

struct ClipMetrics {
    std::string clip_id;
    double snr_db = 0.0;
    double lsd = 0.0;
    double baseline_snr_db = 0.0;
    double baseline_lsd = 0.0;
};

// Model and spline-baseline rows for a set of clips, plus their means.
struct MetricsReport {
    double snr_db = 0.0;
    double lsd = 0.0;
    double baseline_snr_db = 0.0;
    double baseline_lsd = 0.0;
    std::vector<ClipMetrics> clips;
};

inline ClipMetrics evaluate_clip(const Waveform& sr, const Waveform& hr, const Waveform& baseline,
                                 std::string clip_id = "clip") {
    return ClipMetrics{std::move(clip_id), snr(sr, hr), lsd(sr, hr), snr(baseline, hr), lsd(baseline, hr)};
}

inline MetricsReport summarize(std::vector<ClipMetrics> clips) {
    MetricsReport r;
    for (const auto& c : clips) {
        r.snr_db += c.snr_db;
        r.lsd += c.lsd;
        r.baseline_snr_db += c.baseline_snr_db;
        r.baseline_lsd += c.baseline_lsd;
    }
    if (!clips.empty()) {
        const double n = static_cast<double>(clips.size());
        r.snr_db /= n;
        r.lsd /= n;
        r.baseline_snr_db /= n;
        r.baseline_lsd /= n;
    }
    r.clips = std::move(clips);
    return r;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// Human-readable table.
inline void write_report_text(std::ostream& os, const MetricsReport& r) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-24s %10s %8s %14s %12s\n", "clip", "snr_db", "lsd", "spline_snr_db",
                  "spline_lsd");
    os << line;
    for (const auto& c : r.clips) {
        std::snprintf(line, sizeof(line), "%-24s %10.4f %8.4f %14.4f %12.4f\n", c.clip_id.c_str(), c.snr_db, c.lsd,
                      c.baseline_snr_db, c.baseline_lsd);
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-24s %10.4f %8.4f %14.4f %12.4f\n", "mean", r.snr_db, r.lsd,
                  r.baseline_snr_db, r.baseline_lsd);
    os << line;
}

// One record per line: clip_id=... snr_db=... lsd=... baseline_snr_db=...
// baseline_lsd=...; the last record has clip_id=mean.
inline void write_report_kv(std::ostream& os, const MetricsReport& r) {
    using detail::format_double;
    auto record = [&os](const std::string& id, double s, double l, double bs, double bl) {
        os << "clip_id=" << id << " snr_db=" << format_double(s) << " lsd=" << format_double(l)
           << " baseline_snr_db=" << format_double(bs) << " baseline_lsd=" << format_double(bl) << '\n';
    };
    for (const auto& c : r.clips) record(c.clip_id, c.snr_db, c.lsd, c.baseline_snr_db, c.baseline_lsd);
    record("mean", r.snr_db, r.lsd, r.baseline_snr_db, r.baseline_lsd);
}

}  // namespace audiosr
