#pragma once

// Signal-processing front end: anti-alias FIR lowpass, decimation, natural
// cubic-spline upsampling and the non-overlapping magnitude STFT.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace audiosr {

struct Waveform {
    std::vector<double> samples;
    double sample_rate = 1.0;

    std::size_t size() const { return samples.size(); }
    bool operator==(const Waveform&) const = default;
};

namespace dsp {

constexpr std::size_t kFirTaps = 65;
constexpr std::size_t kStftWindow = 2048;
constexpr std::size_t kStftBins = kStftWindow / 2 + 1;

// Windowed-sinc lowpass, Hamming window, normalized to unity DC gain.
// cutoff is a fraction of Nyquist.
inline std::vector<double> design_lowpass(double cutoff) {
    if (!(cutoff > 0.0 && cutoff < 1.0))
        throw std::invalid_argument("lowpass cutoff must lie in (0,1), got " + std::to_string(cutoff));
    constexpr double pi = std::numbers::pi;
    const int half = static_cast<int>(kFirTaps / 2);
    std::vector<double> h(kFirTaps);
    double sum = 0.0;
    // taps are mirrored rather than recomputed so the filter is exactly linear phase
    for (int n = 0; n <= half; ++n) {
        const double x = cutoff * n;
        const double sinc = n == 0 ? 1.0 : std::sin(pi * x) / (pi * x);
        const double window = 0.54 - 0.46 * std::cos(2.0 * pi * (n + half) / (kFirTaps - 1));
        h[half + n] = h[half - n] = cutoff * sinc * window;
    }
    for (double v : h) sum += v;
    for (auto& v : h) v /= sum;
    return h;
}

// Mirror an out-of-range index back into [0, n) without repeating the edge
// sample (…, x2, x1, x0, x1, x2, …).
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const std::ptrdiff_t period = 2 * static_cast<std::ptrdiff_t>(n - 1);
    i %= period;
    if (i < 0) i += period;
    if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
    return static_cast<std::size_t>(i);
}

// Zero-phase (symmetric) FIR with reflect boundary handling; output length
// equals input length.
inline Waveform lowpass_fir(const Waveform& x, double cutoff) {
    const std::vector<double> h = design_lowpass(cutoff);
    const std::size_t n = x.size();
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kFirTaps / 2);
    Waveform y{std::vector<double>(n, 0.0), x.sample_rate};
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::ptrdiff_t m = -half; m <= half; ++m)
            acc += h[m + half] * x.samples[reflect_index(static_cast<std::ptrdiff_t>(t) + m, n)];
        y.samples[t] = acc;
    }
    return y;
}

// Keeps samples 0, R, 2R, ...; the caller is responsible for band-limiting.
inline Waveform decimate(const Waveform& x, std::size_t ratio) {
    if (ratio < 2) throw std::invalid_argument("decimate: ratio must be >= 2");
    Waveform y{{}, x.sample_rate / static_cast<double>(ratio)};
    y.samples.reserve((x.size() + ratio - 1) / ratio);
    for (std::size_t i = 0; i < x.size(); i += ratio) y.samples.push_back(x.samples[i]);
    return y;
}

// Natural cubic spline through (i*R, x_i), evaluated on 0 .. R*len-1. The
// R-1 samples past the last knot continue linearly with the spline's end
// slope, so the output length is exactly R*len.
inline Waveform spline_upsample(const Waveform& x, std::size_t ratio) {
    if (ratio < 2) throw std::invalid_argument("spline_upsample: ratio must be >= 2");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("spline_upsample: need at least 2 samples, got " + std::to_string(n));
    const auto& y = x.samples;

    // Second derivatives at the knots (unit knot spacing), natural boundary.
    std::vector<double> m(n, 0.0);
    if (n > 2) {
        const std::size_t k = n - 2;
        std::vector<double> c(k), d(k);
        for (std::size_t i = 0; i < k; ++i) {
            const double rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
            const double denom = 4.0 - (i > 0 ? c[i - 1] : 0.0);
            c[i] = 1.0 / denom;
            d[i] = (rhs - (i > 0 ? d[i - 1] : 0.0)) / denom;
        }
        m[k] = d[k - 1];
        for (std::size_t i = k - 1; i-- > 0;) m[i + 1] = d[i] - c[i] * m[i + 2];
    }

    Waveform out{std::vector<double>(n * ratio), x.sample_rate * static_cast<double>(ratio)};
    const double r = static_cast<double>(ratio);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double b = (y[i + 1] - y[i]) - (2.0 * m[i] + m[i + 1]) / 6.0;
        const double c2 = m[i] / 2.0;
        const double c3 = (m[i + 1] - m[i]) / 6.0;
        for (std::size_t p = 0; p < ratio; ++p) {
            const double u = static_cast<double>(p) / r;
            out.samples[i * ratio + p] = y[i] + u * (b + u * (c2 + u * c3));
        }
    }
    const std::size_t last = n - 1;
    const double b = (y[last] - y[last - 1]) - (2.0 * m[last - 1] + m[last]) / 6.0;
    const double slope = b + m[last - 1] + (m[last] - m[last - 1]) / 2.0;
    for (std::size_t p = 0; p < ratio; ++p)
        out.samples[last * ratio + p] = y[last] + slope * static_cast<double>(p) / r;
    return out;
}

// |X(w,k)|^2 for non-overlapping rectangular windows; one-sided spectrum.
struct Spectrogram {
    std::size_t windows = 0;
    std::size_t bins = kStftBins;
    std::vector<double> mag_sq;  // windows x bins, row-major

    double at(std::size_t w, std::size_t k) const { return mag_sq[w * bins + k]; }
};

namespace detail {

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
struct PlanDeleter {
    void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};

}  // namespace detail

inline Spectrogram stft_mag_sq(const Waveform& x) {
    if (x.size() < kStftWindow)
        throw std::invalid_argument("stft: signal of " + std::to_string(x.size()) + " samples is shorter than one " +
                                    std::to_string(kStftWindow) + "-sample window");
    Spectrogram s;
    s.windows = x.size() / kStftWindow;
    s.mag_sq.resize(s.windows * kStftBins);

    std::unique_ptr<double, detail::FftwDeleter> in(static_cast<double*>(fftw_malloc(sizeof(double) * kStftWindow)));
    std::unique_ptr<fftw_complex, detail::FftwDeleter> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * kStftBins)));
    std::unique_ptr<std::remove_pointer_t<fftw_plan>, detail::PlanDeleter> plan(
        fftw_plan_dft_r2c_1d(static_cast<int>(kStftWindow), in.get(), out.get(), FFTW_ESTIMATE));

    for (std::size_t w = 0; w < s.windows; ++w) {
        std::copy_n(x.samples.begin() + w * kStftWindow, kStftWindow, in.get());
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < kStftBins; ++k) {
            const double re = out.get()[k][0], im = out.get()[k][1];
            s.mag_sq[w * kStftBins + k] = re * re + im * im;
        }
    }
    return s;
}

}  // namespace dsp
}  // namespace audiosr
