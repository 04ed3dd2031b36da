#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "audiosr/dsp.hpp"

using namespace audiosr;
using audiosr::dsp::kStftBins;
using audiosr::dsp::kStftWindow;

namespace {

constexpr double kPi = std::numbers::pi;

Waveform wave(std::vector<double> v, double rate = 16000.0) { return Waveform{std::move(v), rate}; }

Waveform tone(std::size_t n, double cycles_per_sample, double amp = 1.0, double phase = 0.0) {
    Waveform w{std::vector<double>(n), 16000.0};
    for (std::size_t t = 0; t < n; ++t) w.samples[t] = amp * std::sin(2 * kPi * cycles_per_sample * t + phase);
    return w;
}

double rms(const std::vector<double>& v, std::size_t from, std::size_t to) {
    double s = 0;
    for (std::size_t i = from; i < to; ++i) s += v[i] * v[i];
    return std::sqrt(s / static_cast<double>(to - from));
}

// Magnitude of the zero-phase filter response at a normalized frequency
// (fraction of Nyquist), summed directly from the taps.
double response(const std::vector<double>& h, double nu) {
    const int half = static_cast<int>(h.size() / 2);
    double re = 0;
    for (int n = -half; n <= half; ++n) re += h[n + half] * std::cos(kPi * nu * n);
    return std::abs(re);
}

// Natural cubic spline with unit knot spacing via a dense linear solve.
std::vector<double> spline_oracle(const std::vector<double>& y, std::size_t r) {
    const std::size_t n = y.size();
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    a[0][0] = 1.0;
    a[n - 1][n - 1] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        a[i][i - 1] = 1.0;
        a[i][i] = 4.0;
        a[i][i + 1] = 1.0;
        a[i][n] = 6.0 * (y[i + 1] - 2 * y[i] + y[i - 1]);
    }
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t rr = c + 1; rr < n; ++rr) {
            const double f = a[rr][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k) a[rr][k] -= f * a[c][k];
        }
    std::vector<double> m(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = a[i][n];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * m[k];
        m[i] = s / a[i][i];
    }
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t p = 0; p < r; ++p) {
            const double u = static_cast<double>(p) / r;
            const double v = 1.0 - u;
            out.push_back(m[i] * v * v * v / 6 + m[i + 1] * u * u * u / 6 + (y[i] - m[i] / 6) * v +
                          (y[i + 1] - m[i + 1] / 6) * u);
        }
    // end slope: derivative of the last segment at u = 1
    const std::size_t l = n - 1;
    const double slope = m[l] / 2 - (y[l - 1] - m[l - 1] / 6) + (y[l] - m[l] / 6);
    for (std::size_t p = 0; p < r; ++p) out.push_back(y[l] + slope * static_cast<double>(p) / r);
    return out;
}

std::vector<double> dft_mag_sq(const std::vector<double>& x, std::size_t offset) {
    std::vector<double> out(kStftBins);
    for (std::size_t k = 0; k < kStftBins; ++k) {
        std::complex<double> acc = 0;
        for (std::size_t t = 0; t < kStftWindow; ++t)
            acc += x[offset + t] * std::polar(1.0, -2 * kPi * static_cast<double>(k * t % kStftWindow) / kStftWindow);
        out[k] = std::norm(acc);
    }
    return out;
}

}  // namespace

TEST(Lowpass, TapsMatchWindowedSincDesign) {
    const auto h = dsp::design_lowpass(0.5);
    ASSERT_EQ(h.size(), 65u);
    std::vector<double> ref(65);
    double sum = 0;
    for (int n = -32; n <= 32; ++n) {
        const double sinc = n == 0 ? 0.5 : std::sin(kPi * 0.5 * n) / (kPi * n);
        ref[n + 32] = sinc * (0.54 - 0.46 * std::cos(2 * kPi * (n + 32) / 64.0));
        sum += ref[n + 32];
    }
    for (int i = 0; i < 65; ++i) {
        EXPECT_NEAR(h[i], ref[i] / sum, 1e-15);
        EXPECT_EQ(h[i], h[64 - i]);
    }
}

TEST(Lowpass, ConstantPassesWithUnityGain) {
    const auto y = dsp::lowpass_fir(wave(std::vector<double>(300, 5.0)), 0.3);
    ASSERT_EQ(y.size(), 300u);
    for (double v : y.samples) EXPECT_NEAR(v, 5.0, 1e-3);
}

TEST(Lowpass, NyquistAlternationAttenuatedBeyond40dB) {
    EXPECT_LT(20 * std::log10(response(dsp::design_lowpass(0.5), 1.0)), -40.0);
    std::vector<double> alt(1024);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
    const auto y = dsp::lowpass_fir(wave(alt), 0.5);
    EXPECT_LT(20 * std::log10(rms(y.samples, 0, y.size()) / 1.0), -40.0);
}

TEST(Lowpass, PassbandToneWithinHalfDecibel) {
    EXPECT_LT(std::abs(20 * std::log10(response(dsp::design_lowpass(0.5), 0.25))), 0.5);
    const auto x = tone(4096, 0.125);  // 0.25 of Nyquist
    const auto y = dsp::lowpass_fir(x, 0.5);
    const double ratio = rms(y.samples, 64, 4032) / rms(x.samples, 64, 4032);
    EXPECT_LT(std::abs(20 * std::log10(ratio)), 0.5);
}

TEST(Lowpass, LinearAndTimeInvariant) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<double> a(500), b(500);
    for (auto& v : a) v = nd(rng);
    for (auto& v : b) v = nd(rng);
    std::vector<double> mix(500);
    for (std::size_t i = 0; i < 500; ++i) mix[i] = 2.0 * a[i] - 3.0 * b[i];
    const auto fa = dsp::lowpass_fir(wave(a), 0.4), fb = dsp::lowpass_fir(wave(b), 0.4);
    const auto fm = dsp::lowpass_fir(wave(mix), 0.4);
    for (std::size_t i = 0; i < 500; ++i) EXPECT_NEAR(fm.samples[i], 2.0 * fa.samples[i] - 3.0 * fb.samples[i], 1e-9);
    // away from the edges a shift of the input shifts the output
    std::vector<double> shifted(500, 0.0);
    std::copy(a.begin(), a.begin() + 480, shifted.begin() + 20);
    const auto fs = dsp::lowpass_fir(wave(shifted), 0.4);
    for (std::size_t i = 100; i < 440; ++i) EXPECT_NEAR(fs.samples[i + 20], fa.samples[i], 1e-12);
}

TEST(Lowpass, RejectsCutoffOutOfRange) {
    EXPECT_THROW(dsp::lowpass_fir(wave({1, 2, 3}), 0.0), std::invalid_argument);
    EXPECT_THROW(dsp::lowpass_fir(wave({1, 2, 3}), 1.0), std::invalid_argument);
    EXPECT_THROW(dsp::lowpass_fir(wave({1, 2, 3}), -0.5), std::invalid_argument);
}

TEST(Lowpass, ReflectIndexDoesNotRepeatEdge) {
    EXPECT_EQ(dsp::reflect_index(-1, 5), 1u);
    EXPECT_EQ(dsp::reflect_index(-2, 5), 2u);
    EXPECT_EQ(dsp::reflect_index(5, 5), 3u);
    EXPECT_EQ(dsp::reflect_index(3, 5), 3u);
    EXPECT_EQ(dsp::reflect_index(-9, 5), 1u);
}

TEST(Decimate, KeepsEveryRthSample) {
    const auto y = dsp::decimate(wave({1, 2, 3, 4, 5, 6}, 16000), 2);
    EXPECT_EQ(y.samples, (std::vector<double>{1, 3, 5}));
    EXPECT_EQ(y.sample_rate, 8000.0);
    EXPECT_EQ(dsp::decimate(wave(std::vector<double>(9, 0.0)), 3).size(), 3u);
    EXPECT_THROW(dsp::decimate(wave({1, 2}), 1), std::invalid_argument);
}

TEST(Decimate, UndoesSplineUpsampleOnSmoothSignals) {
    for (std::size_t r : {2u, 3u, 4u, 6u}) {
        const auto x = tone(200, 0.01, 0.7, 0.3);
        const auto y = dsp::decimate(dsp::spline_upsample(x, r), r);
        ASSERT_EQ(y.size(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.samples[i], x.samples[i], 1e-6);
        // and exactly at the knots
        EXPECT_EQ(y.samples, x.samples);
    }
}

TEST(Spline, RampAndConstant) {
    EXPECT_EQ(dsp::spline_upsample(wave({0, 1, 2, 3}), 2).samples, (std::vector<double>{0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5}));
    const auto c = dsp::spline_upsample(wave({5, 5, 5}), 3);
    ASSERT_EQ(c.size(), 9u);
    for (double v : c.samples) EXPECT_DOUBLE_EQ(v, 5.0);
}

TEST(Spline, SampleRateAndErrors) {
    EXPECT_EQ(dsp::spline_upsample(wave({0, 1, 2, 3}, 8000), 2).sample_rate, 16000.0);
    EXPECT_THROW(dsp::spline_upsample(wave({1}), 2), std::invalid_argument);
    EXPECT_THROW(dsp::spline_upsample(wave({1, 2, 3, 4}), 1), std::invalid_argument);
}

TEST(Spline, MatchesDenseSolveOracle) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    for (std::size_t n : {2u, 3u, 4u, 17u, 60u})
        for (std::size_t r : {2u, 4u, 6u}) {
            std::vector<double> y(n);
            for (auto& v : y) v = nd(rng);
            const auto got = dsp::spline_upsample(wave(y), r);
            const auto ref = spline_oracle(y, r);
            ASSERT_EQ(got.size(), ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(got.samples[i], ref[i], 1e-12) << n << " " << r;
        }
}

TEST(Spline, LowFrequencySinusoidInterpolationError) {
    // LR sampled at 1/R of the dense grid; compare against the analytic tone.
    const std::size_t r = 2, n = 400;
    const double f = 0.01;  // cycles per dense sample
    Waveform lr{std::vector<double>(n), 8000};
    for (std::size_t i = 0; i < n; ++i) lr.samples[i] = std::sin(2 * kPi * f * static_cast<double>(i * r));
    const auto up = dsp::spline_upsample(lr, r);
    double worst = 0;
    for (std::size_t t = 0; t < (n - 1) * r; ++t)
        worst = std::max(worst, std::abs(up.samples[t] - std::sin(2 * kPi * f * static_cast<double>(t))));
    EXPECT_LT(worst, 1e-3);
}

TEST(Stft, ConstantSignalEnergyInDcBin) {
    const auto s = dsp::stft_mag_sq(wave(std::vector<double>(2048, 0.5)));
    ASSERT_EQ(s.windows, 1u);
    ASSERT_EQ(s.bins, 1025u);
    const double dc = std::pow(2048 * 0.5, 2);
    EXPECT_NEAR(s.at(0, 0), dc, 1e-6 * dc);
    for (std::size_t k = 1; k < s.bins; ++k) EXPECT_LT(s.at(0, k), 1e-6 * dc);
}

TEST(Stft, IntegerBinToneConcentratesEnergy) {
    const auto s = dsp::stft_mag_sq(tone(2048, 8.0 / 2048, 1.0, 0.4));
    double total = 0;
    for (std::size_t k = 0; k < s.bins; ++k) total += s.at(0, k);
    EXPECT_GT(s.at(0, 8) / total, 0.999);
}

TEST(Stft, WindowCountAndShortInput) {
    EXPECT_EQ(dsp::stft_mag_sq(wave(std::vector<double>(5000, 0.1))).windows, 2u);
    EXPECT_THROW(dsp::stft_mag_sq(wave(std::vector<double>(2047, 0.1))), std::invalid_argument);
}

TEST(Stft, MatchesNaiveDft) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> x(4200);
    for (auto& v : x) v = nd(rng);
    const auto s = dsp::stft_mag_sq(wave(x));
    ASSERT_EQ(s.windows, 2u);
    for (std::size_t w = 0; w < 2; ++w) {
        const auto ref = dft_mag_sq(x, w * 2048);
        for (std::size_t k = 0; k < kStftBins; ++k) EXPECT_NEAR(s.at(w, k), ref[k], 1e-8 * (1 + ref[k]));
    }
}

TEST(Stft, ParsevalPerWindow) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> x(3 * 2048);
    for (auto& v : x) v = u(rng);
    const auto s = dsp::stft_mag_sq(wave(x));
    for (std::size_t w = 0; w < s.windows; ++w) {
        double energy = 0, spec = 0;
        for (std::size_t t = 0; t < 2048; ++t) energy += x[w * 2048 + t] * x[w * 2048 + t];
        for (std::size_t k = 0; k < s.bins; ++k) spec += (k == 0 || k == 1024 ? 1.0 : 2.0) * s.at(w, k);
        EXPECT_NEAR(spec, 2048 * energy, 1e-4 * 2048 * energy);
        for (std::size_t k = 0; k < s.bins; ++k) EXPECT_GE(s.at(w, k), 0.0);
    }
}
