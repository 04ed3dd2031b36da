#pragma once

// Grayscale portable-graymap rendering of a log-power STFT. Time runs along
// x, frequency along y with the highest bin on the top row.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "audiosr/dsp.hpp"
#include "audiosr/error.hpp"

namespace audiosr {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, top row first

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

constexpr double kSpectrogramFloor = 1e-10;

// 10*log10(|X|^2 + floor), mapped linearly onto [0, 255] per image.
inline GrayImage render_spectrogram(const dsp::Spectrogram& s) {
    GrayImage img{s.windows, s.bins, std::vector<std::uint8_t>(s.windows * s.bins, 0)};
    std::vector<double> db(s.mag_sq.size());
    std::transform(s.mag_sq.begin(), s.mag_sq.end(), db.begin(),
                   [](double p) { return 10.0 * std::log10(p + kSpectrogramFloor); });
    const auto [lo, hi] = std::minmax_element(db.begin(), db.end());
    const double range = *hi - *lo;
    for (std::size_t w = 0; w < s.windows; ++w)
        for (std::size_t k = 0; k < s.bins; ++k) {
            const double v = range > 0 ? (db[w * s.bins + k] - *lo) / range : 0.0;
            img.pixels[(s.bins - 1 - k) * img.width + w] = static_cast<std::uint8_t>(std::lround(255.0 * v));
        }
    return img;
}

// Binary P5 encoding.
inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    const auto bytes = encode_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace audiosr
