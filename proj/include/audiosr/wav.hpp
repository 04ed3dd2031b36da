#pragma once

// RIFF/WAVE PCM16 reader and writer. Multichannel input is downmixed to mono
// by averaging; samples are scaled to [-1, 1) by 1/32768.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "audiosr/dsp.hpp"
#include "audiosr/error.hpp"

namespace audiosr {

using AudioClip = Waveform;

namespace wav {

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | p[1] << 8); }

inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace detail

inline AudioClip decode(const std::vector<unsigned char>& bytes) {
    using detail::le16;
    using detail::le32;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError("wav: not a RIFF/WAVE file");

    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t len = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (len > bytes.size() - body) throw FormatError("wav: chunk extends past end of file");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (len < 16) throw FormatError("wav: fmt chunk too short");
            std::uint16_t format = le16(chunk + 8);
            channels = le16(chunk + 10);
            rate = le32(chunk + 12);
            bits = le16(chunk + 22);
            if (format == detail::kFormatExtensible && len >= 40) format = le16(chunk + 8 + 24);
            if (format != detail::kFormatPcm)
                throw FormatError("wav: unsupported codec (format tag " + std::to_string(format) + ")");
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = len;
        }
        pos = body + len + (len & 1u);
    }
    if (!have_fmt) throw FormatError("wav: missing fmt chunk");
    if (!data) throw FormatError("wav: missing data chunk");
    if (bits != 16) throw FormatError("wav: unsupported bit depth " + std::to_string(bits) + " (need 16)");
    if (channels == 0 || rate == 0) throw FormatError("wav: invalid channel count or sample rate");

    const std::size_t frame = 2u * channels;
    const std::size_t frames = data_len / frame;
    AudioClip clip{std::vector<double>(frames), static_cast<double>(rate)};
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c)
            acc += static_cast<std::int16_t>(le16(data + f * frame + 2 * c)) / 32768.0;
        clip.samples[f] = acc / channels;
    }
    return clip;
}

// Saturating round-to-nearest quantization.
inline std::int16_t quantize(double v) {
    const double s = std::nearbyint(v * 32768.0);
    return static_cast<std::int16_t>(std::clamp(s, -32768.0, 32767.0));
}

inline std::vector<unsigned char> encode(const AudioClip& clip) {
    using detail::put16;
    using detail::put32;
    const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
    const std::uint32_t data_len = static_cast<std::uint32_t>(clip.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(out, 16);
    put16(out, detail::kFormatPcm);
    put16(out, 1);
    put32(out, rate);
    put32(out, rate * 2);
    put16(out, 2);
    put16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put32(out, data_len);
    for (double v : clip.samples) put16(out, static_cast<std::uint16_t>(quantize(v)));
    return out;
}

}  // namespace wav

inline AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return wav::decode(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    const auto bytes = wav::encode(clip);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace audiosr
