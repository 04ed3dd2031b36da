#pragma once

// Versioned binary training snapshot.
//
// Layout (all integers and floats little-endian; str = u32 length + bytes):
//
//   "MUGN" u32 version u64 step str rng_state
//   u32 n_meta   { str key, str value }
//   u32 n_models {
//       str name
//       u32 n_arch   { str key, i64 value }
//       u32 n_params { str name, u32 d0, u32 d1, u32 d2, f32[d0*d1*d2] }
//       f64 lr, f64 beta1, f64 beta2, f64 eps, u64 adam_step
//       u32 n_moments { str name, u32 d0, u32 d1, u32 d2, f32[] m, f32[] v }
//   }

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "audiosr/adam.hpp"
#include "audiosr/error.hpp"
#include "audiosr/params.hpp"

namespace audiosr {

constexpr char kCheckpointMagic[4] = {'M', 'U', 'G', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct ModelState {
    std::string name;
    std::map<std::string, std::int64_t> arch;
    ParamMap<float> params;
    AdamState<float> adam;

    bool operator==(const ModelState&) const = default;
};

struct Checkpoint {
    std::uint64_t step = 0;
    std::string rng_state;
    std::map<std::string, std::string> meta;
    std::vector<ModelState> models;

    bool has_model(const std::string& name) const {
        for (const auto& m : models)
            if (m.name == name) return true;
        return false;
    }
    const ModelState& model(const std::string& name) const {
        for (const auto& m : models)
            if (m.name == name) return m;
        throw FormatError("checkpoint has no model '" + name + "'");
    }
    ModelState& model(const std::string& name) {
        return const_cast<ModelState&>(static_cast<const Checkpoint&>(*this).model(name));
    }

    bool operator==(const Checkpoint&) const = default;
};

namespace ckpt_detail {

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void tensor_dims(const Shape& s) {
        u32(static_cast<std::uint32_t>(s.batch));
        u32(static_cast<std::uint32_t>(s.channels));
        u32(static_cast<std::uint32_t>(s.time));
    }
    void floats(const Tensor<float>& t) {
        for (float v : t.data()) f32(v);
    }
    std::vector<char> take() { return std::move(bytes_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::vector<char> bytes_;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& b) : b_(b) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(b_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    Shape dims() {
        Shape s;
        s.batch = u32();
        s.channels = u32();
        s.time = u32();
        if (s.batch != 0 && s.channels != 0 && s.time != 0 && s.size() / s.batch / s.channels != s.time)
            throw FormatError("checkpoint: tensor dimensions overflow");
        need(s.size() * 4);
        return s;
    }
    Tensor<float> floats(Shape s) {
        Tensor<float> t(s);
        for (auto& v : t.storage()) v = f32();
        return t;
    }
    // Bounds an element count so a corrupt header cannot trigger a huge loop.
    std::uint32_t count() {
        const std::uint32_t n = u32();
        if (n > remaining()) throw FormatError("checkpoint: implausible element count");
        return n;
    }
    void magic() {
        need(4);
        if (std::memcmp(b_.data(), kCheckpointMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
        pos_ += 4;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (n > remaining()) throw FormatError("checkpoint: truncated file");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::vector<char>& b_;
    std::size_t pos_ = 0;
};

}  // namespace ckpt_detail

inline std::vector<char> encode_checkpoint(const Checkpoint& c) {
    ckpt_detail::Writer w;
    w.raw(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);
    w.u64(c.step);
    w.str(c.rng_state);
    w.u32(static_cast<std::uint32_t>(c.meta.size()));
    for (const auto& [k, v] : c.meta) {
        w.str(k);
        w.str(v);
    }
    w.u32(static_cast<std::uint32_t>(c.models.size()));
    for (const auto& m : c.models) {
        w.str(m.name);
        w.u32(static_cast<std::uint32_t>(m.arch.size()));
        for (const auto& [k, v] : m.arch) {
            w.str(k);
            w.i64(v);
        }
        w.u32(static_cast<std::uint32_t>(m.params.size()));
        for (const auto& [name, t] : m.params) {
            w.str(name);
            w.tensor_dims(t.shape());
            w.floats(t);
        }
        w.f64(m.adam.config.lr);
        w.f64(m.adam.config.beta1);
        w.f64(m.adam.config.beta2);
        w.f64(m.adam.config.eps);
        w.u64(m.adam.step);
        w.u32(static_cast<std::uint32_t>(m.adam.m.size()));
        for (const auto& [name, mt] : m.adam.m) {
            const Tensor<float>& vt = m.adam.v.at(name);
            w.str(name);
            w.tensor_dims(mt.shape());
            w.floats(mt);
            w.floats(vt);
        }
    }
    return w.take();
}

inline Checkpoint decode_checkpoint(const std::vector<char>& bytes) {
    ckpt_detail::Reader r(bytes);
    r.magic();
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
    Checkpoint c;
    c.step = r.u64();
    c.rng_state = r.str();
    for (std::uint32_t i = 0, n = r.count(); i < n; ++i) {
        std::string k = r.str();
        c.meta[k] = r.str();
    }
    for (std::uint32_t i = 0, n = r.count(); i < n; ++i) {
        ModelState m;
        m.name = r.str();
        for (std::uint32_t j = 0, na = r.count(); j < na; ++j) {
            std::string k = r.str();
            m.arch[k] = r.i64();
        }
        for (std::uint32_t j = 0, np = r.count(); j < np; ++j) {
            std::string name = r.str();
            Shape s = r.dims();
            m.params.emplace(name, r.floats(s));
        }
        m.adam.config.lr = r.f64();
        m.adam.config.beta1 = r.f64();
        m.adam.config.beta2 = r.f64();
        m.adam.config.eps = r.f64();
        m.adam.step = r.u64();
        for (std::uint32_t j = 0, nm = r.count(); j < nm; ++j) {
            std::string name = r.str();
            Shape s = r.dims();
            m.adam.m.emplace(name, r.floats(s));
            m.adam.v.emplace(name, r.floats(s));
        }
        c.models.push_back(std::move(m));
    }
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after final model");
    return c;
}

// Written to a temporary sibling and renamed into place.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    const auto bytes = encode_checkpoint(c);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_checkpoint(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace audiosr
