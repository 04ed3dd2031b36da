#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace audiosr {

// (batch, channels, time). Weights reuse the same layout as
// (out_channels, in_channels, width).
struct Shape {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t time = 0;

    constexpr std::size_t size() const { return batch * channels * time; }
    constexpr bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.batch) + "," + std::to_string(s.channels) + "," +
           std::to_string(s.time) + ")";
}

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << to_string(s); }

template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size())
            throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                        " does not match shape " + to_string(shape_));
    }
    Tensor(Shape shape, std::initializer_list<T> data)
        : Tensor(shape, std::vector<T>(data)) {}

    static Tensor scalar(T v) { return Tensor({1, 1, 1}, std::vector<T>{v}); }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t b, std::size_t c, std::size_t t) { return data_[index(b, c, t)]; }
    const T& at(std::size_t b, std::size_t c, std::size_t t) const { return data_[index(b, c, t)]; }

    // Contiguous time series of one (batch, channel) pair.
    std::span<T> row(std::size_t b, std::size_t c) {
        return std::span<T>(data_).subspan(index(b, c, 0), shape_.time);
    }
    std::span<const T> row(std::size_t b, std::size_t c) const {
        return std::span<const T>(data_).subspan(index(b, c, 0), shape_.time);
    }

    T item() const {
        if (data_.size() != 1) throw std::invalid_argument("item() on non-scalar tensor " + to_string(shape_));
        return data_[0];
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <class U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Tensor<U>(shape_, std::move(out));
    }

    bool operator==(const Tensor&) const = default;

private:
    std::size_t index(std::size_t b, std::size_t c, std::size_t t) const {
        return (b * shape_.channels + c) * shape_.time + t;
    }

    Shape shape_{};
    std::vector<T> data_;
};

}  // namespace audiosr
