#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace mrigen {

/// Rank-4 extents in (batch, height, width, channels) order.
struct Shape4 {
    std::int64_t n = 0, h = 0, w = 0, c = 0;

    std::int64_t numel() const { return n * h * w * c; }
    bool operator==(const Shape4&) const = default;
};

/// Dense rank-4 array, row-major in (n, h, w, c) order (channels fastest).
template <class T>
struct Tensor {
    Shape4 shape{};
    std::vector<T> v;

    Tensor() = default;
    Tensor(std::int64_t n, std::int64_t h, std::int64_t w, std::int64_t c)
        : shape{n, h, w, c}, v(static_cast<std::size_t>(n * h * w * c), T(0)) {}
    explicit Tensor(Shape4 s) : Tensor(s.n, s.h, s.w, s.c) {}

    std::int64_t numel() const { return shape.numel(); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    std::int64_t index(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) const {
        assert(n >= 0 && n < shape.n && y >= 0 && y < shape.h &&
               x >= 0 && x < shape.w && c >= 0 && c < shape.c);
        return ((n * shape.h + y) * shape.w + x) * shape.c + c;
    }

    T& at(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) {
        return v[static_cast<std::size_t>(index(n, y, x, c))];
    }
    const T& at(std::int64_t n, std::int64_t y, std::int64_t x, std::int64_t c) const {
        return v[static_cast<std::size_t>(index(n, y, x, c))];
    }

    /// Relabels extents without touching storage. New shape must cover the
    /// same element count.
    Tensor reshaped(Shape4 s) const {
        assert(s.numel() == numel());
        Tensor out;
        out.shape = s;
        out.v = v;
        return out;
    }

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape); }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace mrigen
