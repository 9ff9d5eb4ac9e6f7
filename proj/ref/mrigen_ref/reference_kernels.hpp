#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mrigen/tensor.hpp"

// Naive single-threaded twins of the kernels in mrigen/kernels.hpp, written
// directly from the operator definitions with no loop restructuring. Tests
// compare the parallel kernels against these; the benchmark times both.
namespace mrigen::ref {

template <class T>
Tensor<T> dense_forward(const Tensor<T>& x, const std::vector<T>& W, const std::vector<T>& b,
                        std::int64_t d_in, std::int64_t d_out) {
    Tensor<T> y(x.shape.n, 1, 1, d_out);
    for (std::int64_t n = 0; n < x.shape.n; ++n)
        for (std::int64_t j = 0; j < d_out; ++j) {
            T acc = b[static_cast<std::size_t>(j)];
            for (std::int64_t i = 0; i < d_in; ++i)
                acc += x.data()[n * d_in + i] * W[static_cast<std::size_t>(i * d_out + j)];
            y.data()[n * d_out + j] = acc;
        }
    return y;
}

/// Direct cross-correlation with same padding (floor before, ceil after).
template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const std::vector<T>& W, const std::vector<T>& b,
                         std::int64_t kh, std::int64_t kw, std::int64_t c_out) {
    const std::int64_t N = x.shape.n, H = x.shape.h, Wd = x.shape.w, Ci = x.shape.c;
    const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;
    Tensor<T> y(N, H, Wd, c_out);
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < H; ++oy)
            for (std::int64_t ox = 0; ox < Wd; ++ox)
                for (std::int64_t co = 0; co < c_out; ++co) {
                    T acc = b[static_cast<std::size_t>(co)];
                    for (std::int64_t ky = 0; ky < kh; ++ky)
                        for (std::int64_t kx = 0; kx < kw; ++kx)
                            for (std::int64_t ci = 0; ci < Ci; ++ci) {
                                const std::int64_t iy = oy + ky - pt;
                                const std::int64_t ix = ox + kx - pl;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= Wd) continue;
                                acc += x.at(n, iy, ix, ci) *
                                       W[static_cast<std::size_t>(((ky * kw + kx) * Ci + ci) *
                                                                  c_out + co)];
                            }
                    y.at(n, oy, ox, co) = acc;
                }
    return y;
}

template <class T>
Tensor<T> conv2d_backward_input(const std::vector<T>& W, std::int64_t kh, std::int64_t kw,
                                std::int64_t c_in, std::int64_t c_out, const Tensor<T>& dy) {
    const std::int64_t N = dy.shape.n, H = dy.shape.h, Wd = dy.shape.w;
    const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;
    Tensor<T> dx(N, H, Wd, c_in);
    // Scatter the forward relation: each output consumed x[iy][ix], so its
    // gradient flows back through the same weight.
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < H; ++oy)
            for (std::int64_t ox = 0; ox < Wd; ++ox)
                for (std::int64_t co = 0; co < c_out; ++co) {
                    const T dyv = dy.at(n, oy, ox, co);
                    for (std::int64_t ky = 0; ky < kh; ++ky)
                        for (std::int64_t kx = 0; kx < kw; ++kx)
                            for (std::int64_t ci = 0; ci < c_in; ++ci) {
                                const std::int64_t iy = oy + ky - pt;
                                const std::int64_t ix = ox + kx - pl;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= Wd) continue;
                                dx.at(n, iy, ix, ci) +=
                                    dyv * W[static_cast<std::size_t>(
                                               ((ky * kw + kx) * c_in + ci) * c_out + co)];
                            }
                }
    return dx;
}

template <class T>
void conv2d_backward_params(const Tensor<T>& x, const Tensor<T>& dy, std::int64_t kh,
                            std::int64_t kw, std::vector<T>& dW, std::vector<T>& db) {
    const std::int64_t N = x.shape.n, H = x.shape.h, Wd = x.shape.w, Ci = x.shape.c;
    const std::int64_t Co = dy.shape.c;
    const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < H; ++oy)
            for (std::int64_t ox = 0; ox < Wd; ++ox)
                for (std::int64_t co = 0; co < Co; ++co) {
                    const T dyv = dy.at(n, oy, ox, co);
                    db[static_cast<std::size_t>(co)] += dyv;
                    for (std::int64_t ky = 0; ky < kh; ++ky)
                        for (std::int64_t kx = 0; kx < kw; ++kx)
                            for (std::int64_t ci = 0; ci < Ci; ++ci) {
                                const std::int64_t iy = oy + ky - pt;
                                const std::int64_t ix = ox + kx - pl;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= Wd) continue;
                                dW[static_cast<std::size_t>(((ky * kw + kx) * Ci + ci) * Co +
                                                            co)] += x.at(n, iy, ix, ci) * dyv;
                            }
                }
}

template <class T>
Tensor<T> upsample2x_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape.n, 2 * x.shape.h, 2 * x.shape.w, x.shape.c);
    for (std::int64_t n = 0; n < y.shape.n; ++n)
        for (std::int64_t oy = 0; oy < y.shape.h; ++oy)
            for (std::int64_t ox = 0; ox < y.shape.w; ++ox)
                for (std::int64_t c = 0; c < y.shape.c; ++c)
                    y.at(n, oy, ox, c) = x.at(n, oy / 2, ox / 2, c);
    return y;
}

template <class T>
Tensor<T> upsample2x_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape.n, dy.shape.h / 2, dy.shape.w / 2, dy.shape.c);
    for (std::int64_t n = 0; n < dy.shape.n; ++n)
        for (std::int64_t oy = 0; oy < dy.shape.h; ++oy)
            for (std::int64_t ox = 0; ox < dy.shape.w; ++ox)
                for (std::int64_t c = 0; c < dy.shape.c; ++c)
                    dx.at(n, oy / 2, ox / 2, c) += dy.at(n, oy, ox, c);
    return dx;
}

template <class T>
Tensor<T> avgpool2x_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape.n, x.shape.h / 2, x.shape.w / 2, x.shape.c);
    for (std::int64_t n = 0; n < x.shape.n; ++n)
        for (std::int64_t iy = 0; iy < x.shape.h; ++iy)
            for (std::int64_t ix = 0; ix < x.shape.w; ++ix)
                for (std::int64_t c = 0; c < x.shape.c; ++c)
                    y.at(n, iy / 2, ix / 2, c) += x.at(n, iy, ix, c) * T(0.25);
    return y;
}

template <class T>
Tensor<T> avgpool2x_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.shape.n, dy.shape.h * 2, dy.shape.w * 2, dy.shape.c);
    for (std::int64_t n = 0; n < dx.shape.n; ++n)
        for (std::int64_t iy = 0; iy < dx.shape.h; ++iy)
            for (std::int64_t ix = 0; ix < dx.shape.w; ++ix)
                for (std::int64_t c = 0; c < dx.shape.c; ++c)
                    dx.at(n, iy, ix, c) = dy.at(n, iy / 2, ix / 2, c) * T(0.25);
    return dx;
}

template <class T>
Tensor<T> batchnorm_train_forward(const Tensor<T>& x, const std::vector<T>& gamma,
                                  const std::vector<T>& beta, T eps) {
    const std::int64_t C = x.shape.c;
    const std::int64_t M = x.shape.n * x.shape.h * x.shape.w;
    Tensor<T> y(x.shape);
    for (std::int64_t c = 0; c < C; ++c) {
        T mean = T(0);
        for (std::int64_t m = 0; m < M; ++m) mean += x.data()[m * C + c];
        mean /= static_cast<T>(M);
        T var = T(0);
        for (std::int64_t m = 0; m < M; ++m) {
            const T d = x.data()[m * C + c] - mean;
            var += d * d;
        }
        var /= static_cast<T>(M);
        for (std::int64_t m = 0; m < M; ++m)
            y.data()[m * C + c] = gamma[static_cast<std::size_t>(c)] *
                                      (x.data()[m * C + c] - mean) / std::sqrt(var + eps) +
                                  beta[static_cast<std::size_t>(c)];
    }
    return y;
}

}  // namespace mrigen::ref
