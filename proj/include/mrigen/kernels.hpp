#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mrigen/rng.hpp"
#include "mrigen/tensor.hpp"

// Data-parallel forward/backward kernels. Every loop parallelizes over
// output elements only, with a fixed serial reduction order per element, so
// results are bitwise independent of the thread count. A naive serial twin
// of each kernel lives in ref/ for testing and benchmarking.
namespace mrigen::kernels {

enum class Act { relu, leaky_relu, tanh, sigmoid };

// ---------------------------------------------------------------- dense ---

template <class T>
void dense_forward(const Tensor<T>& x, const std::vector<T>& W, const std::vector<T>& b,
                   std::int64_t d_in, std::int64_t d_out, Tensor<T>& y) {
    const std::int64_t N = x.shape.n;
    y = Tensor<T>(N, 1, 1, d_out);
#pragma omp parallel for
    for (std::int64_t n = 0; n < N; ++n) {
        const T* xp = x.data() + n * d_in;
        T* yp = y.data() + n * d_out;
        for (std::int64_t j = 0; j < d_out; ++j) yp[j] = b[static_cast<std::size_t>(j)];
        for (std::int64_t i = 0; i < d_in; ++i) {
            const T xv = xp[i];
            const T* wrow = W.data() + i * d_out;
            for (std::int64_t j = 0; j < d_out; ++j) yp[j] += xv * wrow[j];
        }
    }
}

template <class T>
void dense_backward(const Tensor<T>& x, const std::vector<T>& W, std::int64_t d_in,
                    std::int64_t d_out, const Tensor<T>& dy, Tensor<T>& dx, std::vector<T>& dW,
                    std::vector<T>& db) {
    const std::int64_t N = x.shape.n;
    dx = Tensor<T>(N, 1, 1, d_in);

#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t i = 0; i < d_in; ++i) {
            const T* dyp = dy.data() + n * d_out;
            const T* wrow = W.data() + i * d_out;
            T acc = T(0);
            for (std::int64_t j = 0; j < d_out; ++j) acc += wrow[j] * dyp[j];
            dx.data()[n * d_in + i] = acc;
        }

#pragma omp parallel for
    for (std::int64_t i = 0; i < d_in; ++i) {
        T* dwrow = dW.data() + i * d_out;
        for (std::int64_t n = 0; n < N; ++n) {
            const T xv = x.data()[n * d_in + i];
            const T* dyp = dy.data() + n * d_out;
            for (std::int64_t j = 0; j < d_out; ++j) dwrow[j] += xv * dyp[j];
        }
    }

    for (std::int64_t n = 0; n < N; ++n) {
        const T* dyp = dy.data() + n * d_out;
        for (std::int64_t j = 0; j < d_out; ++j) db[static_cast<std::size_t>(j)] += dyp[j];
    }
}

// --------------------------------------------------------------- conv2d ---
// Cross-correlation with "same" zero padding, stride 1. Kernel layout is
// (kh, kw, c_in, c_out), channels-fastest like the tensors. Even kernels pad
// floor((k-1)/2) before and the remainder after.

template <class T>
void conv2d_forward(const Tensor<T>& x, const std::vector<T>& W, const std::vector<T>& b,
                    std::int64_t kh, std::int64_t kw, std::int64_t c_out, Tensor<T>& y) {
    const std::int64_t N = x.shape.n, H = x.shape.h, Wd = x.shape.w, Ci = x.shape.c;
    const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;
    y = Tensor<T>(N, H, Wd, c_out);

#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < H; ++oy)
            for (std::int64_t ox = 0; ox < Wd; ++ox) {
                T* acc = &y.at(n, oy, ox, 0);
                for (std::int64_t co = 0; co < c_out; ++co) acc[co] = b[static_cast<std::size_t>(co)];
                for (std::int64_t ky = 0; ky < kh; ++ky) {
                    const std::int64_t iy = oy + ky - pt;
                    if (iy < 0 || iy >= H) continue;
                    for (std::int64_t kx = 0; kx < kw; ++kx) {
                        const std::int64_t ix = ox + kx - pl;
                        if (ix < 0 || ix >= Wd) continue;
                        const T* xp = &x.at(n, iy, ix, 0);
                        const T* wp = W.data() + ((ky * kw + kx) * Ci) * c_out;
                        for (std::int64_t ci = 0; ci < Ci; ++ci) {
                            const T xv = xp[ci];
                            const T* wrow = wp + ci * c_out;
                            for (std::int64_t co = 0; co < c_out; ++co) acc[co] += xv * wrow[co];
                        }
                    }
                }
            }
}

template <class T>
void conv2d_backward_input(const std::vector<T>& W, std::int64_t kh, std::int64_t kw,
                           std::int64_t c_in, std::int64_t c_out, const Tensor<T>& dy,
                           Tensor<T>& dx) {
    const std::int64_t N = dy.shape.n, H = dy.shape.h, Wd = dy.shape.w;
    const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;
    dx = Tensor<T>(N, H, Wd, c_in);

    // Transposed copy (ky, kw, c_out, c_in) so the inner loop runs contiguous.
    std::vector<T> Wt(W.size());
    for (std::int64_t ky = 0; ky < kh; ++ky)
        for (std::int64_t kx = 0; kx < kw; ++kx)
            for (std::int64_t ci = 0; ci < c_in; ++ci)
                for (std::int64_t co = 0; co < c_out; ++co)
                    Wt[((ky * kw + kx) * c_out + co) * c_in + ci] =
                        W[((ky * kw + kx) * c_in + ci) * c_out + co];

#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t iy = 0; iy < H; ++iy)
            for (std::int64_t ix = 0; ix < Wd; ++ix) {
                T* acc = &dx.at(n, iy, ix, 0);
                for (std::int64_t ky = 0; ky < kh; ++ky) {
                    const std::int64_t oy = iy - ky + pt;
                    if (oy < 0 || oy >= H) continue;
                    for (std::int64_t kx = 0; kx < kw; ++kx) {
                        const std::int64_t ox = ix - kx + pl;
                        if (ox < 0 || ox >= Wd) continue;
                        const T* dyp = &dy.at(n, oy, ox, 0);
                        const T* wp = Wt.data() + ((ky * kw + kx) * c_out) * c_in;
                        for (std::int64_t co = 0; co < c_out; ++co) {
                            const T dyv = dyp[co];
                            const T* wrow = wp + co * c_in;
                            for (std::int64_t ci = 0; ci < c_in; ++ci) acc[ci] += dyv * wrow[ci];
                        }
                    }
                }
            }
}

template <class T>
void conv2d_backward_params(const Tensor<T>& x, const Tensor<T>& dy, std::int64_t kh,
                            std::int64_t kw, std::vector<T>& dW, std::vector<T>& db) {
    const std::int64_t N = x.shape.n, H = x.shape.h, Wd = x.shape.w, Ci = x.shape.c;
    const std::int64_t Co = dy.shape.c;
    const std::int64_t pt = (kh - 1) / 2, pl = (kw - 1) / 2;

#pragma omp parallel for collapse(2)
    for (std::int64_t ky = 0; ky < kh; ++ky)
        for (std::int64_t kx = 0; kx < kw; ++kx) {
            T* dwk = dW.data() + ((ky * kw + kx) * Ci) * Co;
            for (std::int64_t n = 0; n < N; ++n)
                for (std::int64_t oy = 0; oy < H; ++oy) {
                    const std::int64_t iy = oy + ky - pt;
                    if (iy < 0 || iy >= H) continue;
                    for (std::int64_t ox = 0; ox < Wd; ++ox) {
                        const std::int64_t ix = ox + kx - pl;
                        if (ix < 0 || ix >= Wd) continue;
                        const T* xp = &x.at(n, iy, ix, 0);
                        const T* dyp = &dy.at(n, oy, ox, 0);
                        for (std::int64_t ci = 0; ci < Ci; ++ci) {
                            const T xv = xp[ci];
                            T* dwrow = dwk + ci * Co;
                            for (std::int64_t co = 0; co < Co; ++co) dwrow[co] += xv * dyp[co];
                        }
                    }
                }
        }

    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < H; ++oy)
            for (std::int64_t ox = 0; ox < Wd; ++ox) {
                const T* dyp = &dy.at(n, oy, ox, 0);
                for (std::int64_t co = 0; co < Co; ++co) db[static_cast<std::size_t>(co)] += dyp[co];
            }
}

// ------------------------------------------------------ spatial resizing ---

template <class T>
void upsample2x_forward(const Tensor<T>& x, Tensor<T>& y) {
    const std::int64_t N = x.shape.n, H = x.shape.h, W = x.shape.w, C = x.shape.c;
    y = Tensor<T>(N, 2 * H, 2 * W, C);
#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < 2 * H; ++oy) {
            const std::int64_t iy = oy / 2;
            for (std::int64_t ox = 0; ox < 2 * W; ++ox) {
                const T* src = &x.at(n, iy, ox / 2, 0);
                T* dst = &y.at(n, oy, ox, 0);
                for (std::int64_t c = 0; c < C; ++c) dst[c] = src[c];
            }
        }
}

template <class T>
void upsample2x_backward(const Tensor<T>& dy, Tensor<T>& dx) {
    const std::int64_t N = dy.shape.n, H = dy.shape.h / 2, W = dy.shape.w / 2, C = dy.shape.c;
    dx = Tensor<T>(N, H, W, C);
#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t iy = 0; iy < H; ++iy)
            for (std::int64_t ix = 0; ix < W; ++ix) {
                T* acc = &dx.at(n, iy, ix, 0);
                for (std::int64_t c = 0; c < C; ++c) {
                    acc[c] = dy.at(n, 2 * iy, 2 * ix, c) + dy.at(n, 2 * iy, 2 * ix + 1, c) +
                             dy.at(n, 2 * iy + 1, 2 * ix, c) + dy.at(n, 2 * iy + 1, 2 * ix + 1, c);
                }
            }
}

template <class T>
void avgpool2x_forward(const Tensor<T>& x, Tensor<T>& y) {
    const std::int64_t N = x.shape.n, H = x.shape.h / 2, W = x.shape.w / 2, C = x.shape.c;
    y = Tensor<T>(N, H, W, C);
#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t oy = 0; oy < H; ++oy)
            for (std::int64_t ox = 0; ox < W; ++ox) {
                T* dst = &y.at(n, oy, ox, 0);
                for (std::int64_t c = 0; c < C; ++c) {
                    dst[c] = (x.at(n, 2 * oy, 2 * ox, c) + x.at(n, 2 * oy, 2 * ox + 1, c) +
                              x.at(n, 2 * oy + 1, 2 * ox, c) + x.at(n, 2 * oy + 1, 2 * ox + 1, c)) *
                             T(0.25);
                }
            }
}

template <class T>
void avgpool2x_backward(const Tensor<T>& dy, Tensor<T>& dx) {
    const std::int64_t N = dy.shape.n, H = dy.shape.h, W = dy.shape.w, C = dy.shape.c;
    dx = Tensor<T>(N, 2 * H, 2 * W, C);
#pragma omp parallel for collapse(2)
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t iy = 0; iy < 2 * H; ++iy)
            for (std::int64_t ix = 0; ix < 2 * W; ++ix) {
                const T* src = &dy.at(n, iy / 2, ix / 2, 0);
                T* dst = &dx.at(n, iy, ix, 0);
                for (std::int64_t c = 0; c < C; ++c) dst[c] = src[c] * T(0.25);
            }
}

// ----------------------------------------------------------- batch norm ---

template <class T>
struct BnCache {
    std::vector<T> mean, var;  // per channel, biased variance
};

/// Per-channel statistics over (n, h, w). Returns the cache needed by the
/// backward pass; running-stat bookkeeping belongs to the layer.
template <class T>
void batchnorm_train_forward(const Tensor<T>& x, const std::vector<T>& gamma,
                             const std::vector<T>& beta, T eps, Tensor<T>& y, BnCache<T>& cache) {
    const std::int64_t C = x.shape.c;
    const std::int64_t M = x.shape.n * x.shape.h * x.shape.w;
    cache.mean.assign(static_cast<std::size_t>(C), T(0));
    cache.var.assign(static_cast<std::size_t>(C), T(0));
    y = Tensor<T>(x.shape);

#pragma omp parallel for
    for (std::int64_t c = 0; c < C; ++c) {
        T sum = T(0);
        for (std::int64_t m = 0; m < M; ++m) sum += x.data()[m * C + c];
        const T mean = sum / static_cast<T>(M);
        T sq = T(0);
        for (std::int64_t m = 0; m < M; ++m) {
            const T d = x.data()[m * C + c] - mean;
            sq += d * d;
        }
        const T var = sq / static_cast<T>(M);
        cache.mean[static_cast<std::size_t>(c)] = mean;
        cache.var[static_cast<std::size_t>(c)] = var;
        const T inv = T(1) / std::sqrt(var + eps);
        const T g = gamma[static_cast<std::size_t>(c)], bt = beta[static_cast<std::size_t>(c)];
        for (std::int64_t m = 0; m < M; ++m)
            y.data()[m * C + c] = g * (x.data()[m * C + c] - mean) * inv + bt;
    }
}

template <class T>
void batchnorm_infer_forward(const Tensor<T>& x, const std::vector<T>& gamma,
                             const std::vector<T>& beta, const std::vector<T>& running_mean,
                             const std::vector<T>& running_var, T eps, Tensor<T>& y) {
    const std::int64_t C = x.shape.c;
    const std::int64_t M = x.shape.n * x.shape.h * x.shape.w;
    y = Tensor<T>(x.shape);
#pragma omp parallel for
    for (std::int64_t c = 0; c < C; ++c) {
        const T inv = T(1) / std::sqrt(running_var[static_cast<std::size_t>(c)] + eps);
        const T g = gamma[static_cast<std::size_t>(c)], bt = beta[static_cast<std::size_t>(c)];
        const T mean = running_mean[static_cast<std::size_t>(c)];
        for (std::int64_t m = 0; m < M; ++m)
            y.data()[m * C + c] = g * (x.data()[m * C + c] - mean) * inv + bt;
    }
}

/// Full train-mode gradient including the mean/variance dependence.
template <class T>
void batchnorm_backward(const Tensor<T>& x, const BnCache<T>& cache, const std::vector<T>& gamma,
                        T eps, const Tensor<T>& dy, Tensor<T>& dx, std::vector<T>& dgamma,
                        std::vector<T>& dbeta) {
    const std::int64_t C = x.shape.c;
    const std::int64_t M = x.shape.n * x.shape.h * x.shape.w;
    dx = Tensor<T>(x.shape);

#pragma omp parallel for
    for (std::int64_t c = 0; c < C; ++c) {
        const T mean = cache.mean[static_cast<std::size_t>(c)];
        const T inv = T(1) / std::sqrt(cache.var[static_cast<std::size_t>(c)] + eps);
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (std::int64_t m = 0; m < M; ++m) {
            const T dyv = dy.data()[m * C + c];
            const T xhat = (x.data()[m * C + c] - mean) * inv;
            sum_dy += dyv;
            sum_dy_xhat += dyv * xhat;
        }
        dgamma[static_cast<std::size_t>(c)] += sum_dy_xhat;
        dbeta[static_cast<std::size_t>(c)] += sum_dy;

        const T g_inv = gamma[static_cast<std::size_t>(c)] * inv;
        const T inv_m = T(1) / static_cast<T>(M);
        for (std::int64_t m = 0; m < M; ++m) {
            const T dyv = dy.data()[m * C + c];
            const T xhat = (x.data()[m * C + c] - mean) * inv;
            dx.data()[m * C + c] =
                g_inv * (dyv - sum_dy * inv_m - xhat * sum_dy_xhat * inv_m);
        }
    }
}

// ----------------------------------------------------------- activations ---

template <class T>
void act_forward(Act kind, const Tensor<T>& x, Tensor<T>& y, T leak = T(0.2)) {
    y = Tensor<T>(x.shape);
    const std::int64_t n = x.numel();
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i) {
        const T v = x.data()[i];
        T r;
        switch (kind) {
            case Act::relu: r = v > T(0) ? v : T(0); break;
            case Act::leaky_relu: r = v > T(0) ? v : leak * v; break;
            case Act::tanh: r = std::tanh(v); break;
            case Act::sigmoid: r = T(1) / (T(1) + std::exp(-v)); break;
            default: r = v;
        }
        y.data()[i] = r;
    }
}

/// Derivative at exactly zero for relu/leaky is the positive-side slope.
template <class T>
void act_backward(Act kind, const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy,
                  Tensor<T>& dx, T leak = T(0.2)) {
    dx = Tensor<T>(x.shape);
    const std::int64_t n = x.numel();
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i) {
        const T v = x.data()[i];
        const T o = y.data()[i];
        T d;
        switch (kind) {
            case Act::relu: d = v >= T(0) ? T(1) : T(0); break;
            case Act::leaky_relu: d = v >= T(0) ? T(1) : leak; break;
            case Act::tanh: d = T(1) - o * o; break;
            case Act::sigmoid: d = o * (T(1) - o); break;
            default: d = T(1);
        }
        dx.data()[i] = dy.data()[i] * d;
    }
}

// ------------------------------------------------------------ stochastic ---
// Masks are never stored: both passes replay the same RngSlice.

template <class T>
void dropout_forward(const Tensor<T>& x, T rate, const RngSlice& rng, Tensor<T>& y) {
    y = Tensor<T>(x.shape);
    const std::int64_t n = x.numel();
    const T scale = T(1) / (T(1) - rate);
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i) {
        const bool keep = rng.uniform(static_cast<std::uint64_t>(i)) >= static_cast<double>(rate);
        y.data()[i] = keep ? x.data()[i] * scale : T(0);
    }
}

template <class T>
void dropout_backward(const Tensor<T>& dy, T rate, const RngSlice& rng, Tensor<T>& dx) {
    dx = Tensor<T>(dy.shape);
    const std::int64_t n = dy.numel();
    const T scale = T(1) / (T(1) - rate);
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i) {
        const bool keep = rng.uniform(static_cast<std::uint64_t>(i)) >= static_cast<double>(rate);
        dx.data()[i] = keep ? dy.data()[i] * scale : T(0);
    }
}

template <class T>
void gaussian_noise_forward(const Tensor<T>& x, T sigma, const RngSlice& rng, Tensor<T>& y) {
    y = Tensor<T>(x.shape);
    const std::int64_t n = x.numel();
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i)
        y.data()[i] = x.data()[i] +
                      sigma * static_cast<T>(rng.normal(static_cast<std::uint64_t>(i)));
}

/// Bulk N(0,1) fill, one slot per element.
template <class T>
void fill_normal(Tensor<T>& x, const RngSlice& rng) {
    const std::int64_t n = x.numel();
#pragma omp parallel for
    for (std::int64_t i = 0; i < n; ++i)
        x.data()[i] = static_cast<T>(rng.normal(static_cast<std::uint64_t>(i)));
}

}  // namespace mrigen::kernels
