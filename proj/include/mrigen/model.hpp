#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mrigen/adam.hpp"
#include "mrigen/layers.hpp"
#include "mrigen/rng.hpp"

namespace mrigen {

/// Derives both stacks from the target resolution: the generator grows a 4x4
/// base by doubling until image_size, halving channels from 512 down each
/// block; the discriminator runs the same ladder in reverse back to 4x4.
struct ArchitectureSchedule {
    std::int64_t image_size = 256;
    std::int64_t base_spatial = 4;
    std::int64_t noise_dim = 512;

    static ArchitectureSchedule for_size(std::int64_t image_size);

    int n_blocks() const {
        int n = 0;
        for (std::int64_t s = base_spatial; s < image_size; s *= 2) ++n;
        return n;
    }

    /// Generator block output channels, e.g. 256,128,64,32,16,8 at 256.
    std::vector<std::int64_t> gen_channels() const {
        std::vector<std::int64_t> out;
        std::int64_t c = noise_dim;
        for (int k = 0; k < n_blocks(); ++k) {
            c /= 2;
            out.push_back(c);
        }
        return out;
    }

    /// Kernel sizes per generator block: 4 for the first two, 3 after.
    std::vector<std::int64_t> gen_kernels() const {
        std::vector<std::int64_t> out;
        for (int k = 0; k < n_blocks(); ++k) out.push_back(k < 2 ? 4 : 3);
        return out;
    }

    /// Discriminator block channels: the generator ladder mirrored
    /// (ascending, ending at the generator's first block width).
    std::vector<std::int64_t> disc_channels() const {
        auto out = gen_channels();
        std::reverse(out.begin(), out.end());
        return out;
    }
};

inline ArchitectureSchedule ArchitectureSchedule::for_size(std::int64_t image_size) {
    if (image_size != 32 && image_size != 64 && image_size != 128 && image_size != 256)
        fail(Errc::bad_schedule,
             "image_size must be one of 32/64/128/256, got " + std::to_string(image_size));
    ArchitectureSchedule s;
    s.image_size = image_size;
    return s;
}

/// dense(512 -> 4*4*512) -> reshape -> bn -> relu ->
/// [upsample2x -> conv(c_k, same) -> bn -> relu] x n_blocks ->
/// conv(1, k3, same) -> tanh
template <class T>
Network<T> build_generator(const ArchitectureSchedule& s) {
    if (s.base_spatial << s.n_blocks() != s.image_size)
        fail(Errc::bad_schedule, "base spatial does not double up to image_size");

    Network<T> net;
    const std::int64_t base_c = s.noise_dim;
    const std::int64_t base_hw = s.base_spatial;

    net.add("g.dense", std::make_unique<DenseLayer<T>>(s.noise_dim, base_hw * base_hw * base_c));
    net.add("g.reshape", std::make_unique<ReshapeLayer<T>>(base_hw, base_hw, base_c));
    net.add("g.bn0", std::make_unique<BatchNormLayer<T>>(base_c));
    net.add("g.act0", std::make_unique<ActivationLayer<T>>(kernels::Act::relu));

    std::int64_t c_in = base_c;
    const auto channels = s.gen_channels();
    const auto kernels_per_block = s.gen_kernels();
    for (int k = 0; k < s.n_blocks(); ++k) {
        const std::string p = "g.blk" + std::to_string(k + 1);
        const std::int64_t c_out = channels[static_cast<std::size_t>(k)];
        const std::int64_t ksz = kernels_per_block[static_cast<std::size_t>(k)];
        net.add(p + ".up", std::make_unique<Upsample2xLayer<T>>());
        net.add(p + ".conv", std::make_unique<Conv2dLayer<T>>(ksz, ksz, c_in, c_out));
        net.add(p + ".bn", std::make_unique<BatchNormLayer<T>>(c_out));
        net.add(p + ".act", std::make_unique<ActivationLayer<T>>(kernels::Act::relu));
        c_in = c_out;
    }
    net.add("g.out.conv", std::make_unique<Conv2dLayer<T>>(3, 3, c_in, 1));
    net.add("g.out.tanh", std::make_unique<ActivationLayer<T>>(kernels::Act::tanh));
    return net;
}

/// gaussian_noise -> [conv(c_k, k3, same) -> bn -> leaky_relu -> dropout ->
/// avgpool2x] x n_blocks -> flatten -> dense(->1) -> sigmoid
template <class T>
Network<T> build_discriminator(const ArchitectureSchedule& s, RngStream* rng,
                               T noise_sigma = T(0.1), T dropout_rate = T(0.25)) {
    if (s.base_spatial << s.n_blocks() != s.image_size)
        fail(Errc::bad_schedule, "base spatial does not double up to image_size");

    Network<T> net;
    net.add("d.noise", std::make_unique<GaussianNoiseLayer<T>>(noise_sigma, rng));

    std::int64_t c_in = 1;
    const auto channels = s.disc_channels();
    for (int k = 0; k < s.n_blocks(); ++k) {
        const std::string p = "d.blk" + std::to_string(k + 1);
        const std::int64_t c_out = channels[static_cast<std::size_t>(k)];
        net.add(p + ".conv", std::make_unique<Conv2dLayer<T>>(3, 3, c_in, c_out));
        net.add(p + ".bn", std::make_unique<BatchNormLayer<T>>(c_out));
        net.add(p + ".act", std::make_unique<ActivationLayer<T>>(kernels::Act::leaky_relu));
        net.add(p + ".drop", std::make_unique<DropoutLayer<T>>(dropout_rate, rng));
        net.add(p + ".pool", std::make_unique<AvgPool2xLayer<T>>());
        c_in = c_out;
    }
    const std::int64_t flat = s.base_spatial * s.base_spatial * c_in;
    net.add("d.flatten", std::make_unique<ReshapeLayer<T>>(1, 1, flat));
    net.add("d.dense", std::make_unique<DenseLayer<T>>(flat, 1));
    net.add("d.out.sigmoid", std::make_unique<ActivationLayer<T>>(kernels::Act::sigmoid));
    return net;
}

/// Conv/dense weights ~ N(0, weight_std^2); biases 0; batch-norm gamma=1,
/// beta=0, running mean=0, running var=1 (constructor defaults restated so a
/// reused network reinitializes cleanly).
template <class T>
void init_params(Network<T>& net, RngStream& rng, T weight_std = T(0.02)) {
    for (auto& p : net.params()) {
        if (p.name.ends_with(".w")) {
            const auto slice = RngSlice::take(rng, p.value->size());
            const std::int64_t n = static_cast<std::int64_t>(p.value->size());
#pragma omp parallel for
            for (std::int64_t i = 0; i < n; ++i)
                (*p.value)[i] = weight_std *
                                static_cast<T>(slice.normal(static_cast<std::uint64_t>(i)));
        } else if (p.name.ends_with(".gamma")) {
            std::fill(p.value->begin(), p.value->end(), T(1));
        } else {
            std::fill(p.value->begin(), p.value->end(), T(0));
        }
    }
    for (auto& st : net.state()) {
        const T v = st.name.ends_with(".running_var") ? T(1) : T(0);
        std::fill(st.value->begin(), st.value->end(), v);
    }
}

// ------------------------------------------------------------------ loss ---

inline constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy of a (n,1,1,1) probability batch against a
/// constant label, plus d(mean loss)/dp.
template <class T>
std::pair<T, Tensor<T>> bce_with_grad(const Tensor<T>& p, T label) {
    const std::int64_t n = p.shape.n;
    Tensor<T> dp(p.shape);
    T loss = T(0);
    const T lo = static_cast<T>(kProbClamp), hi = T(1) - static_cast<T>(kProbClamp);
    for (std::int64_t i = 0; i < n; ++i) {
        const T raw = p.data()[i];
        const T pc = std::clamp(raw, lo, hi);
        loss += -(label * std::log(pc) + (T(1) - label) * std::log(T(1) - pc));
        // Clamped values sit on a flat of the surrogate loss.
        dp.data()[i] = (raw > lo && raw < hi)
                           ? (-(label / pc) + (T(1) - label) / (T(1) - pc)) / static_cast<T>(n)
                           : T(0);
    }
    return {loss / static_cast<T>(n), std::move(dp)};
}

template <class T>
T bce(const Tensor<T>& p, T label) {
    return bce_with_grad(p, label).first;
}

/// mean BCE(d_real, 1) + mean BCE(d_fake, 0)
template <class T>
T discriminator_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
    if (d_real.shape.n != d_fake.shape.n)
        fail(Errc::shape_mismatch, "real/fake batches differ in size");
    return bce(d_real, T(1)) + bce(d_fake, T(0));
}

/// Non-saturating form: mean BCE(d_fake, 1).
template <class T>
T generator_loss(const Tensor<T>& d_fake) {
    return bce(d_fake, T(1));
}

}  // namespace mrigen
