#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mrigen/layers.hpp"
#include "mrigen/model.hpp"
#include "mrigen/rng.hpp"

// Central finite-difference verification of every hand-written backward
// pass, run in double precision on a scalar-sum loss.
namespace mrigen::gradcheck {

struct CheckReport {
    std::string name;        // layer or target tensor
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    int samples = 0;
    bool pass() const { return max_rel_err < tolerance; }
};

namespace detail {

inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

inline std::vector<std::size_t> sample_indices(std::size_t count, std::size_t max_samples,
                                               RngStream& rng) {
    std::vector<std::size_t> idx;
    if (count <= max_samples) {
        idx.resize(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        return idx;
    }
    idx.reserve(max_samples);
    for (std::size_t i = 0; i < max_samples; ++i)
        idx.push_back(static_cast<std::size_t>(rng.below(count)));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

}  // namespace detail

/// Compares the layer's analytic gradients (input and every parameter)
/// against (f(t+h)-f(t-h))/2h on a scalar loss, sampling up to max_samples
/// elements per tensor. The loss is a fixed random-weighted sum of the
/// outputs: a plain sum is blind to batch norm, whose output columns sum to
/// a constant by construction.
inline CheckReport finite_diff_check(Layer<double>& layer, Tensor<double> input,
                                     double tolerance = 1e-5, double step = 1e-4,
                                     std::size_t max_samples = 32,
                                     std::uint64_t sample_seed = 0) {
    RngStream pick(sample_seed, 77);
    const RngSlice weights{sample_seed, 88, 0};

    auto weigh = [&](const Tensor<double>& y) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.v.size(); ++i)
            s += y.v[i] * (0.5 + weights.uniform(i));
        return s;
    };
    auto loss_of = [&](const Tensor<double>& x) {
        return weigh(layer.forward(x, Mode::train));
    };

    // Analytic pass.
    std::vector<ParamRef<double>> params;
    layer.collect_params(params);
    for (auto& p : params) std::fill(p.grad->begin(), p.grad->end(), 0.0);
    Tensor<double> y = layer.forward(input, Mode::train);
    Tensor<double> upstream(y.shape);
    for (std::size_t i = 0; i < upstream.v.size(); ++i)
        upstream.v[i] = 0.5 + weights.uniform(i);
    Tensor<double> dx = layer.backward(upstream);
    std::vector<std::vector<double>> param_grads;
    for (auto& p : params) param_grads.push_back(*p.grad);

    CheckReport rep;
    rep.name = layer.name();
    rep.tolerance = tolerance;

    auto check_one = [&](double* slot, double analytic) {
        const double keep = *slot;
        *slot = keep + step;
        const double fp = loss_of(input);
        *slot = keep - step;
        const double fm = loss_of(input);
        *slot = keep;
        const double numeric = (fp - fm) / (2.0 * step);
        rep.max_rel_err = std::max(rep.max_rel_err, detail::rel_err(analytic, numeric));
        ++rep.samples;
    };

    for (auto i : detail::sample_indices(input.v.size(), max_samples, pick))
        check_one(&input.v[i], dx.v[i]);
    for (std::size_t k = 0; k < params.size(); ++k)
        for (auto i : detail::sample_indices(params[k].value->size(), max_samples, pick))
            check_one(&(*params[k].value)[i], param_grads[k][i]);
    return rep;
}

/// BCE is a loss head, not a Layer; checked directly against its closed-form
/// gradient.
inline CheckReport bce_finite_diff_check(std::uint64_t seed, double tolerance = 1e-5,
                                         double step = 1e-6) {
    RngStream rng(seed, 5);
    CheckReport rep;
    rep.name = "bce";
    rep.tolerance = tolerance;
    for (double label : {0.0, 1.0}) {
        Tensor<double> p(8, 1, 1, 1);
        for (auto& v : p.v) v = 0.05 + 0.9 * rng.uniform();
        auto [loss, dp] = bce_with_grad(p, label);
        (void)loss;
        for (std::size_t i = 0; i < p.v.size(); ++i) {
            const double keep = p.v[i];
            p.v[i] = keep + step;
            const double fp = bce(p, label);
            p.v[i] = keep - step;
            const double fm = bce(p, label);
            p.v[i] = keep;
            rep.max_rel_err =
                std::max(rep.max_rel_err, detail::rel_err(dp.v[i], (fp - fm) / (2.0 * step)));
            ++rep.samples;
        }
    }
    return rep;
}

namespace detail {

inline Tensor<double> random_input(Shape4 shape, RngStream& rng, bool kink_margin) {
    Tensor<double> x(shape);
    for (auto& v : x.v) v = rng.normal();
    if (kink_margin) {
        // Keep relu-family inputs away from the nondifferentiable point.
        for (auto& v : x.v)
            if (std::abs(v) < 0.05) v = (v >= 0 ? 0.06 : -0.06);
    }
    return x;
}

inline void randomize_params(Layer<double>& layer, RngStream& rng) {
    std::vector<ParamRef<double>> params;
    layer.collect_params(params);
    for (auto& p : params) {
        for (auto& v : *p.value) v = 0.5 * rng.normal();
        if (p.name.ends_with(".gamma"))
            for (auto& v : *p.value) v = 1.0 + 0.2 * rng.normal();
    }
}

}  // namespace detail

/// Runs the whole per-layer verification table: dense, conv k=3 and k=4,
/// upsample2x, avgpool2x, batch norm (train), all four activations, BCE.
/// Each entry aggregates `seeds` random restarts.
inline std::vector<CheckReport> run_layer_suite(std::uint64_t base_seed = 1, int seeds = 5) {
    std::vector<CheckReport> table;

    auto run = [&](const std::string& name, double tol, auto make_layer, Shape4 in_shape,
                   bool kink_margin) {
        CheckReport agg;
        agg.name = name;
        agg.tolerance = tol;
        for (int s = 0; s < seeds; ++s) {
            RngStream rng(base_seed + static_cast<std::uint64_t>(s), 11);
            auto layer = make_layer();
            layer->set_name(name);
            detail::randomize_params(*layer, rng);
            auto input = detail::random_input(in_shape, rng, kink_margin);
            auto rep = finite_diff_check(*layer, std::move(input), tol, 1e-4, 32,
                                         base_seed + static_cast<std::uint64_t>(s));
            agg.max_rel_err = std::max(agg.max_rel_err, rep.max_rel_err);
            agg.samples += rep.samples;
        }
        table.push_back(agg);
    };

    run("dense", 1e-5, [] { return std::make_unique<DenseLayer<double>>(8, 5); },
        Shape4{4, 1, 1, 8}, false);
    run("conv2d_k3", 1e-5, [] { return std::make_unique<Conv2dLayer<double>>(3, 3, 2, 3); },
        Shape4{1, 6, 6, 2}, false);
    run("conv2d_k4", 1e-5, [] { return std::make_unique<Conv2dLayer<double>>(4, 4, 3, 4); },
        Shape4{2, 6, 6, 3}, false);
    run("upsample2x", 1e-5, [] { return std::make_unique<Upsample2xLayer<double>>(); },
        Shape4{2, 4, 4, 3}, false);
    run("avgpool2x", 1e-5, [] { return std::make_unique<AvgPool2xLayer<double>>(); },
        Shape4{2, 4, 4, 3}, false);
    run("batchnorm_train", 1e-4,
        [] { return std::make_unique<BatchNormLayer<double>>(3); }, Shape4{4, 2, 2, 3}, false);
    run("relu", 1e-5,
        [] { return std::make_unique<ActivationLayer<double>>(kernels::Act::relu); },
        Shape4{2, 3, 3, 2}, true);
    run("leaky_relu", 1e-5,
        [] { return std::make_unique<ActivationLayer<double>>(kernels::Act::leaky_relu); },
        Shape4{2, 3, 3, 2}, true);
    run("tanh", 1e-5,
        [] { return std::make_unique<ActivationLayer<double>>(kernels::Act::tanh); },
        Shape4{2, 3, 3, 2}, false);
    run("sigmoid", 1e-5,
        [] { return std::make_unique<ActivationLayer<double>>(kernels::Act::sigmoid); },
        Shape4{2, 3, 3, 2}, false);

    CheckReport bce_agg;
    bce_agg.name = "bce";
    bce_agg.tolerance = 1e-5;
    for (int s = 0; s < seeds; ++s) {
        auto rep = bce_finite_diff_check(base_seed + static_cast<std::uint64_t>(s));
        bce_agg.max_rel_err = std::max(bce_agg.max_rel_err, rep.max_rel_err);
        bce_agg.samples += rep.samples;
    }
    table.push_back(bce_agg);
    return table;
}

}  // namespace mrigen::gradcheck
