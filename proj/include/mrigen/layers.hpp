#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mrigen/errors.hpp"
#include "mrigen/kernels.hpp"
#include "mrigen/rng.hpp"
#include "mrigen/tensor.hpp"

namespace mrigen {

enum class Mode { train, infer };

/// Mutable view of one trainable array (weights + accumulated gradients).
template <class T>
struct ParamRef {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;
};

/// Non-trainable persistent state (batch-norm running statistics).
template <class T>
struct StateRef {
    std::string name;
    std::vector<T>* value;
};

/// One step of a fixed sequential stack with a hand-written backward pass.
/// forward(train) caches whatever backward needs; backward accumulates
/// parameter gradients (+=) and returns the input gradient.
template <class T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
    virtual Shape4 out_shape(Shape4 in) const = 0;

    virtual void collect_params(std::vector<ParamRef<T>>&) {}
    virtual void collect_state(std::vector<StateRef<T>>&) {}

    /// Stochastic layers replay their last draw while frozen (used by the
    /// finite-difference harness). No-op elsewhere.
    virtual void set_frozen_rng(bool) {}

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

protected:
    std::string name_;
};

template <class T>
class DenseLayer final : public Layer<T> {
public:
    DenseLayer(std::int64_t d_in, std::int64_t d_out)
        : d_in_(d_in), d_out_(d_out),
          w_(static_cast<std::size_t>(d_in * d_out), T(0)),
          b_(static_cast<std::size_t>(d_out), T(0)),
          dw_(w_.size(), T(0)), db_(b_.size(), T(0)) {}

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.shape.h != 1 || x.shape.w != 1 || x.shape.c != d_in_)
            fail(Errc::shape_mismatch, this->name_ + ": expected (n,1,1," +
                                           std::to_string(d_in_) + ") input");
        x_ = x;
        Tensor<T> y;
        kernels::dense_forward(x, w_, b_, d_in_, d_out_, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        Tensor<T> dx;
        kernels::dense_backward(x_, w_, d_in_, d_out_, dy, dx, dw_, db_);
        return dx;
    }

    Shape4 out_shape(Shape4 in) const override { return {in.n, 1, 1, d_out_}; }

    void collect_params(std::vector<ParamRef<T>>& out) override {
        out.push_back({this->name_ + ".w", &w_, &dw_});
        out.push_back({this->name_ + ".b", &b_, &db_});
    }

    std::vector<T>& weights() { return w_; }

private:
    std::int64_t d_in_, d_out_;
    std::vector<T> w_, b_, dw_, db_;
    Tensor<T> x_;
};

template <class T>
class Conv2dLayer final : public Layer<T> {
public:
    Conv2dLayer(std::int64_t kh, std::int64_t kw, std::int64_t c_in, std::int64_t c_out)
        : kh_(kh), kw_(kw), c_in_(c_in), c_out_(c_out),
          w_(static_cast<std::size_t>(kh * kw * c_in * c_out), T(0)),
          b_(static_cast<std::size_t>(c_out), T(0)),
          dw_(w_.size(), T(0)), db_(b_.size(), T(0)) {}

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.shape.c != c_in_)
            fail(Errc::shape_mismatch, this->name_ + ": expected " + std::to_string(c_in_) +
                                           " input channels, got " + std::to_string(x.shape.c));
        x_ = x;
        Tensor<T> y;
        kernels::conv2d_forward(x, w_, b_, kh_, kw_, c_out_, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        kernels::conv2d_backward_params(x_, dy, kh_, kw_, dw_, db_);
        Tensor<T> dx;
        kernels::conv2d_backward_input(w_, kh_, kw_, c_in_, c_out_, dy, dx);
        return dx;
    }

    Shape4 out_shape(Shape4 in) const override { return {in.n, in.h, in.w, c_out_}; }

    void collect_params(std::vector<ParamRef<T>>& out) override {
        out.push_back({this->name_ + ".w", &w_, &dw_});
        out.push_back({this->name_ + ".b", &b_, &db_});
    }

private:
    std::int64_t kh_, kw_, c_in_, c_out_;
    std::vector<T> w_, b_, dw_, db_;
    Tensor<T> x_;
};

template <class T>
class BatchNormLayer final : public Layer<T> {
public:
    explicit BatchNormLayer(std::int64_t channels, T eps = T(1e-5), T momentum = T(0.99))
        : c_(channels), eps_(eps), momentum_(momentum),
          gamma_(static_cast<std::size_t>(channels), T(1)),
          beta_(static_cast<std::size_t>(channels), T(0)),
          dgamma_(gamma_.size(), T(0)), dbeta_(beta_.size(), T(0)),
          running_mean_(gamma_.size(), T(0)), running_var_(gamma_.size(), T(1)) {}

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (x.shape.c != c_)
            fail(Errc::shape_mismatch, this->name_ + ": channel mismatch");
        Tensor<T> y;
        if (mode == Mode::train) {
            // Need at least two statistics samples per channel.
            if (x.shape.n * x.shape.h * x.shape.w < 2)
                fail(Errc::batch_too_small,
                     this->name_ + ": train-mode batch norm needs >= 2 values per channel");
            x_ = x;
            kernels::batchnorm_train_forward(x, gamma_, beta_, eps_, y, cache_);
            for (std::size_t c = 0; c < gamma_.size(); ++c) {
                running_mean_[c] = momentum_ * running_mean_[c] + (T(1) - momentum_) * cache_.mean[c];
                running_var_[c] = momentum_ * running_var_[c] + (T(1) - momentum_) * cache_.var[c];
            }
        } else {
            kernels::batchnorm_infer_forward(x, gamma_, beta_, running_mean_, running_var_, eps_, y);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        Tensor<T> dx;
        kernels::batchnorm_backward(x_, cache_, gamma_, eps_, dy, dx, dgamma_, dbeta_);
        return dx;
    }

    Shape4 out_shape(Shape4 in) const override { return in; }

    void collect_params(std::vector<ParamRef<T>>& out) override {
        out.push_back({this->name_ + ".gamma", &gamma_, &dgamma_});
        out.push_back({this->name_ + ".beta", &beta_, &dbeta_});
    }

    void collect_state(std::vector<StateRef<T>>& out) override {
        out.push_back({this->name_ + ".running_mean", &running_mean_});
        out.push_back({this->name_ + ".running_var", &running_var_});
    }

private:
    std::int64_t c_;
    T eps_, momentum_;
    std::vector<T> gamma_, beta_, dgamma_, dbeta_, running_mean_, running_var_;
    Tensor<T> x_;
    kernels::BnCache<T> cache_;
};

template <class T>
class ActivationLayer final : public Layer<T> {
public:
    explicit ActivationLayer(kernels::Act kind, T leak = T(0.2)) : kind_(kind), leak_(leak) {}

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        x_ = x;
        kernels::act_forward(kind_, x, y_, leak_);
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        Tensor<T> dx;
        kernels::act_backward(kind_, x_, y_, dy, dx, leak_);
        return dx;
    }

    Shape4 out_shape(Shape4 in) const override { return in; }

private:
    kernels::Act kind_;
    T leak_;
    Tensor<T> x_, y_;
};

template <class T>
class DropoutLayer final : public Layer<T> {
public:
    DropoutLayer(T rate, RngStream* rng) : rate_(rate), rng_(rng) {
        if (!(rate >= T(0) && rate < T(1)))
            fail(Errc::bad_rate, "dropout rate must be in [0,1), got " + std::to_string(rate));
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (mode == Mode::infer || rate_ == T(0)) {
            identity_ = true;
            return x;
        }
        identity_ = false;
        if (!frozen_ || !have_slice_) {
            slice_ = RngSlice::take(*rng_, static_cast<std::uint64_t>(x.numel()));
            have_slice_ = true;
        }
        Tensor<T> y;
        kernels::dropout_forward(x, rate_, slice_, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) override {
        if (identity_) return dy;
        Tensor<T> dx;
        kernels::dropout_backward(dy, rate_, slice_, dx);
        return dx;
    }

    Shape4 out_shape(Shape4 in) const override { return in; }
    void set_frozen_rng(bool f) override { frozen_ = f; if (!f) have_slice_ = false; }

private:
    T rate_;
    RngStream* rng_;
    RngSlice slice_{};
    bool have_slice_ = false;
    bool frozen_ = false;
    bool identity_ = true;
};

template <class T>
class GaussianNoiseLayer final : public Layer<T> {
public:
    GaussianNoiseLayer(T sigma, RngStream* rng) : sigma_(sigma), rng_(rng) {
        if (sigma < T(0))
            fail(Errc::bad_rate, "noise sigma must be >= 0");
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
        if (mode == Mode::infer || sigma_ == T(0)) return x;
        if (!frozen_ || !have_slice_) {
            slice_ = RngSlice::take(*rng_, static_cast<std::uint64_t>(x.numel()));
            have_slice_ = true;
        }
        Tensor<T> y;
        kernels::gaussian_noise_forward(x, sigma_, slice_, y);
        return y;
    }

    // Additive noise is constant w.r.t. x.
    Tensor<T> backward(const Tensor<T>& dy) override { return dy; }

    Shape4 out_shape(Shape4 in) const override { return in; }
    void set_frozen_rng(bool f) override { frozen_ = f; if (!f) have_slice_ = false; }

private:
    T sigma_;
    RngStream* rng_;
    RngSlice slice_{};
    bool have_slice_ = false;
    bool frozen_ = false;
};

template <class T>
class Upsample2xLayer final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        Tensor<T> y;
        kernels::upsample2x_forward(x, y);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) override {
        Tensor<T> dx;
        kernels::upsample2x_backward(dy, dx);
        return dx;
    }
    Shape4 out_shape(Shape4 in) const override { return {in.n, 2 * in.h, 2 * in.w, in.c}; }
};

template <class T>
class AvgPool2xLayer final : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        if (x.shape.h % 2 != 0 || x.shape.w % 2 != 0)
            fail(Errc::odd_extent, this->name_ + ": pooling needs even extents, got " +
                                       std::to_string(x.shape.h) + "x" +
                                       std::to_string(x.shape.w));
        Tensor<T> y;
        kernels::avgpool2x_forward(x, y);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) override {
        Tensor<T> dx;
        kernels::avgpool2x_backward(dy, dx);
        return dx;
    }
    Shape4 out_shape(Shape4 in) const override { return {in.n, in.h / 2, in.w / 2, in.c}; }
};

/// Pure shape relabel; storage order is already (n, h, w, c) row-major.
template <class T>
class ReshapeLayer final : public Layer<T> {
public:
    ReshapeLayer(std::int64_t h, std::int64_t w, std::int64_t c) : h_(h), w_(w), c_(c) {}

    Tensor<T> forward(const Tensor<T>& x, Mode) override {
        in_shape_ = x.shape;
        return x.reshaped({x.shape.n, h_, w_, c_});
    }
    Tensor<T> backward(const Tensor<T>& dy) override { return dy.reshaped(in_shape_); }
    Shape4 out_shape(Shape4 in) const override { return {in.n, h_, w_, c_}; }

private:
    std::int64_t h_, w_, c_;
    Shape4 in_shape_{};
};

/// Sequential stack.
template <class T>
class Network {
public:
    void add(std::string name, std::unique_ptr<Layer<T>> layer) {
        layer->set_name(std::move(name));
        layers_.push_back(std::move(layer));
    }

    Tensor<T> forward(Tensor<T> x, Mode mode) {
        for (auto& l : layers_) x = l->forward(x, mode);
        return x;
    }

    Tensor<T> backward(Tensor<T> dy) {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) dy = (*it)->backward(dy);
        return dy;
    }

    std::vector<ParamRef<T>> params() {
        std::vector<ParamRef<T>> out;
        for (auto& l : layers_) l->collect_params(out);
        return out;
    }

    std::vector<StateRef<T>> state() {
        std::vector<StateRef<T>> out;
        for (auto& l : layers_) l->collect_state(out);
        return out;
    }

    void zero_grads() {
        for (auto p : params()) std::fill(p.grad->begin(), p.grad->end(), T(0));
    }

    void set_frozen_rng(bool f) {
        for (auto& l : layers_) l->set_frozen_rng(f);
    }

    Shape4 trace_shape(Shape4 in) const {
        for (const auto& l : layers_) in = l->out_shape(in);
        return in;
    }

    std::vector<Shape4> shape_trace(Shape4 in) const {
        std::vector<Shape4> out;
        out.push_back(in);
        for (const auto& l : layers_) {
            in = l->out_shape(in);
            out.push_back(in);
        }
        return out;
    }

    std::size_t size() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace mrigen
