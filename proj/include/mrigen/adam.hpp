#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mrigen/errors.hpp"
#include "mrigen/layers.hpp"

namespace mrigen {

template <class T>
struct AdamConfig {
    T lr = T(1e-5);
    T beta1 = T(0.5);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
};

/// Adam with bias correction. Moment buffers are kept per attached parameter
/// tensor, in attachment order.
template <class T>
class Adam {
public:
    explicit Adam(AdamConfig<T> cfg = {}) : cfg_(cfg) {}

    void attach(const std::vector<ParamRef<T>>& params) {
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            m_.emplace_back(p.value->size(), T(0));
            v_.emplace_back(p.value->size(), T(0));
        }
    }

    void step(const std::vector<ParamRef<T>>& params) {
        if (params.size() != m_.size())
            fail(Errc::shape_mismatch, "optimizer is attached to a different parameter set");
        ++t_;
        const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& theta = *params[k].value;
            const auto& g = *params[k].grad;
            auto& m = m_[k];
            auto& v = v_[k];
            if (g.size() != theta.size() || m.size() != theta.size())
                fail(Errc::shape_mismatch, params[k].name + ": gradient/moment size mismatch");
            const std::int64_t n = static_cast<std::int64_t>(theta.size());
#pragma omp parallel for
            for (std::int64_t i = 0; i < n; ++i) {
                m[i] = cfg_.beta1 * m[i] + (T(1) - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (T(1) - cfg_.beta2) * g[i] * g[i];
                const T mhat = m[i] / bc1;
                const T vhat = v[i] / bc2;
                theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    }

    std::uint64_t step_count() const { return t_; }
    void set_step_count(std::uint64_t t) { t_ = t; }

    const AdamConfig<T>& config() const { return cfg_; }

    std::vector<std::vector<T>>& first_moments() { return m_; }
    std::vector<std::vector<T>>& second_moments() { return v_; }

private:
    AdamConfig<T> cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

}  // namespace mrigen
