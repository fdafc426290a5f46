#pragma once

#include "radiomap/layers.hpp"

#include <cmath>

namespace radiomap {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
class Adam {
public:
    Adam(std::vector<ParamRef<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg)
    {
        for (const auto& p : params_) {
            m_.emplace_back(p.value->size(), 0.0);
            v_.emplace_back(p.value->size(), 0.0);
        }
    }

    void step()
    {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const double lr = cfg_.learning_rate * std::sqrt(c2) / c1;
        const double eps = cfg_.epsilon * std::sqrt(c2);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& w = *params_[k].value;
            const auto& g = *params_[k].grad;
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
                w[i] = static_cast<T>(static_cast<double>(w[i]) - lr * m[i] / (std::sqrt(v[i]) + eps));
            }
        }
    }

    std::size_t steps() const { return t_; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

private:
    std::vector<ParamRef<T>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

} // namespace radiomap
