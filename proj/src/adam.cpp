#include "gator/adam.hpp"

#include <cmath>

#include "gator/error.hpp"

namespace gator {

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg)
    : cfg_(cfg), params_(std::move(params)) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, t] : params_) {
        m_.emplace_back(static_cast<size_t>(t.size()), 0.0);
        v_.emplace_back(static_cast<size_t>(t.size()), 0.0);
    }
}

void Adam::step() {
    // refuse the whole step before mutating anything
    for (const auto& [name, t] : params_) {
        for (double g : t.grad()) {
            if (!std::isfinite(g)) throw TrainError("adam: non-finite gradient for parameter '" + name + "'");
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t p = 0; p < params_.size(); ++p) {
        Tensor& t = params_[p].second;
        const std::vector<double> g = t.grad_or_zeros();
        auto vals = t.values_mut();
        auto& m = m_[p];
        auto& v = v_[p];
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            vals[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace gator
