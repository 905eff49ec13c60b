#include "gator/params.hpp"

#include <cmath>

#include "gator/error.hpp"

namespace gator {

Tensor ParamSet::add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw ContractError("ParamSet: duplicate parameter '" + name + "'");
    t.set_requires_grad(true);
    index_[name] = items_.size();
    items_.emplace_back(name, t);
    return t;
}

Tensor& ParamSet::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    return items_[it->second].second;
}

const Tensor& ParamSet::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("ParamSet: unknown parameter '" + name + "'");
    return items_[it->second].second;
}

std::vector<std::pair<std::string, Tensor>> ParamSet::items_with_prefix(const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& [name, t] : items_) {
        if (name.rfind(prefix, 0) == 0) out.emplace_back(name, t);
    }
    return out;
}

int64_t ParamSet::total_coords() const {
    int64_t n = 0;
    for (const auto& [name, t] : items_) n += t.size();
    return n;
}

void ParamSet::zero_grads() {
    for (auto& [name, t] : items_) t.zero_grad();
}

Tensor xavier_uniform(std::vector<int> shape, Rng& rng) {
    const int fan_in = shape[0];
    const int fan_out = shape.size() > 1 ? shape[1] : shape[0];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.values_mut()) v = rng.uniform(-limit, limit);
    return t;
}

}  // namespace gator
