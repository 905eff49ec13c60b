#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gator/rng.hpp"
#include "gator/tensor.hpp"

namespace gator {

// Named registry of every learnable tensor; iteration order is registration
// order, which keeps the optimizer and checkpoints deterministic.
class ParamSet {
public:
    Tensor add(const std::string& name, Tensor t);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::vector<std::pair<std::string, Tensor>> items_with_prefix(const std::string& prefix) const;

    size_t count() const { return items_.size(); }
    int64_t total_coords() const;
    void zero_grads();

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, size_t> index_;
};

Tensor xavier_uniform(std::vector<int> shape, Rng& rng);

}  // namespace gator
