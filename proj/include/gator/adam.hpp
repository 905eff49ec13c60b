#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gator/params.hpp"
#include "gator/tensor.hpp"

namespace gator {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. Moment buffers are keyed by the
// parameter view passed at construction; step() refuses to run (and leaves
// everything untouched) if any gradient is non-finite.
class Adam {
public:
    Adam(std::vector<std::pair<std::string, Tensor>> params, AdamConfig cfg);

    void step();
    int64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace gator
