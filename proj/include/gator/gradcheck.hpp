#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gator/tensor.hpp"

namespace gator {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    int worst_coord = -1;
    bool finite = true;   // false if the probed function returned NaN/Inf
    std::string note;
};

// Central-difference oracle. forward_loss must rebuild the computation from
// the current parameter values and return a scalar; it is invoked once under
// a fresh tape for analytic gradients, then twice per coordinate for the
// differences. Error metric: |analytic - fd| / max(1, |analytic|).
GradCheckReport finite_diff_check(const std::function<Tensor()>& forward_loss,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double eps);

}  // namespace gator
