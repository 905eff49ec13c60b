#include "gator/gradcheck.hpp"

#include <cmath>
#include <limits>

namespace gator {

GradCheckReport finite_diff_check(const std::function<Tensor()>& forward_loss,
                                  const std::vector<std::pair<std::string, Tensor>>& params,
                                  double eps) {
    GradCheckReport report;
    if (eps <= 0.0) throw ContractError("finite_diff_check: eps must be positive");

    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        Tape::Scope scope(tape);
        Tensor loss = forward_loss();
        tape.backward(loss);
        analytic.reserve(params.size());
        for (const auto& [name, t] : params) analytic.push_back(t.grad_or_zeros());
    }

    for (size_t p = 0; p < params.size(); ++p) {
        const auto& name = params[p].first;
        Tensor t = params[p].second;
        auto vals = t.values_mut();
        for (size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + eps;
            const double f_plus = forward_loss().value();
            vals[i] = saved - eps;
            const double f_minus = forward_loss().value();
            vals[i] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
                report.finite = false;
                report.max_rel_error = std::numeric_limits<double>::infinity();
                report.worst_param = name;
                report.worst_coord = static_cast<int>(i);
                report.note = "non-finite function value at " + name + "[" + std::to_string(i) + "]";
                return report;
            }
            const double fd = (f_plus - f_minus) / (2.0 * eps);
            const double an = analytic[p][i];
            const double rel = std::fabs(an - fd) / std::max(1.0, std::fabs(an));
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = name;
                report.worst_coord = static_cast<int>(i);
            }
        }
    }
    return report;
}

}  // namespace gator
