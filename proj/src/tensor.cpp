#include "gator/tensor.hpp"

#include <cmath>
#include <sstream>

namespace gator {

int64_t shape_product(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

static void check_shape(const std::vector<int>& shape) {
    if (shape.empty()) throw ContractError("tensor shape must have rank >= 1");
    for (int e : shape) {
        if (e <= 0) throw ContractError("tensor extents must be positive, got " + shape_str(shape));
    }
}

Tensor make_like(const std::vector<int>& shape, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = shape;
    impl->values.assign(static_cast<size_t>(shape_product(shape)), 0.0);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    check_shape(shape);
    return make_like(shape, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.impl_->values) x = v;
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values) {
    check_shape(shape);
    if (shape_product(shape) != static_cast<int64_t>(values.size())) {
        throw ContractError("value count " + std::to_string(values.size()) +
                            " does not match shape " + shape_str(shape));
    }
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->values = std::move(values);
    return Tensor(std::move(impl));
}

int Tensor::rows() const {
    if (rank() != 2) throw ContractError("rows(): tensor is not rank 2, shape " + shape_str(shape()));
    return impl_->shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw ContractError("cols(): tensor is not rank 2, shape " + shape_str(shape()));
    return impl_->shape[1];
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("value(): tensor is not scalar, shape " + shape_str(shape()));
    return impl_->values[0];
}

bool Tensor::all_finite() const {
    for (double v : impl_->values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ContractError("max_abs_diff: shape mismatch");
    double m = 0.0;
    auto av = a.values(), bv = b.values();
    for (size_t i = 0; i < av.size(); ++i) m = std::max(m, std::fabs(av[i] - bv[i]));
    return m;
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Scope::Scope(Tape& t) : prev_(g_active_tape) { g_active_tape = &t; }
Tape::Scope::~Scope() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const char* op,
                  std::initializer_list<std::shared_ptr<TensorImpl>> tracked,
                  std::function<void()> backward) {
    for (const auto& impl : tracked) {
        if (impl && tracked_set_.insert(impl.get()).second) tracked_.push_back(impl);
    }
    nodes_.push_back(Node{op, std::move(backward)});
}

void Tape::record(const char* op,
                  const std::vector<std::shared_ptr<TensorImpl>>& tracked,
                  std::function<void()> backward) {
    for (const auto& impl : tracked) {
        if (impl && tracked_set_.insert(impl.get()).second) tracked_.push_back(impl);
    }
    nodes_.push_back(Node{op, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ContractError("backward: loss must be a scalar");
    }
    for (const auto& impl : tracked_) {
        impl->grad.assign(impl->values.size(), 0.0);
    }
    // Detached loss: nothing recorded through it, all grads stay zero.
    if (loss.impl()->grad.empty()) loss.impl()->grad.assign(1, 0.0);
    loss.impl()->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->backward();
    }
}

}  // namespace gator
