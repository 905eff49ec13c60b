#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gator/error.hpp"

namespace gator {

struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until touched by a backward pass
};

// Dense row-major tensor of doubles. Copies alias the same storage; ops treat
// values as immutable once produced, so sharing is safe for read-only use.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double v);
    static Tensor from_values(std::vector<int> shape, std::vector<double> values);
    static Tensor scalar(double v) { return from_values({1}, {v}); }

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int extent(int axis) const { return impl_->shape[static_cast<size_t>(axis)]; }
    int64_t size() const { return static_cast<int64_t>(impl_->values.size()); }

    // rank-2 helpers
    int rows() const;
    int cols() const;
    double at(int r, int c) const { return impl_->values[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)]; }
    double& at(int r, int c) { return impl_->values[static_cast<size_t>(r) * static_cast<size_t>(cols()) + static_cast<size_t>(c)]; }

    double value() const;  // defined for scalars only

    std::span<const double> values() const { return impl_->values; }
    std::span<double> values_mut() { return impl_->values; }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    Tensor& set_requires_grad(bool on = true) {
        impl_->requires_grad = on;
        return *this;
    }

    // empty span if no backward pass has touched this tensor
    std::span<const double> grad() const { return impl_->grad; }
    std::vector<double> grad_or_zeros() const {
        if (!impl_->grad.empty()) return impl_->grad;
        return std::vector<double>(impl_->values.size(), 0.0);
    }
    void zero_grad() { impl_->grad.assign(impl_->values.size(), 0.0); }

    bool all_finite() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<TensorImpl> impl_;

    friend class Tape;
    friend Tensor make_like(const std::vector<int>& shape, bool requires_grad);
};

Tensor make_like(const std::vector<int>& shape, bool requires_grad);

int64_t shape_product(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Define-by-run tape. Nodes are appended in execution order, which is a
// topological order by construction; backward replays them once, in reverse.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // RAII activation for the current thread.
    class Scope {
    public:
        explicit Scope(Tape& t);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* prev_;
    };

    static Tape* active();

    void record(const char* op,
                std::initializer_list<std::shared_ptr<TensorImpl>> tracked,
                std::function<void()> backward);
    void record(const char* op,
                const std::vector<std::shared_ptr<TensorImpl>>& tracked,
                std::function<void()> backward);

    // Seeds d(loss)/d(loss) = 1 and replays all nodes in reverse. Grads of
    // every tensor touched by this tape are reset first, so repeated calls
    // give bit-identical results.
    void backward(const Tensor& loss);

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        const char* op;
        std::function<void()> backward;
    };
    std::vector<Node> nodes_;
    std::vector<std::shared_ptr<TensorImpl>> tracked_;
    std::unordered_set<TensorImpl*> tracked_set_;
};

}  // namespace gator
