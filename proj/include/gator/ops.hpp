#pragma once

#include <vector>

#include "gator/tensor.hpp"

namespace gator {

// Dense ops over rank-2 tensors (scalars are shape [1]). Every op validates
// its shape contract, computes eagerly, and records a backward closure on the
// active tape when an input requires gradients.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// elementwise; same shape required
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// broadcast variants: a is [n,d], v is [1,d] (row) or [n,1] (col)
Tensor add_rowvec(const Tensor& a, const Tensor& v);
Tensor mul_rowvec(const Tensor& a, const Tensor& v);
Tensor add_colvec(const Tensor& a, const Tensor& v);
Tensor mul_colvec(const Tensor& a, const Tensor& v);
Tensor div_colvec(const Tensor& a, const Tensor& v);

Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor abs_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);

// rows of the result sum to 1 and are strictly positive
Tensor softmax_rows(const Tensor& a);
// per-row mean 0 / variance 1 (population variance), no affine
Tensor layer_norm_rows(const Tensor& a, double eps);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor gather_rows(const Tensor& table, const std::vector<int>& indices);
// out[indices[m], :] += rows[m, :]; out has out_rows rows
Tensor scatter_add_rows(const Tensor& rows, const std::vector<int>& indices, int out_rows);
Tensor slice_cols(const Tensor& a, int offset, int len);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
// axis 0: [n,d] -> [1,d]; axis 1: [n,d] -> [n,1]
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);

Tensor reshape(const Tensor& a, std::vector<int> shape);

}  // namespace gator
