#include "gator/ops.hpp"

#include <cmath>
#include <cstring>

namespace gator {

namespace {

std::shared_ptr<TensorImpl> tracked_or_null(const Tensor& t) {
    return t.requires_grad() ? t.impl() : nullptr;
}

bool should_record(const Tensor& out) { return Tape::active() && out.requires_grad(); }

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw ContractError(std::string(op) + ": expected rank-2 tensor, got shape " + shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ContractError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ContractError("matmul: inner dims differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    Tensor out = make_like({m, n}, a.requires_grad() || b.requires_grad());
    {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        double* ov = out.values_mut().data();
        for (int i = 0; i < m; ++i) {
            const double* arow = av + static_cast<size_t>(i) * k;
            double* orow = ov + static_cast<size_t>(i) * n;
            for (int kk = 0; kk < k; ++kk) {
                const double aik = arow[kk];
                if (aik == 0.0) continue;
                const double* brow = bv + static_cast<size_t>(kk) * n;
                for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
            }
        }
    }
    if (should_record(out)) {
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        Tape::active()->record("matmul", {tracked_or_null(a), tracked_or_null(b), oi}, [ai, bi, oi, m, k, n] {
            const double* go = oi->grad.data();
            if (ai->requires_grad) {
                double* ga = ai->grad.data();
                const double* bv = bi->values.data();
                for (int i = 0; i < m; ++i) {
                    const double* grow = go + static_cast<size_t>(i) * n;
                    double* garow = ga + static_cast<size_t>(i) * k;
                    for (int kk = 0; kk < k; ++kk) {
                        const double* brow = bv + static_cast<size_t>(kk) * n;
                        double s = 0.0;
                        for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                        garow[kk] += s;
                    }
                }
            }
            if (bi->requires_grad) {
                double* gb = bi->grad.data();
                const double* av = ai->values.data();
                for (int i = 0; i < m; ++i) {
                    const double* arow = av + static_cast<size_t>(i) * k;
                    const double* grow = go + static_cast<size_t>(i) * n;
                    for (int kk = 0; kk < k; ++kk) {
                        const double aik = arow[kk];
                        if (aik == 0.0) continue;
                        double* gbrow = gb + static_cast<size_t>(kk) * n;
                        for (int j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const int m = a.rows(), n = a.cols();
    Tensor out = make_like({n, m}, a.requires_grad());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("transpose", {ai, oi}, [ai, oi, m, n] {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    ai->grad[static_cast<size_t>(i) * n + j] += oi->grad[static_cast<size_t>(j) * m + i];
        });
    }
    return out;
}

namespace {

enum class EwKind { Add, Sub, Mul, Div };

Tensor elementwise(const Tensor& a, const Tensor& b, EwKind kind, const char* name) {
    require_same_shape(a, b, name);
    Tensor out = make_like(a.shape(), a.requires_grad() || b.requires_grad());
    const size_t n = a.values().size();
    const double* av = a.values().data();
    const double* bv = b.values().data();
    double* ov = out.values_mut().data();
    switch (kind) {
        case EwKind::Add: for (size_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i]; break;
        case EwKind::Sub: for (size_t i = 0; i < n; ++i) ov[i] = av[i] - bv[i]; break;
        case EwKind::Mul: for (size_t i = 0; i < n; ++i) ov[i] = av[i] * bv[i]; break;
        case EwKind::Div: for (size_t i = 0; i < n; ++i) ov[i] = av[i] / bv[i]; break;
    }
    if (should_record(out)) {
        auto ai = a.impl(), bi = b.impl(), oi = out.impl();
        Tape::active()->record(name, {tracked_or_null(a), tracked_or_null(b), oi}, [ai, bi, oi, n, kind] {
            const double* go = oi->grad.data();
            const double* avd = ai->values.data();
            const double* bvd = bi->values.data();
            switch (kind) {
                case EwKind::Add:
                    if (ai->requires_grad) for (size_t i = 0; i < n; ++i) ai->grad[i] += go[i];
                    if (bi->requires_grad) for (size_t i = 0; i < n; ++i) bi->grad[i] += go[i];
                    break;
                case EwKind::Sub:
                    if (ai->requires_grad) for (size_t i = 0; i < n; ++i) ai->grad[i] += go[i];
                    if (bi->requires_grad) for (size_t i = 0; i < n; ++i) bi->grad[i] -= go[i];
                    break;
                case EwKind::Mul:
                    if (ai->requires_grad) for (size_t i = 0; i < n; ++i) ai->grad[i] += go[i] * bvd[i];
                    if (bi->requires_grad) for (size_t i = 0; i < n; ++i) bi->grad[i] += go[i] * avd[i];
                    break;
                case EwKind::Div:
                    if (ai->requires_grad) for (size_t i = 0; i < n; ++i) ai->grad[i] += go[i] / bvd[i];
                    if (bi->requires_grad) for (size_t i = 0; i < n; ++i) bi->grad[i] -= go[i] * avd[i] / (bvd[i] * bvd[i]);
                    break;
            }
        });
    }
    return out;
}

enum class Bcast { Row, Col };

Tensor broadcast_op(const Tensor& a, const Tensor& v, Bcast dir, bool is_mul, bool is_div, const char* name) {
    require_rank2(a, name);
    require_rank2(v, name);
    const int n = a.rows(), d = a.cols();
    if (dir == Bcast::Row && (v.rows() != 1 || v.cols() != d))
        throw ContractError(std::string(name) + ": broadcast vector must be [1," + std::to_string(d) + "], got " + shape_str(v.shape()));
    if (dir == Bcast::Col && (v.rows() != n || v.cols() != 1))
        throw ContractError(std::string(name) + ": broadcast vector must be [" + std::to_string(n) + ",1], got " + shape_str(v.shape()));
    Tensor out = make_like({n, d}, a.requires_grad() || v.requires_grad());
    const double* av = a.values().data();
    const double* vv = v.values().data();
    double* ov = out.values_mut().data();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double s = (dir == Bcast::Row) ? vv[j] : vv[i];
            const size_t idx = static_cast<size_t>(i) * d + j;
            ov[idx] = is_mul ? av[idx] * s : (is_div ? av[idx] / s : av[idx] + s);
        }
    }
    if (should_record(out)) {
        auto ai = a.impl(), vi = v.impl(), oi = out.impl();
        Tape::active()->record(name, {tracked_or_null(a), tracked_or_null(v), oi},
                               [ai, vi, oi, n, d, dir, is_mul, is_div] {
            const double* go = oi->grad.data();
            const double* avd = ai->values.data();
            const double* vvd = vi->values.data();
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) {
                    const size_t idx = static_cast<size_t>(i) * d + j;
                    const size_t vk = (dir == Bcast::Row) ? static_cast<size_t>(j) : static_cast<size_t>(i);
                    const double s = vvd[vk];
                    if (ai->requires_grad) {
                        ai->grad[idx] += is_mul ? go[idx] * s : (is_div ? go[idx] / s : go[idx]);
                    }
                    if (vi->requires_grad) {
                        if (is_mul) vi->grad[vk] += go[idx] * avd[idx];
                        else if (is_div) vi->grad[vk] -= go[idx] * avd[idx] / (s * s);
                        else vi->grad[vk] += go[idx];
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Div, "div"); }

Tensor add_rowvec(const Tensor& a, const Tensor& v) { return broadcast_op(a, v, Bcast::Row, false, false, "add_rowvec"); }
Tensor mul_rowvec(const Tensor& a, const Tensor& v) { return broadcast_op(a, v, Bcast::Row, true, false, "mul_rowvec"); }
Tensor add_colvec(const Tensor& a, const Tensor& v) { return broadcast_op(a, v, Bcast::Col, false, false, "add_colvec"); }
Tensor mul_colvec(const Tensor& a, const Tensor& v) { return broadcast_op(a, v, Bcast::Col, true, false, "mul_colvec"); }
Tensor div_colvec(const Tensor& a, const Tensor& v) { return broadcast_op(a, v, Bcast::Col, false, true, "div_colvec"); }

namespace {

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
    Tensor out = make_like(a.shape(), a.requires_grad());
    const size_t n = a.values().size();
    const double* av = a.values().data();
    double* ov = out.values_mut().data();
    for (size_t i = 0; i < n; ++i) ov[i] = fwd(av[i]);
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record(name, {ai, oi}, [ai, oi, n, bwd] {
            for (size_t i = 0; i < n; ++i) ai->grad[i] += oi->grad[i] * bwd(ai->values[i], oi->values[i]);
        });
    }
    return out;
}

}  // namespace

Tensor scale(const Tensor& a, double c) {
    return unary_op(a, "scale", [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_op(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
    auto fwd = [](double x) {
        if (x > 30.0) return x;
        if (x < -30.0) return std::exp(x);
        return std::log1p(std::exp(x));
    };
    auto bwd = [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); };
    return unary_op(a, "softplus", fwd, bwd);
}

Tensor abs_t(const Tensor& a) {
    return unary_op(a, "abs", [](double x) { return std::fabs(x); },
                    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor sqrt_t(const Tensor& a) {
    return unary_op(a, "sqrt", [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Tensor softmax_rows(const Tensor& a) {
    require_rank2(a, "softmax_rows");
    const int n = a.rows(), d = a.cols();
    if (d == 0) throw DomainError("softmax_rows: empty row");
    Tensor out = make_like({n, d}, a.requires_grad());
    for (int i = 0; i < n; ++i) {
        double mx = a.at(i, 0);
        for (int j = 1; j < d; ++j) mx = std::max(mx, a.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < d; ++j) {
            const double e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < d; ++j) out.at(i, j) /= sum;
    }
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("softmax_rows", {ai, oi}, [ai, oi, n, d] {
            for (int i = 0; i < n; ++i) {
                const double* y = oi->values.data() + static_cast<size_t>(i) * d;
                const double* gy = oi->grad.data() + static_cast<size_t>(i) * d;
                double dot = 0.0;
                for (int j = 0; j < d; ++j) dot += gy[j] * y[j];
                double* gx = ai->grad.data() + static_cast<size_t>(i) * d;
                for (int j = 0; j < d; ++j) gx[j] += (gy[j] - dot) * y[j];
            }
        });
    }
    return out;
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
    require_rank2(a, "layer_norm_rows");
    const int n = a.rows(), d = a.cols();
    Tensor out = make_like({n, d}, a.requires_grad());
    std::vector<double> inv_std(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += a.at(i, j);
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = a.at(i, j) - mean;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<size_t>(i)] = is;
        for (int j = 0; j < d; ++j) out.at(i, j) = (a.at(i, j) - mean) * is;
    }
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("layer_norm_rows", {ai, oi}, [ai, oi, n, d, inv_std = std::move(inv_std)] {
            for (int i = 0; i < n; ++i) {
                const double* y = oi->values.data() + static_cast<size_t>(i) * d;
                const double* gy = oi->grad.data() + static_cast<size_t>(i) * d;
                double mean_gy = 0.0, mean_gyy = 0.0;
                for (int j = 0; j < d; ++j) {
                    mean_gy += gy[j];
                    mean_gyy += gy[j] * y[j];
                }
                mean_gy /= d;
                mean_gyy /= d;
                const double is = inv_std[static_cast<size_t>(i)];
                double* gx = ai->grad.data() + static_cast<size_t>(i) * d;
                for (int j = 0; j < d; ++j) gx[j] += is * (gy[j] - mean_gy - y[j] * mean_gyy);
            }
        });
    }
    return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ContractError("concat: axis must be 0 or 1");
    bool rg = false;
    for (const auto& p : parts) {
        require_rank2(p, "concat");
        rg = rg || p.requires_grad();
    }
    int rows = parts[0].rows(), cols = parts[0].cols();
    for (size_t i = 1; i < parts.size(); ++i) {
        if (axis == 0) {
            if (parts[i].cols() != cols) throw ContractError("concat axis 0: column mismatch");
            rows += parts[i].rows();
        } else {
            if (parts[i].rows() != rows) throw ContractError("concat axis 1: row mismatch");
            cols += parts[i].cols();
        }
    }
    Tensor out = make_like({rows, cols}, rg);
    {
        int off = 0;
        for (const auto& p : parts) {
            for (int i = 0; i < p.rows(); ++i)
                for (int j = 0; j < p.cols(); ++j) {
                    if (axis == 0) out.at(off + i, j) = p.at(i, j);
                    else out.at(i, off + j) = p.at(i, j);
                }
            off += (axis == 0) ? p.rows() : p.cols();
        }
    }
    if (Tape::active() && rg) {
        std::vector<std::shared_ptr<TensorImpl>> impls;
        impls.reserve(parts.size());
        for (const auto& p : parts) impls.push_back(p.impl());
        auto oi = out.impl();
        std::vector<std::shared_ptr<TensorImpl>> tracked;
        for (const auto& p : parts) {
            if (p.requires_grad()) tracked.push_back(p.impl());
        }
        tracked.push_back(oi);
        Tape::active()->record("concat", tracked, [impls = std::move(impls), oi, cols, axis] {
            int off = 0;
            for (const auto& pi : impls) {
                const int pr = pi->shape[0], pc = pi->shape[1];
                if (pi->requires_grad) {
                    for (int i = 0; i < pr; ++i)
                        for (int j = 0; j < pc; ++j) {
                            const size_t src = (axis == 0)
                                ? static_cast<size_t>(off + i) * cols + j
                                : static_cast<size_t>(i) * cols + (off + j);
                            pi->grad[static_cast<size_t>(i) * pc + j] += oi->grad[src];
                        }
                }
                off += (axis == 0) ? pr : pc;
            }
        });
    }
    return out;
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& indices) {
    require_rank2(table, "gather_rows");
    const int rows = table.rows(), cols = table.cols();
    if (indices.empty()) throw ContractError("gather_rows: empty index list");
    for (int idx : indices) {
        if (idx < 0 || idx >= rows) {
            throw IndexError("gather_rows: index " + std::to_string(idx) + " out of range [0," + std::to_string(rows) + ")");
        }
    }
    const int m = static_cast<int>(indices.size());
    Tensor out = make_like({m, cols}, table.requires_grad());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < cols; ++j) out.at(i, j) = table.at(indices[static_cast<size_t>(i)], j);
    if (should_record(out)) {
        auto ti = table.impl(), oi = out.impl();
        Tape::active()->record("gather_rows", {ti, oi}, [ti, oi, indices, m, cols] {
            for (int i = 0; i < m; ++i) {
                const size_t dst = static_cast<size_t>(indices[static_cast<size_t>(i)]) * cols;
                const size_t src = static_cast<size_t>(i) * cols;
                for (int j = 0; j < cols; ++j) ti->grad[dst + j] += oi->grad[src + j];
            }
        });
    }
    return out;
}

Tensor scatter_add_rows(const Tensor& rows, const std::vector<int>& indices, int out_rows) {
    require_rank2(rows, "scatter_add_rows");
    const int m = rows.rows(), cols = rows.cols();
    if (static_cast<int>(indices.size()) != m) throw ContractError("scatter_add_rows: index count != row count");
    for (int idx : indices) {
        if (idx < 0 || idx >= out_rows) {
            throw IndexError("scatter_add_rows: index " + std::to_string(idx) + " out of range [0," + std::to_string(out_rows) + ")");
        }
    }
    Tensor out = make_like({out_rows, cols}, rows.requires_grad());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < cols; ++j) out.at(indices[static_cast<size_t>(i)], j) += rows.at(i, j);
    if (should_record(out)) {
        auto ri = rows.impl(), oi = out.impl();
        Tape::active()->record("scatter_add_rows", {ri, oi}, [ri, oi, indices, m, cols] {
            for (int i = 0; i < m; ++i) {
                const size_t src = static_cast<size_t>(indices[static_cast<size_t>(i)]) * cols;
                const size_t dst = static_cast<size_t>(i) * cols;
                for (int j = 0; j < cols; ++j) ri->grad[dst + j] += oi->grad[src + j];
            }
        });
    }
    return out;
}

Tensor slice_cols(const Tensor& a, int offset, int len) {
    require_rank2(a, "slice_cols");
    const int n = a.rows(), d = a.cols();
    if (offset < 0 || len <= 0 || offset + len > d) {
        throw ContractError("slice_cols: range [" + std::to_string(offset) + "," + std::to_string(offset + len) +
                            ") invalid for " + std::to_string(d) + " columns");
    }
    Tensor out = make_like({n, len}, a.requires_grad());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < len; ++j) out.at(i, j) = a.at(i, offset + j);
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("slice_cols", {ai, oi}, [ai, oi, n, d, offset, len] {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < len; ++j)
                    ai->grad[static_cast<size_t>(i) * d + offset + j] += oi->grad[static_cast<size_t>(i) * len + j];
        });
    }
    return out;
}

Tensor sum_all(const Tensor& a) {
    Tensor out = make_like({1}, a.requires_grad());
    double s = 0.0;
    for (double v : a.values()) s += v;
    out.values_mut()[0] = s;
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("sum_all", {ai, oi}, [ai, oi] {
            const double g = oi->grad[0];
            for (double& gx : ai->grad) gx += g;
        });
    }
    return out;
}

Tensor mean_all(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    return scale(sum_all(a), inv);
}

Tensor sum_axis(const Tensor& a, int axis) {
    require_rank2(a, "sum_axis");
    if (axis != 0 && axis != 1) throw ContractError("sum_axis: axis must be 0 or 1");
    const int n = a.rows(), d = a.cols();
    Tensor out = make_like(axis == 0 ? std::vector<int>{1, d} : std::vector<int>{n, 1}, a.requires_grad());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            if (axis == 0) out.at(0, j) += a.at(i, j);
            else out.at(i, 0) += a.at(i, j);
        }
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("sum_axis", {ai, oi}, [ai, oi, n, d, axis] {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j)
                    ai->grad[static_cast<size_t>(i) * d + j] +=
                        (axis == 0) ? oi->grad[static_cast<size_t>(j)] : oi->grad[static_cast<size_t>(i)];
        });
    }
    return out;
}

Tensor mean_axis(const Tensor& a, int axis) {
    const double inv = 1.0 / static_cast<double>(axis == 0 ? a.rows() : a.cols());
    return scale(sum_axis(a, axis), inv);
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
    if (shape_product(shape) != a.size()) {
        throw ContractError("reshape: element count mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
    }
    Tensor out = make_like(shape, a.requires_grad());
    std::memcpy(out.values_mut().data(), a.values().data(), a.values().size() * sizeof(double));
    if (should_record(out)) {
        auto ai = a.impl(), oi = out.impl();
        Tape::active()->record("reshape", {ai, oi}, [ai, oi] {
            for (size_t i = 0; i < ai->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        });
    }
    return out;
}

}  // namespace gator
