#include "dest/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "kernels.hpp"

namespace dest {

namespace {

void check_defined(const Tensor& t, const char* who) {
    if (!t.defined()) throw InvariantError(std::string(who) + ": undefined tensor operand");
}

bool any_requires_grad(const std::vector<NodePtr>& parents) {
    for (const auto& p : parents) {
        if (p->requires_grad) return true;
    }
    return false;
}

// Attach history to a freshly computed node if gradients are being recorded.
void record(const NodePtr& out, std::vector<NodePtr> parents,
            std::function<void(TensorNode&)> fn) {
    if (!grad_enabled() || !any_requires_grad(parents)) return;
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward_fn = std::move(fn);
}

int64_t prod(const Shape& s, int from, int to) {
    int64_t p = 1;
    for (int i = from; i < to; ++i) p *= s[i];
    return p;
}

// Broadcast layout: shapes aligned at the trailing axis, extent-1 axes get a
// zero stride so the same element is read across the stretched dimension.
struct BroadcastPlan {
    Shape out;
    std::vector<int64_t> stride_a;
    std::vector<int64_t> stride_b;
    int64_t numel = 1;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* who) {
    const int rank = std::max(a.size(), b.size());
    BroadcastPlan plan;
    plan.out.resize(rank);
    Shape pa(rank, 1), pb(rank, 1);
    std::copy(a.begin(), a.end(), pa.begin() + (rank - static_cast<int>(a.size())));
    std::copy(b.begin(), b.end(), pb.begin() + (rank - static_cast<int>(b.size())));
    for (int i = 0; i < rank; ++i) {
        if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
            throw ShapeError(std::string(who) + ": cannot broadcast " + shape_str(a) +
                             " with " + shape_str(b));
        }
        plan.out[i] = std::max(pa[i], pb[i]);
    }
    plan.numel = shape_numel(plan.out);
    auto strides_for = [&](const Shape& padded) {
        std::vector<int64_t> st(rank, 0);
        int64_t run = 1;
        for (int i = rank - 1; i >= 0; --i) {
            st[i] = (padded[i] == 1) ? 0 : run;
            run *= padded[i];
        }
        return st;
    };
    plan.stride_a = strides_for(pa);
    plan.stride_b = strides_for(pb);
    return plan;
}

// Walks a broadcast output linearly, handing (out_idx, a_idx, b_idx) to fn.
template <class F>
void for_each_broadcast(const BroadcastPlan& plan, F&& fn) {
    const int rank = static_cast<int>(plan.out.size());
    std::vector<int> coord(rank, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t o = 0; o < plan.numel; ++o) {
        fn(o, ia, ib);
        for (int ax = rank - 1; ax >= 0; --ax) {
            ++coord[ax];
            ia += plan.stride_a[ax];
            ib += plan.stride_b[ax];
            if (coord[ax] < plan.out[ax]) break;
            coord[ax] = 0;
            ia -= plan.stride_a[ax] * plan.out[ax];
            ib -= plan.stride_b[ax] * plan.out[ax];
        }
    }
}

template <class Fwd, class Dfn>
Tensor unary_op(const Tensor& x, Fwd fwd, Dfn dfn, const char* who) {
    check_defined(x, who);
    auto out = make_node(x.shape());
    const double* xv = x.data();
    double* yv = out->value.data();
    const int64_t n = out->numel();
    for (int64_t i = 0; i < n; ++i) yv[i] = fwd(xv[i]);
    record(out, {x.node()}, [dfn](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const int64_t n = o.numel();
        for (int64_t i = 0; i < n; ++i) {
            p.grad[i] += o.grad[i] * dfn(p.value[i], o.value[i]);
        }
    });
    return Tensor(out);
}

} // namespace

// ---------------------------------------------------------------------------
// matmul / conv1d / softmax

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_defined(a, "matmul");
    check_defined(b, "matmul");
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul expects rank-2 operands, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
    }
    const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw ShapeError("matmul inner extents differ: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    auto out = make_node({m, n});
    kern::gemm_nn(m, n, k, a.data(), k, b.data(), n, out->value.data(), n, false);
    record(out, {a.node(), b.node()}, [m, n, k](TensorNode& o) {
        TensorNode& A = *o.parents[0];
        TensorNode& B = *o.parents[1];
        if (A.requires_grad) {
            A.ensure_grad();
            kern::gemm_nt(m, k, n, o.grad.data(), n, B.value.data(), n, A.grad.data(), k, true);
        }
        if (B.requires_grad) {
            B.ensure_grad();
            kern::gemm_tn(k, n, m, A.value.data(), k, o.grad.data(), n, B.grad.data(), n, true);
        }
    });
    return Tensor(out);
}

namespace {

// Valid output column range [t0, t1) for a tap whose input offset is `off`.
inline void tap_range(int T, int off, int& t0, int& t1) {
    t0 = std::max(0, -off);
    t1 = std::min(T, T - off);
}

} // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, int dilation) {
    check_defined(x, "conv1d");
    check_defined(w, "conv1d");
    if (x.rank() != 2) throw ShapeError("conv1d input must be [c_in x T], got " + shape_str(x.shape()));
    if (w.rank() != 3) throw ShapeError("conv1d weight must be [c_out x c_in x k], got " + shape_str(w.shape()));
    const int c_in = x.dim(0), T = x.dim(1);
    const int c_out = w.dim(0), wc_in = w.dim(1), k = w.dim(2);
    if (wc_in != c_in) {
        throw ShapeError("conv1d channel mismatch: input " + shape_str(x.shape()) +
                         " vs weight " + shape_str(w.shape()));
    }
    if (k % 2 == 0) throw ConfigError("conv1d kernel size must be odd, got " + std::to_string(k));
    if (dilation < 1) throw ConfigError("conv1d dilation must be >= 1, got " + std::to_string(dilation));

    const int h = k / 2;
    auto out = make_node({c_out, T});
    std::fill(out->value.begin(), out->value.end(), 0.0);
    std::vector<double> tap(static_cast<size_t>(c_out) * c_in);
    for (int j = 0; j < k; ++j) {
        const int off = (j - h) * dilation;
        int t0, t1;
        tap_range(T, off, t0, t1);
        if (t0 >= t1) continue;
        for (int o = 0; o < c_out; ++o) {
            for (int i = 0; i < c_in; ++i) {
                tap[static_cast<size_t>(o) * c_in + i] = w.data()[(static_cast<size_t>(o) * c_in + i) * k + j];
            }
        }
        kern::gemm_nn(c_out, t1 - t0, c_in,
                      tap.data(), c_in,
                      x.data() + (t0 + off), T,
                      out->value.data() + t0, T, true);
    }

    record(out, {x.node(), w.node()}, [c_in, c_out, T, k, h, dilation](TensorNode& o) {
        TensorNode& X = *o.parents[0];
        TensorNode& W = *o.parents[1];
        std::vector<double> tap(static_cast<size_t>(c_out) * c_in);
        if (X.requires_grad) X.ensure_grad();
        if (W.requires_grad) W.ensure_grad();
        for (int j = 0; j < k; ++j) {
            const int off = (j - h) * dilation;
            int t0, t1;
            tap_range(T, off, t0, t1);
            if (t0 >= t1) continue;
            if (X.requires_grad) {
                for (int o2 = 0; o2 < c_out; ++o2) {
                    for (int i = 0; i < c_in; ++i) {
                        tap[static_cast<size_t>(o2) * c_in + i] =
                            W.value[(static_cast<size_t>(o2) * c_in + i) * k + j];
                    }
                }
                kern::gemm_tn(c_in, t1 - t0, c_out,
                              tap.data(), c_in,
                              o.grad.data() + t0, T,
                              X.grad.data() + (t0 + off), T, true);
            }
            if (W.requires_grad) {
                kern::gemm_nt(c_out, c_in, t1 - t0,
                              o.grad.data() + t0, T,
                              X.value.data() + (t0 + off), T,
                              tap.data(), c_in, false);
                for (int o2 = 0; o2 < c_out; ++o2) {
                    for (int i = 0; i < c_in; ++i) {
                        W.grad[(static_cast<size_t>(o2) * c_in + i) * k + j] +=
                            tap[static_cast<size_t>(o2) * c_in + i];
                    }
                }
            }
        }
    });
    return Tensor(out);
}

Tensor softmax(const Tensor& x, int axis) {
    check_defined(x, "softmax");
    if (axis < 0 || axis >= x.rank()) {
        throw ShapeError("softmax axis " + std::to_string(axis) + " out of range for " +
                         shape_str(x.shape()));
    }
    const Shape& s = x.shape();
    const int64_t outer = prod(s, 0, axis);
    const int64_t extent = s[axis];
    const int64_t inner = prod(s, axis + 1, static_cast<int>(s.size()));
    auto out = make_node(s);
    const double* xv = x.data();
    double* yv = out->value.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
            const int64_t base = o * extent * inner + i;
            double mx = xv[base];
            for (int64_t e = 1; e < extent; ++e) mx = std::max(mx, xv[base + e * inner]);
            double z = 0.0;
            for (int64_t e = 0; e < extent; ++e) {
                const double v = std::exp(xv[base + e * inner] - mx);
                yv[base + e * inner] = v;
                z += v;
            }
            const double invz = 1.0 / z;
            for (int64_t e = 0; e < extent; ++e) yv[base + e * inner] *= invz;
        }
    }
    record(out, {x.node()}, [outer, extent, inner](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t ou = 0; ou < outer; ++ou) {
            for (int64_t i = 0; i < inner; ++i) {
                const int64_t base = ou * extent * inner + i;
                double dot = 0.0;
                for (int64_t e = 0; e < extent; ++e) {
                    dot += o.grad[base + e * inner] * o.value[base + e * inner];
                }
                for (int64_t e = 0; e < extent; ++e) {
                    const int64_t at = base + e * inner;
                    p.grad[at] += o.value[at] * (o.grad[at] - dot);
                }
            }
        }
    });
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Broadcasting binary ops

namespace {

enum class BinKind { Add, Mul };

Tensor binary_broadcast(const Tensor& a, const Tensor& b, BinKind kind, const char* who) {
    check_defined(a, who);
    check_defined(b, who);
    // Fast path: identical shapes, no index arithmetic.
    if (a.shape() == b.shape()) {
        auto out = make_node(a.shape());
        const double* av = a.data();
        const double* bv = b.data();
        double* yv = out->value.data();
        const int64_t n = out->numel();
        if (kind == BinKind::Add) {
            for (int64_t i = 0; i < n; ++i) yv[i] = av[i] + bv[i];
        } else {
            for (int64_t i = 0; i < n; ++i) yv[i] = av[i] * bv[i];
        }
        record(out, {a.node(), b.node()}, [kind](TensorNode& o) {
            TensorNode& A = *o.parents[0];
            TensorNode& B = *o.parents[1];
            const int64_t n = o.numel();
            if (A.requires_grad) {
                A.ensure_grad();
                if (kind == BinKind::Add) {
                    for (int64_t i = 0; i < n; ++i) A.grad[i] += o.grad[i];
                } else {
                    for (int64_t i = 0; i < n; ++i) A.grad[i] += o.grad[i] * B.value[i];
                }
            }
            if (B.requires_grad) {
                B.ensure_grad();
                if (kind == BinKind::Add) {
                    for (int64_t i = 0; i < n; ++i) B.grad[i] += o.grad[i];
                } else {
                    for (int64_t i = 0; i < n; ++i) B.grad[i] += o.grad[i] * A.value[i];
                }
            }
        });
        return Tensor(out);
    }

    BroadcastPlan plan = plan_broadcast(a.shape(), b.shape(), who);
    auto out = make_node(plan.out);
    const double* av = a.data();
    const double* bv = b.data();
    double* yv = out->value.data();
    if (kind == BinKind::Add) {
        for_each_broadcast(plan, [&](int64_t o, int64_t ia, int64_t ib) { yv[o] = av[ia] + bv[ib]; });
    } else {
        for_each_broadcast(plan, [&](int64_t o, int64_t ia, int64_t ib) { yv[o] = av[ia] * bv[ib]; });
    }
    record(out, {a.node(), b.node()}, [plan, kind](TensorNode& o) {
        TensorNode& A = *o.parents[0];
        TensorNode& B = *o.parents[1];
        if (A.requires_grad) A.ensure_grad();
        if (B.requires_grad) B.ensure_grad();
        for_each_broadcast(plan, [&](int64_t oi, int64_t ia, int64_t ib) {
            const double g = o.grad[oi];
            if (kind == BinKind::Add) {
                if (A.requires_grad) A.grad[ia] += g;
                if (B.requires_grad) B.grad[ib] += g;
            } else {
                if (A.requires_grad) A.grad[ia] += g * B.value[ib];
                if (B.requires_grad) B.grad[ib] += g * A.value[ia];
            }
        });
    });
    return Tensor(out);
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_broadcast(a, b, BinKind::Add, "add"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_broadcast(a, b, BinKind::Mul, "mul"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

Tensor add_n(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ShapeError("add_n: empty operand list");
    for (const auto& x : xs) check_defined(x, "add_n");
    for (size_t i = 1; i < xs.size(); ++i) {
        if (xs[i].shape() != xs[0].shape()) {
            throw ShapeError("add_n: operand " + std::to_string(i) + " has shape " +
                             shape_str(xs[i].shape()) + ", expected " + shape_str(xs[0].shape()));
        }
    }
    auto out = make_node(xs[0].shape());
    std::fill(out->value.begin(), out->value.end(), 0.0);
    const int64_t n = out->numel();
    for (const auto& x : xs) {
        const double* xv = x.data();
        double* yv = out->value.data();
        for (int64_t i = 0; i < n; ++i) yv[i] += xv[i];
    }
    std::vector<NodePtr> parents;
    parents.reserve(xs.size());
    for (const auto& x : xs) parents.push_back(x.node());
    record(out, std::move(parents), [](TensorNode& o) {
        const int64_t n = o.numel();
        for (auto& pp : o.parents) {
            TensorNode& p = *pp;
            if (!p.requires_grad) continue;
            p.ensure_grad();
            for (int64_t i = 0; i < n; ++i) p.grad[i] += o.grad[i];
        }
    });
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Unary ops

Tensor scale(const Tensor& x, double c) {
    return unary_op(x, [c](double v) { return v * c; },
                    [c](double, double) { return c; }, "scale");
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary_op(x, [c](double v) { return v + c; },
                    [](double, double) { return 1.0; }, "add_scalar");
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor relu(const Tensor& x) {
    return unary_op(x, [](double v) { return v > 0.0 ? v : 0.0; },
                    [](double v, double) { return v > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor elu(const Tensor& x, double alpha) {
    return unary_op(x, [alpha](double v) { return v > 0.0 ? v : alpha * (std::exp(v) - 1.0); },
                    // For v <= 0 the derivative is alpha*e^v, recoverable as y + alpha.
                    [alpha](double v, double y) { return v > 0.0 ? 1.0 : y + alpha; }, "elu");
}

Tensor sigmoid(const Tensor& x) {
    return unary_op(x,
                    [](double v) {
                        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                        : std::exp(v) / (1.0 + std::exp(v));
                    },
                    [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor log_t(const Tensor& x) {
    return unary_op(x, [](double v) { return std::log(v); },
                    [](double v, double) { return 1.0 / v; }, "log");
}

Tensor exp_t(const Tensor& x) {
    return unary_op(x, [](double v) { return std::exp(v); },
                    [](double, double y) { return y; }, "exp");
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) throw ShapeError("clamp: lo > hi");
    return unary_op(x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
                    [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; },
                    "clamp");
}

// ---------------------------------------------------------------------------
// Structure

Tensor reciprocal(const Tensor& x) {
    return unary_op(x, [](double v) { return 1.0 / v; },
                    [](double, double y) { return -y * y; }, "reciprocal");
}

Tensor transpose2d(const Tensor& x) {
    check_defined(x, "transpose2d");
    if (x.rank() != 2) throw ShapeError("transpose2d expects rank 2, got " + shape_str(x.shape()));
    const int r = x.dim(0), c = x.dim(1);
    auto out = make_node({c, r});
    const double* xv = x.data();
    double* yv = out->value.data();
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) yv[static_cast<int64_t>(j) * r + i] = xv[static_cast<int64_t>(i) * c + j];
    }
    record(out, {x.node()}, [r, c](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int j = 0; j < c; ++j) {
            for (int i = 0; i < r; ++i) {
                p.grad[static_cast<int64_t>(i) * c + j] += o.grad[static_cast<int64_t>(j) * r + i];
            }
        }
    });
    return Tensor(out);
}

Tensor reshape(const Tensor& x, const Shape& shape) {
    check_defined(x, "reshape");
    if (shape_numel(shape) != x.numel()) {
        throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                         " changes element count");
    }
    auto out = make_node(shape);
    out->value = x.n().value;
    record(out, {x.node()}, [](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const int64_t n = o.numel();
        for (int64_t i = 0; i < n; ++i) p.grad[i] += o.grad[i];
    });
    return Tensor(out);
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
    if (xs.empty()) throw ShapeError("concat: empty operand list");
    for (const auto& x : xs) check_defined(x, "concat");
    const Shape& s0 = xs[0].shape();
    if (axis < 0 || axis >= static_cast<int>(s0.size())) {
        throw ShapeError("concat axis " + std::to_string(axis) + " out of range for " + shape_str(s0));
    }
    int total = 0;
    for (const auto& x : xs) {
        const Shape& s = x.shape();
        if (s.size() != s0.size()) throw ShapeError("concat: rank mismatch");
        for (size_t i = 0; i < s.size(); ++i) {
            if (static_cast<int>(i) != axis && s[i] != s0[i]) {
                throw ShapeError("concat: shape mismatch " + shape_str(s) + " vs " + shape_str(s0) +
                                 " outside axis " + std::to_string(axis));
            }
        }
        total += s[axis];
    }
    Shape os = s0;
    os[axis] = total;
    auto out = make_node(os);
    const int64_t outer = prod(os, 0, axis);
    const int64_t inner = prod(os, axis + 1, static_cast<int>(os.size()));
    const int64_t out_block = static_cast<int64_t>(total) * inner;

    int64_t off = 0;
    for (const auto& x : xs) {
        const int64_t blk = static_cast<int64_t>(x.shape()[axis]) * inner;
        const double* xv = x.data();
        for (int64_t o = 0; o < outer; ++o) {
            std::memcpy(out->value.data() + o * out_block + off, xv + o * blk,
                        sizeof(double) * static_cast<size_t>(blk));
        }
        off += blk;
    }

    std::vector<NodePtr> parents;
    parents.reserve(xs.size());
    for (const auto& x : xs) parents.push_back(x.node());
    std::vector<int64_t> blocks;
    for (const auto& x : xs) blocks.push_back(static_cast<int64_t>(x.shape()[axis]) * inner);
    record(out, std::move(parents), [outer, out_block, blocks](TensorNode& o) {
        int64_t off = 0;
        for (size_t pi = 0; pi < o.parents.size(); ++pi) {
            TensorNode& p = *o.parents[pi];
            const int64_t blk = blocks[pi];
            if (p.requires_grad) {
                p.ensure_grad();
                for (int64_t ou = 0; ou < outer; ++ou) {
                    const double* g = o.grad.data() + ou * out_block + off;
                    double* pg = p.grad.data() + ou * blk;
                    for (int64_t i = 0; i < blk; ++i) pg[i] += g[i];
                }
            }
            off += blk;
        }
    });
    return Tensor(out);
}

Tensor narrow(const Tensor& x, int axis, int start, int len) {
    check_defined(x, "narrow");
    const Shape& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw ShapeError("narrow axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    if (start < 0 || len < 0 || start + len > s[axis]) {
        throw ShapeError("narrow window [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") exceeds extent " + std::to_string(s[axis]));
    }
    Shape os = s;
    os[axis] = len;
    auto out = make_node(os);
    const int64_t outer = prod(s, 0, axis);
    const int64_t inner = prod(s, axis + 1, static_cast<int>(s.size()));
    const int64_t in_block = static_cast<int64_t>(s[axis]) * inner;
    const int64_t out_block = static_cast<int64_t>(len) * inner;
    const int64_t skip = static_cast<int64_t>(start) * inner;
    for (int64_t o = 0; o < outer; ++o) {
        std::memcpy(out->value.data() + o * out_block, x.data() + o * in_block + skip,
                    sizeof(double) * static_cast<size_t>(out_block));
    }
    record(out, {x.node()}, [outer, in_block, out_block, skip](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t ou = 0; ou < outer; ++ou) {
            const double* g = o.grad.data() + ou * out_block;
            double* pg = p.grad.data() + ou * in_block + skip;
            for (int64_t i = 0; i < out_block; ++i) pg[i] += g[i];
        }
    });
    return Tensor(out);
}

std::vector<Tensor> split(const Tensor& x, int parts, int axis) {
    check_defined(x, "split");
    const Shape& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw ShapeError("split axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    if (parts <= 0 || s[axis] % parts != 0) {
        throw ShapeError("split: extent " + std::to_string(s[axis]) + " not divisible into " +
                         std::to_string(parts) + " parts");
    }
    const int step = s[axis] / parts;
    std::vector<Tensor> out;
    out.reserve(parts);
    for (int p = 0; p < parts; ++p) out.push_back(narrow(x, axis, p * step, step));
    return out;
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
    check_defined(x, "sum");
    auto out = make_node({1});
    double acc = 0.0;
    const double* xv = x.data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) acc += xv[i];
    out->value[0] = acc;
    record(out, {x.node()}, [](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const double g = o.grad[0];
        const int64_t n = p.numel();
        for (int64_t i = 0; i < n; ++i) p.grad[i] += g;
    });
    return Tensor(out);
}

Tensor mean(const Tensor& x) {
    check_defined(x, "mean");
    if (x.numel() == 0) throw ShapeError("mean of empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

namespace {

Shape drop_axis(const Shape& s, int axis) {
    Shape os;
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
        if (i != axis) os.push_back(s[i]);
    }
    if (os.empty()) os.push_back(1);
    return os;
}

} // namespace

Tensor reduce_sum(const Tensor& x, int axis) {
    check_defined(x, "reduce_sum");
    const Shape& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw ShapeError("reduce_sum axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    const int64_t outer = prod(s, 0, axis);
    const int64_t extent = s[axis];
    const int64_t inner = prod(s, axis + 1, static_cast<int>(s.size()));
    auto out = make_node(drop_axis(s, axis));
    const double* xv = x.data();
    double* yv = out->value.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
            double acc = 0.0;
            for (int64_t e = 0; e < extent; ++e) acc += xv[(o * extent + e) * inner + i];
            yv[o * inner + i] = acc;
        }
    }
    record(out, {x.node()}, [outer, extent, inner](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t ou = 0; ou < outer; ++ou) {
            for (int64_t i = 0; i < inner; ++i) {
                const double g = o.grad[ou * inner + i];
                for (int64_t e = 0; e < extent; ++e) p.grad[(ou * extent + e) * inner + i] += g;
            }
        }
    });
    return Tensor(out);
}

Tensor reduce_mean(const Tensor& x, int axis) {
    const int extent = x.shape()[static_cast<size_t>(axis)];
    return scale(reduce_sum(x, axis), 1.0 / static_cast<double>(extent));
}

Tensor reduce_max(const Tensor& x, int axis) {
    check_defined(x, "reduce_max");
    const Shape& s = x.shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw ShapeError("reduce_max axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    }
    const int64_t outer = prod(s, 0, axis);
    const int64_t extent = s[axis];
    const int64_t inner = prod(s, axis + 1, static_cast<int>(s.size()));
    auto out = make_node(drop_axis(s, axis));
    std::vector<int64_t> arg(static_cast<size_t>(outer * inner));
    const double* xv = x.data();
    double* yv = out->value.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
            int64_t best = (o * extent) * inner + i;
            double bv = xv[best];
            for (int64_t e = 1; e < extent; ++e) {
                const int64_t at = (o * extent + e) * inner + i;
                if (xv[at] > bv) { bv = xv[at]; best = at; }
            }
            yv[o * inner + i] = bv;
            arg[static_cast<size_t>(o * inner + i)] = best;
        }
    }
    record(out, {x.node()}, [arg](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        const int64_t n = o.numel();
        for (int64_t i = 0; i < n; ++i) p.grad[arg[static_cast<size_t>(i)]] += o.grad[i];
    });
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Indexed access

Tensor pick_per_column(const Tensor& x, const std::vector<int>& idx) {
    check_defined(x, "pick_per_column");
    if (x.rank() != 2) throw ShapeError("pick_per_column expects [C x T], got " + shape_str(x.shape()));
    const int C = x.dim(0), T = x.dim(1);
    if (static_cast<int>(idx.size()) != T) {
        throw ShapeError("pick_per_column: " + std::to_string(idx.size()) + " indices for T=" +
                         std::to_string(T));
    }
    for (int t = 0; t < T; ++t) {
        if (idx[t] < 0 || idx[t] >= C) {
            throw DataError("pick_per_column: index " + std::to_string(idx[t]) + " at position " +
                            std::to_string(t) + " outside [0, " + std::to_string(C) + ")");
        }
    }
    auto out = make_node({T});
    const double* xv = x.data();
    for (int t = 0; t < T; ++t) out->value[t] = xv[static_cast<int64_t>(idx[t]) * T + t];
    record(out, {x.node()}, [idx, T](TensorNode& o) {
        TensorNode& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int t = 0; t < T; ++t) p.grad[static_cast<int64_t>(idx[t]) * T + t] += o.grad[t];
    });
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// Initialisation

void fill_uniform(Tensor& t, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    double* v = t.data();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) v[i] = dist(rng);
}

void fill_glorot_uniform(Tensor& t, std::mt19937_64& rng, int fan_in, int fan_out) {
    if (fan_in + fan_out <= 0) throw InvariantError("fill_glorot_uniform: non-positive fan sum");
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    fill_uniform(t, rng, -a, a);
}

} // namespace dest
