#include "dest/temporal.hpp"

#include <algorithm>
#include <cmath>

#include "dest/ops.hpp"
#include "kernels.hpp"

namespace dest {

int jtm_dilation(int layer, int T) {
    if (layer < 1) throw InvariantError("jtm_dilation: layer index is 1-based");
    const int cap = std::max(1, T / 4);
    // Grow doubling but stop once the cap is hit; avoids overflow for deep stacks.
    int d = 1;
    for (int l = 1; l < layer && d < cap; ++l) d *= 2;
    return std::min(d, cap);
}

JtmTcnLayerParams make_jtm_tcn_layer(int rows, int c_t, int kernel, bool use_residual,
                                     std::mt19937_64& rng) {
    if (rows < 1 || c_t < 1) throw ConfigError("jtm tcn layer: rows and c_t must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("jtm tcn layer: kernel must be odd");
    JtmTcnLayerParams p;
    p.rows = rows;
    p.c_t = c_t;
    p.kernel = kernel;
    p.use_residual = use_residual;
    p.w = Tensor::zeros({rows, c_t, kernel}, true);
    fill_glorot_uniform(p.w, rng, kernel, c_t);
    if (use_residual && rows != c_t) {
        p.res_p = Tensor::zeros({rows, c_t}, true);
        fill_glorot_uniform(p.res_p, rng, 1, c_t);
    }
    return p;
}

namespace {

inline void tap_range(int T, int off, int& t0, int& t1) {
    t0 = std::max(0, -off);
    t1 = std::min(T, T - off);
}

} // namespace

Tensor jtm_tcn_forward(const Tensor& J, const JtmTcnLayerParams& p, int dilation) {
    if (J.rank() != 2) throw ShapeError("jtm_tcn_forward expects [D x T], got " + shape_str(J.shape()));
    const int D = J.dim(0), T = J.dim(1);
    if (D != p.rows) {
        throw ShapeError("jtm_tcn_forward: input has " + std::to_string(D) + " rows, layer owns " +
                         std::to_string(p.rows));
    }
    if (dilation < 1) throw ShapeError("jtm_tcn_forward: dilation must be >= 1");
    const int C = p.c_t, k = p.kernel, h = k / 2;
    const bool identity_lift = p.use_residual && !p.res_p.defined();
    const double inv_d = 1.0 / static_cast<double>(D);

    auto out = make_node({C, T});
    std::fill(out->value.begin(), out->value.end(), 0.0);
    double* y = out->value.data();
    const double* jv = J.data();
    const double* wv = p.w.data();

    // Conv part: for tap j the row filters stack into a [C x D] matrix, so the
    // whole sum over rows is one GEMM against the shifted input window.
    std::vector<double> tap(static_cast<size_t>(C) * D);
    for (int j = 0; j < k; ++j) {
        const int off = (j - h) * dilation;
        int t0, t1;
        tap_range(T, off, t0, t1);
        if (t0 >= t1) continue;
        for (int o = 0; o < C; ++o) {
            for (int v = 0; v < D; ++v) {
                tap[static_cast<size_t>(o) * D + v] = wv[(static_cast<size_t>(v) * C + o) * k + j];
            }
        }
        kern::gemm_nn(C, t1 - t0, D, tap.data(), D, jv + (t0 + off), T, y + t0, T, true);
    }

    if (p.use_residual) {
        if (identity_lift) {
            // Residual collapses to the column sums of J on every channel row.
            std::vector<double> colsum(static_cast<size_t>(T), 0.0);
            for (int v = 0; v < D; ++v) {
                const double* row = jv + static_cast<int64_t>(v) * T;
                for (int t = 0; t < T; ++t) colsum[static_cast<size_t>(t)] += row[t];
            }
            for (int o = 0; o < C; ++o) {
                double* yo = y + static_cast<int64_t>(o) * T;
                for (int t = 0; t < T; ++t) yo[t] += colsum[static_cast<size_t>(t)];
            }
        } else {
            // res_p^T * J
            kern::gemm_tn(C, T, D, p.res_p.data(), C, jv, T, y, T, true);
        }
    }
    for (int64_t i = 0; i < out->numel(); ++i) out->value[static_cast<size_t>(i)] *= inv_d;

    std::vector<NodePtr> parents{J.node(), p.w.node()};
    const bool has_res_param = p.res_p.defined() && p.use_residual;
    if (has_res_param) parents.push_back(p.res_p.node());
    const bool use_res = p.use_residual;

    if (grad_enabled() &&
        (J.requires_grad() || p.w.requires_grad() || (has_res_param && p.res_p.requires_grad()))) {
        out->requires_grad = true;
        out->parents = std::move(parents);
        out->backward_fn = [D, T, C, k, h, dilation, inv_d, use_res, has_res_param,
                            identity_lift](TensorNode& o) {
            TensorNode& Jn = *o.parents[0];
            TensorNode& Wn = *o.parents[1];
            TensorNode* Pn = has_res_param ? o.parents[2].get() : nullptr;

            std::vector<double> gs(o.grad.size());
            for (size_t i = 0; i < gs.size(); ++i) gs[i] = o.grad[i] * inv_d;

            std::vector<double> tap(static_cast<size_t>(C) * D);
            if (Jn.requires_grad) Jn.ensure_grad();
            if (Wn.requires_grad) Wn.ensure_grad();
            if (Pn && Pn->requires_grad) Pn->ensure_grad();

            for (int j = 0; j < k; ++j) {
                const int off = (j - h) * dilation;
                int t0, t1;
                tap_range(T, off, t0, t1);
                if (t0 >= t1) continue;
                if (Jn.requires_grad) {
                    for (int o2 = 0; o2 < C; ++o2) {
                        for (int v = 0; v < D; ++v) {
                            tap[static_cast<size_t>(o2) * D + v] =
                                Wn.value[(static_cast<size_t>(v) * C + o2) * k + j];
                        }
                    }
                    kern::gemm_tn(D, t1 - t0, C, tap.data(), D, gs.data() + t0, T,
                                  Jn.grad.data() + (t0 + off), T, true);
                }
                if (Wn.requires_grad) {
                    kern::gemm_nt(C, D, t1 - t0, gs.data() + t0, T,
                                  Jn.value.data() + (t0 + off), T, tap.data(), D, false);
                    for (int o2 = 0; o2 < C; ++o2) {
                        for (int v = 0; v < D; ++v) {
                            Wn.grad[(static_cast<size_t>(v) * C + o2) * k + j] +=
                                tap[static_cast<size_t>(o2) * D + v];
                        }
                    }
                }
            }

            if (use_res) {
                if (identity_lift) {
                    if (Jn.requires_grad) {
                        std::vector<double> gcol(static_cast<size_t>(T), 0.0);
                        for (int o2 = 0; o2 < C; ++o2) {
                            const double* go = gs.data() + static_cast<int64_t>(o2) * T;
                            for (int t = 0; t < T; ++t) gcol[static_cast<size_t>(t)] += go[t];
                        }
                        for (int v = 0; v < D; ++v) {
                            double* jg = Jn.grad.data() + static_cast<int64_t>(v) * T;
                            for (int t = 0; t < T; ++t) jg[t] += gcol[static_cast<size_t>(t)];
                        }
                    }
                } else if (Pn) {
                    if (Jn.requires_grad) {
                        kern::gemm_nn(D, T, C, Pn->value.data(), C, gs.data(), T,
                                      Jn.grad.data(), T, true);
                    }
                    if (Pn->requires_grad) {
                        kern::gemm_nt(D, C, T, Jn.value.data(), T, gs.data(), T,
                                      Pn->grad.data(), C, true);
                    }
                }
            }
        };
    }
    return Tensor(out);
}

Tensor jwtm_forward(const Tensor& S_collapsed, const JtmTcnLayerParams& p, int dilation) {
    // Identical machinery; rows are channels of the joint-collapsed features.
    return jtm_tcn_forward(S_collapsed, p, dilation);
}

JtmTransformerLayerParams make_jtm_transformer_layer(int rows, int c_t, bool use_residual,
                                                     bool normalized, std::mt19937_64& rng) {
    if (rows < 1 || c_t < 1) throw ConfigError("jtm transformer layer: rows and c_t must be >= 1");
    JtmTransformerLayerParams p;
    p.rows = rows;
    p.c_t = c_t;
    p.use_residual = use_residual;
    p.normalized = normalized;
    auto mk = [&](const Shape& s, int fin, int fout) {
        Tensor t = Tensor::zeros(s, true);
        fill_glorot_uniform(t, rng, fin, fout);
        return t;
    };
    p.emb_w = mk({rows, c_t}, 1, c_t);
    p.emb_b = Tensor::zeros({rows, c_t}, true);
    p.q_w = mk({rows, c_t, c_t}, c_t, c_t);
    p.q_b = Tensor::zeros({rows, c_t}, true);
    p.f_w = mk({rows, c_t, c_t}, c_t, c_t);
    p.f_b = Tensor::zeros({rows, c_t}, true);
    p.u_w = mk({rows, c_t, c_t}, c_t, c_t);
    p.u_b = Tensor::zeros({rows, c_t}, true);
    if (use_residual && rows != c_t) {
        p.res_p = Tensor::zeros({rows, c_t}, true);
        fill_glorot_uniform(p.res_p, rng, 1, c_t);
    }
    return p;
}

Tensor linear_attention(const Tensor& Q, const Tensor& F, const Tensor& U, bool normalized) {
    if (Q.rank() != 2 || F.rank() != 2 || U.rank() != 2 || Q.shape() != F.shape() ||
        Q.shape() != U.shape()) {
        throw ShapeError("linear_attention expects three equal [T x C] operands");
    }
    Tensor phi_q = add_scalar(elu(Q, 1.0), 1.0);
    Tensor phi_f = add_scalar(elu(F, 1.0), 1.0);
    Tensor kv = matmul(transpose2d(phi_f), U);      // [C x C]
    Tensor out = matmul(phi_q, kv);                 // [T x C]
    if (normalized) {
        const int C = Q.dim(1);
        Tensor mass = reshape(reduce_sum(phi_f, 0), {C, 1});   // sum_t phi(F)_t
        Tensor denom = matmul(phi_q, mass);                    // [T x 1]
        out = mul(out, reciprocal(denom));                     // row-wise divide
    }
    return out;
}

Tensor jtm_transformer_forward(const Tensor& J, const JtmTransformerLayerParams& p) {
    if (J.rank() != 2) {
        throw ShapeError("jtm_transformer_forward expects [D x T], got " + shape_str(J.shape()));
    }
    const int D = J.dim(0), T = J.dim(1);
    if (D != p.rows) {
        throw ShapeError("jtm_transformer_forward: input has " + std::to_string(D) +
                         " rows, layer owns " + std::to_string(p.rows));
    }
    const int C = p.c_t;

    std::vector<Tensor> contributions;
    contributions.reserve(D);
    for (int v = 0; v < D; ++v) {
        Tensor jv = transpose2d(narrow(J, 0, v, 1));                       // [T x 1]
        Tensor ew = narrow(p.emb_w, 0, v, 1);                              // [1 x C]
        Tensor eb = narrow(p.emb_b, 0, v, 1);
        Tensor e = add(matmul(jv, ew), eb);                                // [T x C]
        auto proj = [&](const Tensor& w3, const Tensor& b2) {
            Tensor w = reshape(narrow(w3, 0, v, 1), {C, C});
            Tensor b = narrow(b2, 0, v, 1);                                // [1 x C]
            return add(matmul(e, w), b);                                   // [T x C]
        };
        Tensor q = proj(p.q_w, p.q_b);
        Tensor f = proj(p.f_w, p.f_b);
        Tensor u = proj(p.u_w, p.u_b);
        contributions.push_back(transpose2d(linear_attention(q, f, u, p.normalized)));
    }
    Tensor h = scale(add_n(contributions), 1.0 / static_cast<double>(D));  // [C x T]

    if (p.use_residual) {
        Tensor res;
        if (p.res_p.defined()) {
            res = scale(matmul(transpose2d(p.res_p), J), 1.0 / static_cast<double>(D));
        } else {
            Tensor ones = Tensor::full({1, D}, 1.0);
            res = scale(matmul(ones, J), 1.0 / static_cast<double>(D));    // [1 x T], broadcasts
        }
        h = add(h, res);
    }
    return h;
}

} // namespace dest
