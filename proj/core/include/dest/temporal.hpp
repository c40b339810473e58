#pragma once

#include <random>

#include "dest/tensor.hpp"

namespace dest {

// Row-decoupled temporal convolution layer. Every input row v owns a private
// filter bank mapping its 1 x T signal to C_t x T; the per-row results are
// averaged:
//
//   H = (1/D) * sum_v [ DConv(w[v], J_v) + lift_v(J_v) ]
//
// lift_v raises the row to C_t channels for the residual path: a plain value
// copy across channels when D == C_t (no parameters; the averaged residual is
// then the row-mean of J broadcast over channels), otherwise a trainable
// per-row column p_v in R^(C_t).
struct JtmTcnLayerParams {
    int rows = 0;      // D
    int c_t = 0;
    int kernel = 0;    // C_f, odd
    bool use_residual = true;
    Tensor w;          // [D x C_t x C_f]
    Tensor res_p;      // [D x C_t] when rows != c_t and use_residual; else undefined
};

JtmTcnLayerParams make_jtm_tcn_layer(int rows, int c_t, int kernel, bool use_residual,
                                     std::mt19937_64& rng);

// J: [D x T]. Same zero-padding as conv1d; the filters carry no bias, so an
// all-zero row contributes nothing outside the residual path.
Tensor jtm_tcn_forward(const Tensor& J, const JtmTcnLayerParams& p, int dilation);

// The joint-shared baseline runs the identical row-decoupled kernel over the
// channel rows of joint-collapsed features (the collapse happens upstream).
Tensor jwtm_forward(const Tensor& S_collapsed, const JtmTcnLayerParams& p, int dilation);

// Row-decoupled linear-attention layer. Each row is embedded to T x C_t,
// projected to query/feature/value maps, and attended with the kernel trick
//   out_v = phi(Q_v) (phi(F_v)^T U_v),   phi(x) = ELU(x) + 1
// so cost stays linear in T. Outputs are transposed, averaged over rows and
// given the same residual treatment as the TCN variant.
struct JtmTransformerLayerParams {
    int rows = 0;
    int c_t = 0;
    bool use_residual = true;
    bool normalized = false;   // divide each output row by phi(Q) . sum_t phi(F)_t
    Tensor emb_w;              // [D x C_t]
    Tensor emb_b;              // [D x C_t]
    Tensor q_w, f_w, u_w;      // [D x C_t x C_t]
    Tensor q_b, f_b, u_b;      // [D x C_t]
    Tensor res_p;              // [D x C_t] when rows != c_t and use_residual
};

JtmTransformerLayerParams make_jtm_transformer_layer(int rows, int c_t, bool use_residual,
                                                     bool normalized, std::mt19937_64& rng);

Tensor jtm_transformer_forward(const Tensor& J, const JtmTransformerLayerParams& p);

// The attention core on already-projected matrices (exposed for testing):
// Q, F, U are [T x C], result is [T x C].
Tensor linear_attention(const Tensor& Q, const Tensor& F, const Tensor& U, bool normalized);

// Dilation schedule for stacked temporal layers: 2^(layer-1), capped at T/4
// (and never below 1). layer is 1-based.
int jtm_dilation(int layer, int T);

} // namespace dest
