#pragma once

#include <random>
#include <string>

#include "dest/tensor.hpp"

namespace dest {

// Cross-attention between one spatial sub-feature and the running temporal
// state. The sub-feature (time-major, D_s spatial rows per frame) is projected
// to C_t channel rows; channel-level affinities against H form the attention
// map, and the re-mixed H is added back residually:
//
//   P = W_C * S_hat^T + b            [C_t x T]
//   A = softmax(P H^T / tau, rows)   [C_t x C_t]
//   R = A H + H
//
// The summation mode skips the affinity step entirely: R = P + H.
struct DstiParams {
    int c_t = 0;
    int d_s = 0;      // rows of the incoming sub-feature (joints, or channels
                      // of the joint-collapsed baseline)
    Tensor wc_w;      // [C_t x D_s]
    Tensor wc_b;      // [C_t x 1]
};

DstiParams make_dsti_params(int c_t, int d_s, std::mt19937_64& rng);

struct DstiResult {
    Tensor R;         // [C_t x T]
    Tensor A;         // [C_t x C_t]; undefined in summation mode
};

// S_hat: [T x D_s], H: [C_t x T]. tau must be positive (callers resolve the
// sqrt(T) default before calling). mode: cross_attention | summation.
DstiResult dsti_forward(const Tensor& S_hat, const Tensor& H, const DstiParams& p,
                        double tau, const std::string& mode);

// Writes an attention matrix as plain text: one row per query, full-precision
// space-separated values.
void export_attention(const Tensor& A, const std::string& path);

} // namespace dest
