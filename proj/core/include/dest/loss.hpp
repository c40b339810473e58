#pragma once

#include <vector>

#include "dest/config.hpp"
#include "dest/tensor.hpp"

namespace dest {

// Ground-truth boundary track for the boundary branch: 1 exactly at frames
// where the label changes (the first frame of every segment after the first),
// plus the positive-sample weight w_p = T / #boundaries (0 when none exist).
struct BoundaryTarget {
    std::vector<double> p_b;
    double w_p = 0.0;
};

BoundaryTarget derive_boundaries(const std::vector<int>& labels);

// Mean over frames of -log Y_c[label_t, t]. Y_c: [C_o x T] column
// distributions; probabilities are floored at 1e-12 before the log.
Tensor ce_loss(const Tensor& y_c, const std::vector<int>& labels);

// Gaussian-similarity-weighted truncated MSE over adjacent log-probabilities:
//   (1/(T*C_o)) sum_{t>0,c} exp(-|f_t - f_{t-1}|^2 / (2 sigma^2))
//                           * clamp(log Y_c[c,t] - log Y_c[c,t-1], +-trunc)^2
// The t-1 operand and the weights are treated as constants, so the gradient
// only pushes each frame toward its (frozen) predecessor. features: [F x T],
// time-aligned with Y_c.
Tensor gs_tmse_loss(const Tensor& y_c, const Tensor& features, double sigma, double trunc);

// Same smoothing objective with the frozen operand passed explicitly as a
// constant [C x (T-1)] log-probability block instead of being split off y_c.
// gs_tmse_loss delegates here; the finite-difference harness calls it directly
// with the linearization point's log-probabilities, because freezing the t-1
// operand is what makes the stop-gradient construction an ordinary function
// whose finite differences equal its analytic gradient.
Tensor gs_tmse_from_prev(const Tensor& y_c, const Tensor& prev_log, const Tensor& features,
                         double sigma, double trunc);

// Weighted binary logistic loss for the boundary track, minimized:
//   -(1/T) sum_t [ w_p * P_b(t) * log Y_b(t) + (1 - P_b(t)) * log(1 - Y_b(t)) ]
// Probabilities are clipped to [1e-12, 1 - 1e-12] first.
Tensor brb_loss(const Tensor& y_b, const BoundaryTarget& target);

// Deep-supervised composite: sum over class-branch stage outputs of
// (ce + gs_tmse) plus gamma times the sum over boundary-branch stage outputs
// of brb_loss. `features` drives the smoothing weights when
// cfg.similarity_source == "input"; with "stage" each stage weighs itself by
// its own (frozen) probabilities.
Tensor total_loss(const std::vector<Tensor>& y_cls, const std::vector<Tensor>& y_bnd,
                  const std::vector<int>& labels, const Tensor& features,
                  const LossConfig& cfg);

} // namespace dest
