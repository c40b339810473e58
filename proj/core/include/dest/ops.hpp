#pragma once

#include <random>
#include <vector>

#include "dest/tensor.hpp"

namespace dest {

// Dense linear algebra ------------------------------------------------------

// 2-D matrix product: [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

// Dilated 1-D convolution with same zero-padding.
//   x: [c_in x T], w: [c_out x c_in x k] (k odd), result [c_out x T]
// Output frame t reads input frames t + (j - k/2) * dilation for each tap j;
// out-of-range reads are zeros.
Tensor conv1d(const Tensor& x, const Tensor& w, int dilation = 1);

// Softmax along `axis` with max-subtraction for overflow safety.
Tensor softmax(const Tensor& x, int axis);

// Elementwise / structural ---------------------------------------------------

// add/mul broadcast in the usual trailing-axes sense (an extent of 1 on one
// side stretches to the other side's extent).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor add_n(const std::vector<Tensor>& xs);

Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor neg(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor elu(const Tensor& x, double alpha = 1.0);
Tensor sigmoid(const Tensor& x);
Tensor log_t(const Tensor& x);
Tensor exp_t(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor reciprocal(const Tensor& x);

Tensor transpose2d(const Tensor& x);
Tensor reshape(const Tensor& x, const Shape& shape);
Tensor concat(const std::vector<Tensor>& xs, int axis);
std::vector<Tensor> split(const Tensor& x, int parts, int axis);
Tensor narrow(const Tensor& x, int axis, int start, int len);

// Reductions -----------------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor reduce_sum(const Tensor& x, int axis);
Tensor reduce_mean(const Tensor& x, int axis);
// Max along an axis; gradient flows to the first maximizing element.
Tensor reduce_max(const Tensor& x, int axis);

// Indexed access --------------------------------------------------------------

// y[t] = x[idx[t], t] for x of shape [C x T]; idx values must lie in [0, C).
Tensor pick_per_column(const Tensor& x, const std::vector<int>& idx);

// Initialisation --------------------------------------------------------------

void fill_uniform(Tensor& t, std::mt19937_64& rng, double lo, double hi);

// Draws from U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void fill_glorot_uniform(Tensor& t, std::mt19937_64& rng, int fan_in, int fan_out);

} // namespace dest
