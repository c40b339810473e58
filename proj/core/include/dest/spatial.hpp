#pragma once

#include <random>
#include <string>
#include <vector>

#include "dest/graph.hpp"
#include "dest/tensor.hpp"

namespace dest {

// Multi-scale spatial block: pointwise input projection, K graph aggregations
// (each scale gets a trainable additive mask on top of the fixed rescaled
// adjacency), channel concatenation, then a per-(frame, joint) two-layer MLP.
struct SpatialParams {
    Tensor w_in;                 // [C_mid x C_in]
    Tensor b_in;                 // [C_mid x 1]
    std::vector<Tensor> masks;   // K trainable [V x V], zero-initialised
    Tensor mlp_w1;               // [C_s x K*C_mid]
    Tensor mlp_b1;               // [C_s x 1]
    Tensor mlp_w2;               // [C_s x C_s]
    Tensor mlp_b2;               // [C_s x 1]
};

SpatialParams make_spatial_params(int C_in, int C_mid, int K, int V, int C_s,
                                  std::mt19937_64& rng);

// X: [C_in x T x V], a_hat: K fixed [V x V] scale matrices. Result [C_s x T x V].
Tensor spatial_forward(const Tensor& X, const std::vector<Tensor>& a_hat,
                       const SpatialParams& p);

// Channel groups S_1..S_M along the leading axis, each [C_s/M x T x V].
std::vector<Tensor> split_groups(const Tensor& S, int M);

// Which axis the sub-feature transform collapses. Channels is the standard
// path (joint-resolved rows for the temporal stack); Joints is the
// joint-shared baseline (channel rows only).
enum class CollapseAxis { Channels, Joints };

// Trainable weights for the convolution transform mode; unused by the pools.
// Channels mode: w is [1 x C_g]; Joints mode: w is [V x 1]; b is [1 x 1].
struct TransformParams {
    Tensor w;
    Tensor b;
};

TransformParams make_transform_params(int collapsed_extent, CollapseAxis axis,
                                      std::mt19937_64& rng);

// S_i: [C_g x T x V]. Collapsing channels yields [T x V]; collapsing joints
// yields [C_g x T]. mode is one of convolution | avgpool | maxpool.
Tensor transform(const Tensor& S_i, const std::string& mode, CollapseAxis axis,
                 const TransformParams* p);

} // namespace dest
