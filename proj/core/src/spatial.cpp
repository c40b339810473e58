#include "dest/spatial.hpp"

#include "dest/ops.hpp"

namespace dest {

SpatialParams make_spatial_params(int C_in, int C_mid, int K, int V, int C_s,
                                  std::mt19937_64& rng) {
    SpatialParams p;
    p.w_in = Tensor::zeros({C_mid, C_in}, true);
    fill_glorot_uniform(p.w_in, rng, C_in, C_mid);
    p.b_in = Tensor::zeros({C_mid, 1}, true);
    p.masks.reserve(K);
    for (int k = 0; k < K; ++k) {
        // Starts at zero so the first forward pass sees pure topology.
        p.masks.push_back(Tensor::zeros({V, V}, true));
    }
    p.mlp_w1 = Tensor::zeros({C_s, K * C_mid}, true);
    fill_glorot_uniform(p.mlp_w1, rng, K * C_mid, C_s);
    p.mlp_b1 = Tensor::zeros({C_s, 1}, true);
    p.mlp_w2 = Tensor::zeros({C_s, C_s}, true);
    fill_glorot_uniform(p.mlp_w2, rng, C_s, C_s);
    p.mlp_b2 = Tensor::zeros({C_s, 1}, true);
    return p;
}

Tensor spatial_forward(const Tensor& X, const std::vector<Tensor>& a_hat,
                       const SpatialParams& p) {
    if (X.rank() != 3) {
        throw ShapeError("spatial_forward expects [C_in x T x V], got " + shape_str(X.shape()));
    }
    const int C_in = X.dim(0), T = X.dim(1), V = X.dim(2);
    if (p.w_in.dim(1) != C_in) {
        throw ShapeError("spatial_forward: input has " + std::to_string(C_in) +
                         " channels, projection expects " + std::to_string(p.w_in.dim(1)));
    }
    if (a_hat.empty() || a_hat.size() != p.masks.size()) {
        throw ShapeError("spatial_forward: " + std::to_string(a_hat.size()) +
                         " scale matrices vs " + std::to_string(p.masks.size()) + " masks");
    }
    for (const auto& a : a_hat) {
        if (a.rank() != 2 || a.dim(0) != V || a.dim(1) != V) {
            throw ShapeError("spatial_forward: scale matrix shape " + shape_str(a.shape()) +
                             " does not match V=" + std::to_string(V));
        }
    }
    const int C_mid = p.w_in.dim(0);
    const int K = static_cast<int>(a_hat.size());

    // Pointwise channel projection, applied jointly over all (t, v) columns.
    Tensor x_flat = reshape(X, {C_in, T * V});
    Tensor proj = add(matmul(p.w_in, x_flat), p.b_in);          // [C_mid x T*V]

    // Per-scale joint aggregation: right-multiply by (A_hat_k + B_k) with the
    // (channel, frame) pairs flattened into rows.
    Tensor rows = reshape(proj, {C_mid * T, V});
    std::vector<Tensor> scales;
    scales.reserve(K);
    for (int k = 0; k < K; ++k) {
        Tensor op = add(a_hat[k], p.masks[k]);                  // [V x V]
        scales.push_back(reshape(matmul(rows, op), {C_mid, T * V}));
    }
    Tensor cat = concat(scales, 0);                             // [K*C_mid x T*V]

    Tensor h = relu(add(matmul(p.mlp_w1, cat), p.mlp_b1));
    Tensor s = add(matmul(p.mlp_w2, h), p.mlp_b2);              // [C_s x T*V]
    return reshape(s, {p.mlp_w2.dim(0), T, V});
}

std::vector<Tensor> split_groups(const Tensor& S, int M) {
    if (S.rank() != 3) {
        throw ShapeError("split_groups expects [C_s x T x V], got " + shape_str(S.shape()));
    }
    if (M < 1 || S.dim(0) % M != 0) {
        throw ConfigError("group count " + std::to_string(M) + " must divide the " +
                          std::to_string(S.dim(0)) + " spatial channels");
    }
    return split(S, M, 0);
}

TransformParams make_transform_params(int collapsed_extent, CollapseAxis axis,
                                      std::mt19937_64& rng) {
    TransformParams p;
    const Shape wshape = axis == CollapseAxis::Channels ? Shape{1, collapsed_extent}
                                                        : Shape{collapsed_extent, 1};
    p.w = Tensor::zeros(wshape, true);
    fill_glorot_uniform(p.w, rng, collapsed_extent, 1);
    p.b = Tensor::zeros({1, 1}, true);
    return p;
}

Tensor transform(const Tensor& S_i, const std::string& mode, CollapseAxis axis,
                 const TransformParams* p) {
    if (S_i.rank() != 3) {
        throw ShapeError("transform expects [C_g x T x V], got " + shape_str(S_i.shape()));
    }
    const int C_g = S_i.dim(0), T = S_i.dim(1), V = S_i.dim(2);

    if (mode == "avgpool" || mode == "maxpool") {
        const int ax = axis == CollapseAxis::Channels ? 0 : 2;
        return mode == "avgpool" ? reduce_mean(S_i, ax) : reduce_max(S_i, ax);
    }
    if (mode != "convolution") {
        throw ConfigError("transform mode must be convolution|avgpool|maxpool, got '" + mode + "'");
    }
    if (p == nullptr) throw InvariantError("transform: convolution mode needs parameters");

    if (axis == CollapseAxis::Channels) {
        if (p->w.dim(1) != C_g) {
            throw ShapeError("transform: weight " + shape_str(p->w.shape()) + " vs C_g=" +
                             std::to_string(C_g));
        }
        Tensor flat = reshape(S_i, {C_g, T * V});
        Tensor y = add(matmul(p->w, flat), p->b);               // [1 x T*V]
        return reshape(y, {T, V});
    }
    if (p->w.dim(0) != V) {
        throw ShapeError("transform: weight " + shape_str(p->w.shape()) + " vs V=" +
                         std::to_string(V));
    }
    Tensor rows = reshape(S_i, {C_g * T, V});
    Tensor y = add(matmul(rows, p->w), p->b);                   // [C_g*T x 1]
    return reshape(y, {C_g, T});
}

} // namespace dest
