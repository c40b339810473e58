#include "dest/interaction.hpp"

#include <cstdio>
#include <fstream>

#include "dest/ops.hpp"

namespace dest {

DstiParams make_dsti_params(int c_t, int d_s, std::mt19937_64& rng) {
    if (c_t < 1 || d_s < 1) throw ConfigError("dsti: c_t and d_s must be >= 1");
    DstiParams p;
    p.c_t = c_t;
    p.d_s = d_s;
    p.wc_w = Tensor::zeros({c_t, d_s}, true);
    fill_glorot_uniform(p.wc_w, rng, d_s, c_t);
    p.wc_b = Tensor::zeros({c_t, 1}, true);
    return p;
}

DstiResult dsti_forward(const Tensor& S_hat, const Tensor& H, const DstiParams& p,
                        double tau, const std::string& mode) {
    if (S_hat.rank() != 2) {
        throw ShapeError("dsti_forward: sub-feature must be [T x D_s], got " +
                         shape_str(S_hat.shape()));
    }
    if (H.rank() != 2) {
        throw ShapeError("dsti_forward: temporal state must be [C_t x T], got " +
                         shape_str(H.shape()));
    }
    const int T = S_hat.dim(0), D_s = S_hat.dim(1);
    if (D_s != p.d_s) {
        throw ShapeError("dsti_forward: sub-feature has " + std::to_string(D_s) +
                         " rows, projection expects " + std::to_string(p.d_s));
    }
    if (H.dim(0) != p.c_t || H.dim(1) != T) {
        throw ShapeError("dsti_forward: temporal state " + shape_str(H.shape()) +
                         " does not match C_t=" + std::to_string(p.c_t) + ", T=" +
                         std::to_string(T));
    }

    Tensor proj = add(matmul(p.wc_w, transpose2d(S_hat)), p.wc_b);   // [C_t x T]

    if (mode == "summation") {
        return {add(proj, H), Tensor()};
    }
    if (mode != "cross_attention") {
        throw ConfigError("interaction mode must be cross_attention|summation, got '" + mode + "'");
    }
    if (tau <= 0.0) throw ConfigError("dsti_forward: tau must be positive, got " + std::to_string(tau));

    Tensor scores = scale(matmul(proj, transpose2d(H)), 1.0 / tau);  // [C_t x C_t]
    Tensor A = softmax(scores, 1);                                    // rows are queries
    Tensor R = add(matmul(A, H), H);
    return {R, A};
}

void export_attention(const Tensor& A, const std::string& path) {
    if (A.rank() != 2) {
        throw ShapeError("export_attention expects a matrix, got " + shape_str(A.shape()));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write attention file: " + path);
    const int R = A.dim(0), C = A.dim(1);
    const double* a = A.data();
    char buf[64];
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", a[static_cast<int64_t>(i) * C + j]);
            if (j) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("failed while writing attention file: " + path);
}

} // namespace dest
