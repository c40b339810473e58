#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "dest/ops.hpp"
#include "dest/temporal.hpp"

using namespace dest;

namespace {

Tensor rnd(const Shape& shape, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = u(rng);
    return Tensor::from_data(shape, std::move(v));
}

// Loop re-derivation of the row-decoupled temporal layer.
std::vector<double> jtm_oracle(const Tensor& J, const JtmTcnLayerParams& p, int dilation) {
    const int D = J.dim(0), T = J.dim(1);
    const int C = p.c_t, k = p.kernel;
    std::vector<double> out(static_cast<size_t>(C) * T, 0.0);
    for (int v = 0; v < D; ++v)
        for (int o = 0; o < C; ++o)
            for (int t = 0; t < T; ++t) {
                double acc = 0.0;
                for (int j = 0; j < k; ++j) {
                    int src = t + (j - k / 2) * dilation;
                    if (src < 0 || src >= T) continue;
                    acc += p.w.data()[(v * C + o) * k + j] * J.data()[v * T + src];
                }
                if (p.use_residual) {
                    double lift = (D == C) ? J.data()[v * T + t]
                                           : p.res_p.data()[v * C + o] * J.data()[v * T + t];
                    acc += lift;
                }
                out[o * T + t] += acc / D;
            }
    return out;
}

double phi(double x) { return (x > 0.0 ? x : std::exp(x) - 1.0) + 1.0; }

} // namespace

TEST_CASE("zero filters leave the row mean residual") {
    std::mt19937_64 rng(31);
    JtmTcnLayerParams p = make_jtm_tcn_layer(3, 3, 3, true, rng);
    std::fill(p.w.data(), p.w.data() + p.w.numel(), 0.0);
    Tensor J = rnd({3, 5}, 32);
    Tensor H = jtm_tcn_forward(J, p, 1);
    for (int o = 0; o < 3; ++o)
        for (int t = 0; t < 5; ++t) {
            double mean = (J.data()[t] + J.data()[5 + t] + J.data()[10 + t]) / 3.0;
            CHECK(H.data()[o * 5 + t] == doctest::Approx(mean).epsilon(1e-12));
        }
}

TEST_CASE("identity kernel with residual off reproduces the input") {
    std::mt19937_64 rng(33);
    JtmTcnLayerParams p = make_jtm_tcn_layer(1, 1, 3, false, rng);
    p.w.data()[0] = 0.0;
    p.w.data()[1] = 1.0;
    p.w.data()[2] = 0.0;
    Tensor J = rnd({1, 6}, 34);
    Tensor H = jtm_tcn_forward(J, p, 1);
    for (int t = 0; t < 6; ++t) CHECK(H.data()[t] == doctest::Approx(J.data()[t]).epsilon(1e-15));
}

TEST_CASE("tcn layer matches the per row loop oracle") {
    SUBCASE("projected residual, D != C_t") {
        std::mt19937_64 rng(35);
        JtmTcnLayerParams p = make_jtm_tcn_layer(2, 3, 3, true, rng);
        Tensor J = rnd({2, 5}, 36);
        Tensor H = jtm_tcn_forward(J, p, 1);
        auto want = jtm_oracle(J, p, 1);
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(H.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
    SUBCASE("identity residual with dilation") {
        std::mt19937_64 rng(37);
        JtmTcnLayerParams p = make_jtm_tcn_layer(4, 4, 3, true, rng);
        Tensor J = rnd({4, 9}, 38);
        Tensor H = jtm_tcn_forward(J, p, 2);
        auto want = jtm_oracle(J, p, 2);
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(H.data()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("the joint shared baseline runs the identical kernel") {
    std::mt19937_64 rng(39);
    JtmTcnLayerParams p = make_jtm_tcn_layer(3, 4, 3, true, rng);
    Tensor S = rnd({3, 7}, 40);
    Tensor a = jwtm_forward(S, p, 2);
    Tensor b = jtm_tcn_forward(S, p, 2);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("swapping rows together with their banks changes nothing") {
    std::mt19937_64 rng(41);
    JtmTcnLayerParams p = make_jtm_tcn_layer(3, 4, 3, true, rng);
    Tensor J = rnd({3, 6}, 42);
    Tensor H = jtm_tcn_forward(J, p, 1);

    // Swap rows 0 and 2 of the input, the filters, and the residual columns.
    Tensor J2 = rnd({3, 6}, 42);
    for (int t = 0; t < 6; ++t) std::swap(J2.data()[t], J2.data()[2 * 6 + t]);
    JtmTcnLayerParams q = make_jtm_tcn_layer(3, 4, 3, true, rng);
    std::copy(p.w.data(), p.w.data() + p.w.numel(), q.w.data());
    std::copy(p.res_p.data(), p.res_p.data() + p.res_p.numel(), q.res_p.data());
    for (int i = 0; i < 4 * 3; ++i) std::swap(q.w.data()[i], q.w.data()[2 * 4 * 3 + i]);
    for (int i = 0; i < 4; ++i) std::swap(q.res_p.data()[i], q.res_p.data()[2 * 4 + i]);

    Tensor H2 = jtm_tcn_forward(J2, q, 1);
    for (int64_t i = 0; i < H.numel(); ++i)
        CHECK(H2.data()[i] == doctest::Approx(H.data()[i]).epsilon(1e-12));
}

TEST_CASE("interior frames shift along with the input") {
    std::mt19937_64 rng(43);
    JtmTcnLayerParams p = make_jtm_tcn_layer(2, 2, 3, true, rng);
    const int T = 12, dil = 2, radius = dil * (3 - 1) / 2;
    Tensor J = rnd({2, T}, 44);
    std::vector<double> rolled(static_cast<size_t>(2) * T);
    for (int v = 0; v < 2; ++v)
        for (int t = 0; t < T; ++t) rolled[v * T + (t + 1) % T] = J.data()[v * T + t];
    Tensor J2 = Tensor::from_data({2, T}, std::move(rolled));
    Tensor H = jtm_tcn_forward(J, p, dil);
    Tensor H2 = jtm_tcn_forward(J2, p, dil);
    for (int o = 0; o < 2; ++o)
        for (int t = radius + 1; t + radius + 2 < T; ++t)
            CHECK(H2.data()[o * T + t + 1] == doctest::Approx(H.data()[o * T + t]).epsilon(1e-9));
}

TEST_CASE("rows contribute independent summands") {
    std::mt19937_64 rng(45);
    JtmTcnLayerParams p = make_jtm_tcn_layer(3, 4, 3, true, rng);
    Tensor J = rnd({3, 6}, 46);
    Tensor full = jtm_tcn_forward(J, p, 1);

    // Silence row 1 on both sides. What remains plus row 1's isolated share
    // must rebuild the full output: the sum has no cross-row terms.
    Tensor J_only1 = rnd({3, 6}, 46);
    Tensor J_without1 = rnd({3, 6}, 46);
    JtmTcnLayerParams q = make_jtm_tcn_layer(3, 4, 3, true, rng);
    JtmTcnLayerParams r = make_jtm_tcn_layer(3, 4, 3, true, rng);
    std::copy(p.w.data(), p.w.data() + p.w.numel(), q.w.data());
    std::copy(p.res_p.data(), p.res_p.data() + p.res_p.numel(), q.res_p.data());
    std::copy(p.w.data(), p.w.data() + p.w.numel(), r.w.data());
    std::copy(p.res_p.data(), p.res_p.data() + p.res_p.numel(), r.res_p.data());
    for (int v = 0; v < 3; ++v) {
        const bool keep_in_only1 = (v == 1);
        for (int t = 0; t < 6; ++t) {
            if (!keep_in_only1) J_only1.data()[v * 6 + t] = 0.0;
            if (keep_in_only1) J_without1.data()[v * 6 + t] = 0.0;
        }
        for (int i = 0; i < 4 * 3; ++i) {
            if (!keep_in_only1) q.w.data()[v * 4 * 3 + i] = 0.0;
            if (keep_in_only1) r.w.data()[v * 4 * 3 + i] = 0.0;
        }
        for (int i = 0; i < 4; ++i) {
            if (!keep_in_only1) q.res_p.data()[v * 4 + i] = 0.0;
            if (keep_in_only1) r.res_p.data()[v * 4 + i] = 0.0;
        }
    }
    Tensor only1 = jtm_tcn_forward(J_only1, q, 1);
    Tensor without1 = jtm_tcn_forward(J_without1, r, 1);
    for (int64_t i = 0; i < full.numel(); ++i)
        CHECK(only1.data()[i] + without1.data()[i] ==
              doctest::Approx(full.data()[i]).epsilon(1e-12));
}

TEST_CASE("transformer attention with dead projections reduces to column sums") {
    std::mt19937_64 rng(47);
    JtmTransformerLayerParams p = make_jtm_transformer_layer(2, 3, false, false, rng);
    std::fill(p.q_w.data(), p.q_w.data() + p.q_w.numel(), 0.0);
    std::fill(p.q_b.data(), p.q_b.data() + p.q_b.numel(), 0.0);
    std::fill(p.f_w.data(), p.f_w.data() + p.f_w.numel(), 0.0);
    std::fill(p.f_b.data(), p.f_b.data() + p.f_b.numel(), 0.0);

    const int T = 4, C = 3, D = 2;
    Tensor J = rnd({D, T}, 48);
    Tensor H = jtm_transformer_forward(J, p);

    // phi(0) = 1 everywhere, so phi(q_t).phi(f_s) = C for every pair and each
    // time step gets C times the column sums of U_v. Recompute U_v with loops.
    std::vector<double> want(static_cast<size_t>(C) * T, 0.0);
    for (int v = 0; v < D; ++v) {
        std::vector<double> emb(static_cast<size_t>(T) * C);
        for (int t = 0; t < T; ++t)
            for (int c = 0; c < C; ++c)
                emb[t * C + c] = p.emb_w.data()[v * C + c] * J.data()[v * T + t] +
                                 p.emb_b.data()[v * C + c];
        std::vector<double> ucol(C, 0.0);
        for (int t = 0; t < T; ++t)
            for (int c = 0; c < C; ++c) {
                double acc = p.u_b.data()[v * C + c];
                for (int i = 0; i < C; ++i)
                    acc += p.u_w.data()[(v * C + i) * C + c] * emb[t * C + i];
                ucol[c] += acc;
            }
        // Joint contributions are averaged over the D rows.
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T; ++t) want[c * T + t] += C * ucol[c] / D;
    }
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(H.data()[i] == doctest::Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("single step linear attention matches the direct contraction") {
    Tensor Q = rnd({1, 3}, 49), F = rnd({1, 3}, 50), U = rnd({1, 3}, 51);
    Tensor out = linear_attention(Q, F, U, false);
    double mass = 0.0;
    for (int i = 0; i < 3; ++i) mass += phi(Q.data()[i]) * phi(F.data()[i]);
    for (int j = 0; j < 3; ++j)
        CHECK(out.data()[j] == doctest::Approx(mass * U.data()[j]).epsilon(1e-12));
}

TEST_CASE("normalized attention divides by the key mass") {
    Tensor Q = rnd({1, 3}, 52), F = rnd({1, 3}, 53), U = rnd({1, 3}, 54);
    Tensor raw = linear_attention(Q, F, U, false);
    Tensor norm = linear_attention(Q, F, U, true);
    double mass = 0.0;
    for (int i = 0; i < 3; ++i) mass += phi(Q.data()[i]) * phi(F.data()[i]);
    for (int j = 0; j < 3; ++j)
        CHECK(norm.data()[j] == doctest::Approx(raw.data()[j] / mass).epsilon(1e-10));
}

TEST_CASE("time permutation of keys and values is invisible to a constant query") {
    const int T = 5, C = 2;
    std::vector<double> qv(static_cast<size_t>(T) * C);
    for (int t = 0; t < T; ++t) {
        qv[t * C + 0] = 0.4;
        qv[t * C + 1] = -0.7;
    }
    Tensor Q = Tensor::from_data({T, C}, std::move(qv));
    Tensor F = rnd({T, C}, 55), U = rnd({T, C}, 56);

    const int perm[T] = {3, 0, 4, 2, 1};
    std::vector<double> fp(static_cast<size_t>(T) * C), up(static_cast<size_t>(T) * C);
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c) {
            fp[perm[t] * C + c] = F.data()[t * C + c];
            up[perm[t] * C + c] = U.data()[t * C + c];
        }
    Tensor out = linear_attention(Q, F, U, false);
    Tensor outp = linear_attention(Q, Tensor::from_data({T, C}, std::move(fp)),
                                   Tensor::from_data({T, C}, std::move(up)), false);
    for (int64_t i = 0; i < out.numel(); ++i)
        CHECK(outp.data()[i] == doctest::Approx(out.data()[i]).epsilon(1e-12));
}

TEST_CASE("dilation schedule doubles per layer and caps at a quarter of T") {
    CHECK(jtm_dilation(1, 100) == 1);
    CHECK(jtm_dilation(2, 100) == 2);
    CHECK(jtm_dilation(3, 100) == 4);
    CHECK(jtm_dilation(5, 16) == 4);    // 2^4 = 16 capped at 16/4
    CHECK(jtm_dilation(1, 2) == 1);     // never below one
    CHECK(jtm_dilation(6, 1000) == 32);
}

TEST_CASE("output length always equals input length") {
    std::mt19937_64 rng(57);
    Tensor J = rnd({3, 11}, 58);
    JtmTcnLayerParams tcn = make_jtm_tcn_layer(3, 5, 3, true, rng);
    CHECK(jtm_tcn_forward(J, tcn, 4).dim(1) == 11);
    JtmTransformerLayerParams tr = make_jtm_transformer_layer(3, 5, true, true, rng);
    CHECK(jtm_transformer_forward(J, tr).dim(1) == 11);
}
