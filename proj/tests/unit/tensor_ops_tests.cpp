#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"

#include "dest/errors.hpp"
#include "dest/gradcheck.hpp"
#include "dest/ops.hpp"
#include "dest/tensor.hpp"

using namespace dest;

namespace {

Tensor rnd(const Shape& shape, uint64_t seed, bool rg = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = u(rng);
    return Tensor::from_data(shape, std::move(v), rg);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    return std::memcmp(a.data(), b.data(), sizeof(double) * a.numel()) == 0;
}

} // namespace

TEST_CASE("matmul identity leaves the operand unchanged") {
    Tensor I = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor out = matmul(I, m);
    for (int i = 0; i < 6; ++i) CHECK(out.data()[i] == m.data()[i]);
}

TEST_CASE("matmul hand case") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({2, 1}, {1, 1});
    Tensor out = matmul(a, b);
    CHECK(out.data()[0] == 3.0);
    CHECK(out.data()[1] == 7.0);
}

TEST_CASE("matmul matches a naive triple loop") {
    Tensor a = rnd({4, 5}, 11, false), b = rnd({5, 3}, 12, false);
    Tensor out = matmul(a, b);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 5; ++k) acc += a.data()[i * 5 + k] * b.data()[k * 3 + j];
            CHECK(out.data()[i * 3 + j] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("matmul rejects mismatched inner extents") {
    CHECK_THROWS_AS(matmul(rnd({2, 3}, 1), rnd({4, 2}, 2)), ShapeError);
}

TEST_CASE("conv1d identity and shift kernels") {
    Tensor x = Tensor::from_data({1, 3}, {1, 2, 3});
    Tensor centre = Tensor::from_data({1, 1, 3}, {0, 1, 0});
    Tensor out = conv1d(x, centre, 1);
    CHECK(out.data()[0] == 1.0);
    CHECK(out.data()[1] == 2.0);
    CHECK(out.data()[2] == 3.0);

    // The leading tap reads one frame back, so the signal shifts right and the
    // first output frame falls on zero padding.
    Tensor lead = Tensor::from_data({1, 1, 3}, {1, 0, 0});
    Tensor shifted = conv1d(x, lead, 1);
    CHECK(shifted.data()[0] == 0.0);
    CHECK(shifted.data()[1] == 1.0);
    CHECK(shifted.data()[2] == 2.0);
}

TEST_CASE("conv1d matches a naive loop with dilation") {
    const int c_in = 2, c_out = 3, T = 7, k = 3, dil = 2;
    Tensor x = rnd({c_in, T}, 21, false);
    Tensor w = rnd({c_out, c_in, k}, 22, false);
    Tensor out = conv1d(x, w, dil);
    for (int o = 0; o < c_out; ++o)
        for (int t = 0; t < T; ++t) {
            double acc = 0.0;
            for (int i = 0; i < c_in; ++i)
                for (int j = 0; j < k; ++j) {
                    int src = t + (j - k / 2) * dil;
                    if (src < 0 || src >= T) continue;
                    acc += w.data()[(o * c_in + i) * k + j] * x.data()[i * T + src];
                }
            CHECK(out.data()[o * T + t] == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("conv1d rejects even kernels") {
    CHECK_THROWS_AS(conv1d(rnd({1, 4}, 1), rnd({1, 1, 2}, 2), 1), ConfigError);
}

TEST_CASE("softmax basics") {
    Tensor z = softmax(Tensor::from_data({3, 1}, {0, 0, 0}), 0);
    for (int i = 0; i < 3; ++i) CHECK(z.data()[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));

    // Max subtraction keeps huge logits finite.
    Tensor big = softmax(Tensor::from_data({2, 1}, {1000, 1000}), 0);
    CHECK(big.data()[0] == doctest::Approx(0.5).epsilon(1e-12));

    Tensor pair = softmax(Tensor::from_data({2, 1}, {1, 2}), 0);
    CHECK(pair.data()[0] == doctest::Approx(0.26894).epsilon(1e-4));
    CHECK(pair.data()[1] == doctest::Approx(0.73106).epsilon(1e-4));
}

TEST_CASE("softmax slices sum to one along the chosen axis") {
    Tensor x = rnd({4, 6}, 31, false);
    Tensor s0 = softmax(x, 0);
    for (int t = 0; t < 6; ++t) {
        double col = 0.0;
        for (int c = 0; c < 4; ++c) col += s0.data()[c * 6 + t];
        CHECK(col == doctest::Approx(1.0).epsilon(1e-12));
    }
    Tensor s1 = softmax(x, 1);
    for (int c = 0; c < 4; ++c) {
        double row = 0.0;
        for (int t = 0; t < 6; ++t) row += s1.data()[c * 6 + t];
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("elementwise closed forms") {
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(elu(Tensor::scalar(-1.0)).item() == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
    CHECK(relu(Tensor::scalar(-2.0)).item() == 0.0);
}

TEST_CASE("relu subgradient at zero is zero") {
    Tensor x = Tensor::from_data({1, 1}, {0.0}, true);
    Tensor y = sum(relu(x));
    y.backward();
    CHECK(x.grad_data()[0] == 0.0);
}

TEST_CASE("split then concat restores the tensor bitwise") {
    Tensor s = rnd({6, 4, 3}, 41, false);
    auto groups = split(s, 3, 0);
    REQUIRE(groups.size() == 3);
    for (const auto& g : groups) CHECK(g.dim(0) == 2);
    Tensor back = concat(groups, 0);
    CHECK(bitwise_equal(back, s));
}

TEST_CASE("split rejects a non-divisible axis") {
    CHECK_THROWS_AS(split(rnd({5, 2}, 1), 2, 0), ShapeError);
}

TEST_CASE("transpose2d round trip") {
    Tensor x = rnd({3, 5}, 51, false);
    Tensor back = transpose2d(transpose2d(x));
    CHECK(bitwise_equal(back, x));
}

TEST_CASE("broadcast add stretches singleton extents") {
    Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor col = Tensor::from_data({2, 1}, {10, 20});
    Tensor row = Tensor::from_data({1, 3}, {100, 200, 300});
    Tensor c = add(a, col);
    CHECK(c.data()[0] == 11.0);
    CHECK(c.data()[5] == 26.0);
    Tensor r = add(a, row);
    CHECK(r.data()[0] == 101.0);
    CHECK(r.data()[5] == 306.0);
}

TEST_CASE("reductions") {
    Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(sum(x).item() == 21.0);
    CHECK(mean(x).item() == 3.5);
    Tensor rs = reduce_sum(x, 1);
    CHECK(rs.data()[0] == 6.0);
    CHECK(rs.data()[1] == 15.0);
    Tensor rm = reduce_max(x, 0);
    CHECK(rm.data()[2] == 6.0);
}

TEST_CASE("pick_per_column gathers one entry per frame") {
    Tensor x = Tensor::from_data({3, 4}, {0, 1, 2, 3, 10, 11, 12, 13, 20, 21, 22, 23});
    Tensor y = pick_per_column(x, {2, 0, 1, 2});
    CHECK(y.data()[0] == 20.0);
    CHECK(y.data()[1] == 1.0);
    CHECK(y.data()[2] == 12.0);
    CHECK(y.data()[3] == 23.0);
}

TEST_CASE("detach cuts gradient flow") {
    Tensor x = rnd({2, 2}, 61);
    Tensor y = sum(mul(x.detach(), x));
    y.backward();
    // Only the live operand contributes: d/dx (c * x) = c, not 2x.
    for (int i = 0; i < 4; ++i)
        CHECK(x.grad_data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-15));
}

TEST_CASE("backward through a three layer net matches finite differences") {
    Tensor w1 = rnd({4, 3}, 71), w2 = rnd({4, 4}, 72), w3 = rnd({1, 4}, 73);
    Tensor x = rnd({3, 5}, 74, false);
    auto fn = [&] { return sum(matmul(w3, relu(matmul(w2, relu(matmul(w1, x)))))); };
    GradCheckReport rep = check_gradients({w1, w2, w3}, fn);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("backward accumulates when a parameter feeds several ops") {
    Tensor x = Tensor::from_data({1, 1}, {3.0}, true);
    Tensor y = add(mul(x, x), scale(x, 2.0));   // x^2 + 2x
    sum(y).backward();
    CHECK(x.grad_data()[0] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("narrow slices along an axis and rejects bad ranges") {
    Tensor x = Tensor::from_data({2, 4}, {0, 1, 2, 3, 4, 5, 6, 7});
    Tensor mid = narrow(x, 1, 1, 2);
    CHECK(mid.dim(1) == 2);
    CHECK(mid.data()[0] == 1.0);
    CHECK(mid.data()[3] == 6.0);
    CHECK_THROWS_AS(narrow(x, 1, 3, 2), ShapeError);
}
