#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"

#include "dest/errors.hpp"
#include "dest/model.hpp"
#include "dest/ops.hpp"

using namespace dest;

namespace {

DestConfig micro_config() {
    DestConfig c;
    c.V = 4;
    c.C_in = 2;
    c.C_o = 3;
    c.K = 2;
    c.M = 2;
    c.C_mid = 2;
    c.C_s = 4;
    c.C_t = 6;
    c.C_f = 3;
    c.L_y = 3;
    c.L_c = 2;
    c.asb_stages = 1;
    c.brb_stages = 1;
    c.stage_layers = 2;
    c.stage_channels = 6;
    return c;
}

SkeletonTopology path4() { return {4, {{0, 1}, {1, 2}, {2, 3}}}; }

Tensor rnd_input(const DestConfig& c, int T, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(static_cast<size_t>(c.C_in) * T * c.V);
    for (auto& x : v) x = u(rng);
    return Tensor::from_data({c.C_in, T, c.V}, std::move(v));
}

DestModel build(const DestConfig& c, uint64_t seed = 5) {
    return DestModel(c, SkeletonGraph::build(path4(), c.K, c.beta, c.symmetric_norm), seed);
}

} // namespace

TEST_CASE("heads emit distributions and probabilities at every stage") {
    DestConfig c = micro_config();
    DestModel m = build(c);
    ModelForward out = m.forward(rnd_input(c, 9, 6));

    REQUIRE(out.y_cls.size() == static_cast<size_t>(1 + c.asb_stages));
    REQUIRE(out.y_bnd.size() == static_cast<size_t>(1 + c.brb_stages));
    for (const auto& y : out.y_cls) {
        REQUIRE(y.shape() == Shape{3, 9});
        for (int t = 0; t < 9; ++t) {
            double col = 0.0;
            for (int cc = 0; cc < 3; ++cc) col += y.data()[cc * 9 + t];
            CHECK(col == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    for (const auto& y : out.y_bnd) {
        REQUIRE(y.shape() == Shape{1, 9});
        for (int t = 0; t < 9; ++t) {
            CHECK(y.data()[t] > 0.0);
            CHECK(y.data()[t] < 1.0);
        }
    }
    CHECK(out.h_final.shape() == Shape{c.C_t, 9});
}

TEST_CASE("one attention map per interaction layer, rows stochastic") {
    DestConfig c = micro_config();
    DestModel m = build(c);
    ModelForward out = m.forward(rnd_input(c, 7, 7));
    REQUIRE(out.attn.size() == static_cast<size_t>(c.L_c));
    for (const auto& A : out.attn) {
        REQUIRE(A.shape() == Shape{c.C_t, c.C_t});
        for (int i = 0; i < c.C_t; ++i) {
            double row = 0.0;
            for (int j = 0; j < c.C_t; ++j) row += A.data()[i * c.C_t + j];
            CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    DestConfig s = c;
    s.interaction_mode = "summation";
    ModelForward out2 = build(s).forward(rnd_input(s, 7, 7));
    CHECK(out2.attn.empty());
}

TEST_CASE("identical seeds build identical models") {
    DestConfig c = micro_config();
    DestModel a = build(c, 11), b = build(c, 11);
    Tensor x = rnd_input(c, 8, 12);
    Tensor ya = a.forward(x).y_cls.back();
    Tensor yb = b.forward(x).y_cls.back();
    CHECK(std::memcmp(ya.data(), yb.data(), sizeof(double) * ya.numel()) == 0);
}

TEST_CASE("registry names are unique and cover the parameter count") {
    DestConfig c = micro_config();
    DestModel m = build(c);
    std::set<std::string> names;
    int64_t total = 0;
    for (const auto& [name, t] : m.named_parameters()) {
        CHECK(names.insert(name).second);
        total += t.numel();
    }
    CHECK(total == m.parameter_count());
}

TEST_CASE("with interaction disabled only the first group matters") {
    DestConfig c = micro_config();
    c.L_c = 0;
    DestModel m = build(c);
    Tensor x = rnd_input(c, 8, 13);
    Tensor before = m.forward(x).y_cls.back();

    // Groups beyond the first feed interaction layers only, so perturbing
    // their collapse weights cannot move any prediction.
    REQUIRE(m.transforms().size() == static_cast<size_t>(c.M));
    Tensor w = m.transforms()[1].w;
    for (int64_t i = 0; i < w.numel(); ++i) w.data()[i] += 3.7;
    Tensor after = m.forward(x).y_cls.back();
    CHECK(std::memcmp(before.data(), after.data(), sizeof(double) * before.numel()) == 0);

    // The same poke on group 1 must show up.
    Tensor w0 = m.transforms()[0].w;
    w0.data()[0] += 3.7;
    Tensor moved = m.forward(x).y_cls.back();
    CHECK(std::memcmp(before.data(), moved.data(), sizeof(double) * before.numel()) != 0);
}

TEST_CASE("construction rejects inconsistent configurations") {
    DestConfig c = micro_config();
    SUBCASE("unresolved joint count") {
        c.V = 0;
        CHECK_THROWS_AS(build(c), ConfigError);
    }
    SUBCASE("graph joint mismatch") {
        c.V = 5;
        CHECK_THROWS_AS(DestModel(c, SkeletonGraph::build(path4(), c.K, c.beta, false), 1),
                        ConfigError);
    }
    SUBCASE("scale count mismatch") {
        CHECK_THROWS_AS(DestModel(c, SkeletonGraph::build(path4(), c.K + 1, c.beta, false), 1),
                        ConfigError);
    }
    SUBCASE("groups not dividing the spatial channels") {
        c.C_s = 5;
        CHECK_THROWS_AS(build(c), ConfigError);
    }
    SUBCASE("too many interaction layers") {
        c.L_c = c.L_y;
        CHECK_THROWS_AS(build(c), ConfigError);
    }
    SUBCASE("input shape mismatch") {
        DestModel m = build(micro_config());
        std::vector<double> v(static_cast<size_t>(3) * 5 * 4, 0.1);
        CHECK_THROWS_AS(m.forward(Tensor::from_data({3, 5, 4}, std::move(v))), ShapeError);
    }
}

TEST_CASE("boundary guided relabeling") {
    SUBCASE("no boundary collapses to the global majority") {
        // Class 1 wins 4 frames to 3 against class 0.
        Tensor y = Tensor::from_data({2, 7}, {0.9, 0.9, 0.9, 0.1, 0.1, 0.1, 0.1,
                                              0.1, 0.1, 0.1, 0.9, 0.9, 0.9, 0.9});
        Tensor b = Tensor::full({1, 7}, 0.2);
        auto labels = refine_with_boundaries(y, b, 0.5);
        for (int t = 0; t < 7; ++t) CHECK(labels[t] == 1);
    }
    SUBCASE("clean spikes recover spans from noisy frame scores") {
        const int T = 10;
        // True spans: [0,4] class 0, [5,9] class 1. Per span, 3 of 5 frames
        // vote for the true class, the rest are wrong.
        std::vector<double> yv(static_cast<size_t>(2) * T);
        const int votes0[5] = {0, 1, 0, 0, 1};
        const int votes1[5] = {1, 0, 1, 1, 0};
        for (int t = 0; t < 5; ++t) {
            yv[0 * T + t] = votes0[t] == 0 ? 0.8 : 0.2;
            yv[1 * T + t] = votes0[t] == 1 ? 0.8 : 0.2;
        }
        for (int t = 5; t < 10; ++t) {
            yv[0 * T + t] = votes1[t - 5] == 0 ? 0.8 : 0.2;
            yv[1 * T + t] = votes1[t - 5] == 1 ? 0.8 : 0.2;
        }
        std::vector<double> bv(T, 0.05);
        bv[5] = 0.95;
        auto labels = refine_with_boundaries(Tensor::from_data({2, T}, std::move(yv)),
                                             Tensor::from_data({1, T}, std::move(bv)), 0.5);
        for (int t = 0; t < 5; ++t) CHECK(labels[t] == 0);
        for (int t = 5; t < 10; ++t) CHECK(labels[t] == 1);
    }
    SUBCASE("above threshold but not a local maximum is no boundary") {
        Tensor y = Tensor::from_data({2, 5}, {0.9, 0.9, 0.1, 0.1, 0.1,
                                              0.1, 0.1, 0.9, 0.9, 0.9});
        // Frame 1 clears the threshold but loses to its neighbor at frame 2.
        Tensor b = Tensor::from_data({1, 5}, {0.1, 0.6, 0.8, 0.1, 0.1});
        auto labels = refine_with_boundaries(y, b, 0.5);
        // Single cut at frame 2: span [0,1] majority 0, span [2,4] majority 1.
        CHECK(labels[0] == 0);
        CHECK(labels[1] == 0);
        CHECK(labels[2] == 1);
        CHECK(labels[3] == 1);
        CHECK(labels[4] == 1);
    }
    SUBCASE("majority ties resolve to the smallest class") {
        Tensor y = Tensor::from_data({2, 4}, {0.9, 0.9, 0.1, 0.1,
                                              0.1, 0.1, 0.9, 0.9});
        Tensor b = Tensor::full({1, 4}, 0.0);
        auto labels = refine_with_boundaries(y, b, 0.5);
        for (int t = 0; t < 4; ++t) CHECK(labels[t] == 0);
    }
}

TEST_CASE("summary parameter totals match the registry") {
    auto registry_total = [](const DestConfig& c) {
        return DestModel(c, SkeletonGraph::build(path4(), c.K, c.beta, c.symmetric_norm), 3)
            .parameter_count();
    };
    auto summary_total = [](const DestConfig& c) {
        auto rows = model_summary(c);
        REQUIRE(!rows.empty());
        CHECK(rows.back().component == "total");
        int64_t sum = 0;
        for (size_t i = 0; i + 1 < rows.size(); ++i) sum += rows[i].params;
        CHECK(sum == rows.back().params);
        return rows.back().params;
    };

    DestConfig base = micro_config();
    SUBCASE("tcn default") { CHECK(summary_total(base) == registry_total(base)); }
    SUBCASE("transformer") {
        base.temporal_variant = "linear_transformer";
        CHECK(summary_total(base) == registry_total(base));
    }
    SUBCASE("joint shared baseline") {
        base.jwtm_baseline = true;
        CHECK(summary_total(base) == registry_total(base));
    }
    SUBCASE("avgpool transform") {
        base.transform_mode = "avgpool";
        CHECK(summary_total(base) == registry_total(base));
    }
    SUBCASE("summation interaction") {
        base.interaction_mode = "summation";
        CHECK(summary_total(base) == registry_total(base));
    }
    SUBCASE("no refinement stages") {
        base.asb_stages = 0;
        base.brb_stages = 0;
        CHECK(summary_total(base) == registry_total(base));
    }
    SUBCASE("single temporal layer") {
        base.L_y = 1;
        base.L_c = 0;
        CHECK(summary_total(base) == registry_total(base));
    }
}

TEST_CASE("a single tcn layer follows the closed form") {
    // D rows, each with a C_t x C_f bank, plus a D x C_t projection when the
    // row count differs from the channel count.
    std::mt19937_64 rng(91);
    JtmTcnLayerParams p = make_jtm_tcn_layer(4, 6, 3, true, rng);
    int64_t n = p.w.numel() + p.res_p.numel();
    CHECK(n == 4 * 6 * 3 + 4 * 6);
    JtmTcnLayerParams q = make_jtm_tcn_layer(6, 6, 3, true, rng);
    CHECK_FALSE(q.res_p.defined());
    CHECK(q.w.numel() == 6 * 6 * 3);
}

TEST_CASE("doubling the channel width more than doubles the parameters") {
    // Refinement stages are sized by stage_channels rather than C_t, so drop
    // them to expose the quadratic growth of the temporal banks.
    DestConfig a = micro_config();
    a.asb_stages = 0;
    a.brb_stages = 0;
    DestConfig b = a;
    b.C_t = a.C_t * 2;
    auto total = [](const DestConfig& c) { return model_summary(c).back().params; };
    CHECK(total(b) > 2 * total(a));
}

TEST_CASE("summary handles a heads only configuration") {
    DestConfig c = micro_config();
    c.L_y = 0;
    c.L_c = 0;
    c.asb_stages = 0;
    c.brb_stages = 0;
    auto rows = model_summary(c);
    REQUIRE(!rows.empty());
    int64_t sum = 0;
    for (size_t i = 0; i + 1 < rows.size(); ++i) sum += rows[i].params;
    CHECK(rows.back().params == sum);
    CHECK(rows.back().params > 0);
}
