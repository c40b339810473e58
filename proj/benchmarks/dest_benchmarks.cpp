#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dest/data.hpp"
#include "dest/graph.hpp"
#include "dest/interaction.hpp"
#include "dest/model.hpp"
#include "dest/ops.hpp"
#include "dest/spatial.hpp"
#include "dest/temporal.hpp"
#include "dest/tensor.hpp"

namespace {

dest::Tensor random_tensor(const dest::Shape& shape, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    std::vector<double> v(static_cast<size_t>(n));
    for (auto& x : v) x = u(rng);
    return dest::Tensor::from_data(shape, std::move(v));
}

void BM_MatMul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    dest::Tensor a = random_tensor({n, n}, 1);
    dest::Tensor b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        dest::Tensor c = dest::matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t{n} * n * n);
}
BENCHMARK(BM_MatMul)->Arg(64)->Arg(128)->Arg(256);

void BM_Conv1d(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    dest::Tensor x = random_tensor({64, T}, 3);
    dest::Tensor w = random_tensor({64, 64, 3}, 4);
    for (auto _ : state) {
        dest::Tensor y = dest::conv1d(x, w, 1);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Conv1d)->Arg(256)->Arg(1024)->Arg(4096);

// The multi-scale spatial block at the shipped width (25 joints, 13 scales).
void BM_SpatialBlock(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    const dest::SkeletonTopology topo = dest::default_skeleton();
    const dest::SkeletonGraph g = dest::SkeletonGraph::build(topo, 13, 0.001, false);
    std::mt19937_64 rng(5);
    dest::SpatialParams p = dest::make_spatial_params(3, 4, 13, 25, 40, rng);
    dest::Tensor x = random_tensor({3, T, 25}, 6);
    for (auto _ : state) {
        dest::Tensor s = dest::spatial_forward(x, g.a_hat, p);
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_SpatialBlock)->Arg(128)->Arg(512)->Arg(2048);

void BM_TcnLayer(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    std::mt19937_64 rng(7);
    dest::JtmTcnLayerParams p = dest::make_jtm_tcn_layer(64, 64, 3, true, rng);
    dest::Tensor j = random_tensor({64, T}, 8);
    for (auto _ : state) {
        dest::Tensor h = dest::jtm_tcn_forward(j, p, 2);
        benchmark::DoNotOptimize(h.data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_TcnLayer)->Arg(256)->Arg(1024)->Arg(4096);

void BM_LinearTransformerLayer(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    std::mt19937_64 rng(9);
    dest::JtmTransformerLayerParams p = dest::make_jtm_transformer_layer(25, 64, true, true, rng);
    dest::Tensor j = random_tensor({25, T}, 10);
    for (auto _ : state) {
        dest::Tensor h = dest::jtm_transformer_forward(j, p);
        benchmark::DoNotOptimize(h.data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_LinearTransformerLayer)->Arg(256)->Arg(1024);

void BM_CrossAttention(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    dest::DstiParams p = dest::make_dsti_params(64, 25, rng);
    dest::Tensor s_hat = random_tensor({T, 25}, 12);
    dest::Tensor h = random_tensor({64, T}, 13);
    const double tau = std::sqrt(static_cast<double>(T));
    for (auto _ : state) {
        dest::DstiResult r = dest::dsti_forward(s_hat, h, p, tau, "cross_attention");
        benchmark::DoNotOptimize(r.R.data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_CrossAttention)->Arg(256)->Arg(1024)->Arg(4096);

// Whole-network forward at the shipped configuration, including both
// refinement branches. Items are frames per second of skeleton input.
void BM_ModelForward(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    dest::DestConfig cfg;
    cfg.V = 25;
    cfg.C_in = 3;
    cfg.C_o = 10;
    const dest::SkeletonGraph g =
        dest::SkeletonGraph::build(dest::default_skeleton(), cfg.K, cfg.beta, cfg.symmetric_norm);
    dest::DestModel m(cfg, g, 14);
    dest::Tensor x = random_tensor({3, T, 25}, 15);
    for (auto _ : state) {
        dest::ModelForward out = m.forward(x);
        benchmark::DoNotOptimize(out.y_cls.back().data());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_ModelForward)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
