#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "doctest.h"

#include "dest/checkpoint.hpp"
#include "dest/errors.hpp"
#include "dest/ops.hpp"

using namespace dest;
namespace fs = std::filesystem;

namespace {

RunConfig small_run() {
    RunConfig r;
    r.model.V = 5;
    r.model.C_in = 2;
    r.model.C_o = 3;
    r.model.K = 2;
    r.model.M = 2;
    r.model.C_mid = 2;
    r.model.C_s = 4;
    r.model.C_t = 6;
    r.model.C_f = 3;
    r.model.L_y = 3;
    r.model.L_c = 2;
    r.model.asb_stages = 1;
    r.model.brb_stages = 2;
    r.model.stage_layers = 2;
    r.model.stage_channels = 6;
    r.seed = 77;
    return r;
}

SkeletonTopology chain5() {
    return SkeletonTopology{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}};
}

DestModel build(const RunConfig& r, const SkeletonTopology& topo) {
    return DestModel(r.model,
                     SkeletonGraph::build(topo, r.model.K, r.model.beta, r.model.symmetric_norm),
                     r.seed);
}

Tensor random_input(int C, int T, int V, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(static_cast<size_t>(C) * T * V);
    for (auto& x : v) x = u(rng);
    return Tensor::from_data({C, T, V}, std::move(v));
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("dest_ckpt_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("checkpoints restore parameters bit for bit") {
    const fs::path dir = fresh_dir("bits");
    const RunConfig run = small_run();
    const SkeletonTopology topo = chain5();
    DestModel model = build(run, topo);

    // Nudge a few parameters away from initialization so the stored values
    // are not reproducible from the seed alone.
    {
        auto params = model.parameters();
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-0.3, 0.3);
        for (auto& p : params) {
            double* d = p.data();
            for (int64_t i = 0; i < p.numel(); ++i) d[i] += u(rng);
        }
    }

    const std::string path = (dir / "model.ckpt").string();
    save_checkpoint(path, run, topo, model);
    LoadedCheckpoint loaded = load_checkpoint(path);

    const auto& a = model.named_parameters();
    const auto& b = loaded.model.named_parameters();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        REQUIRE(a[i].second.shape() == b[i].second.shape());
        CHECK(std::memcmp(a[i].second.data(), b[i].second.data(),
                          static_cast<size_t>(a[i].second.numel()) * 8) == 0);
    }

    CHECK(loaded.run.to_json_text() == run.to_json_text());
    CHECK(loaded.topology.V == topo.V);
    CHECK(loaded.topology.edges == topo.edges);
}

TEST_CASE("a restored model reproduces the original forward pass") {
    const fs::path dir = fresh_dir("forward");
    const RunConfig run = small_run();
    const SkeletonTopology topo = chain5();
    DestModel model = build(run, topo);

    const Tensor x = random_input(run.model.C_in, 12, run.model.V, 991);
    const ModelForward before = model.forward(x);

    const std::string path = (dir / "model.ckpt").string();
    save_checkpoint(path, run, topo, model);
    LoadedCheckpoint loaded = load_checkpoint(path);
    const ModelForward after = loaded.model.forward(x);

    REQUIRE(before.y_cls.size() == after.y_cls.size());
    REQUIRE(before.y_bnd.size() == after.y_bnd.size());
    for (size_t s = 0; s < before.y_cls.size(); ++s) {
        CHECK(std::memcmp(before.y_cls[s].data(), after.y_cls[s].data(),
                          static_cast<size_t>(before.y_cls[s].numel()) * 8) == 0);
    }
    for (size_t s = 0; s < before.y_bnd.size(); ++s) {
        CHECK(std::memcmp(before.y_bnd[s].data(), after.y_bnd[s].data(),
                          static_cast<size_t>(before.y_bnd[s].numel()) * 8) == 0);
    }
}

TEST_CASE("saving twice produces identical files") {
    const fs::path dir = fresh_dir("stable");
    const RunConfig run = small_run();
    const SkeletonTopology topo = chain5();
    DestModel model = build(run, topo);

    save_checkpoint((dir / "a.ckpt").string(), run, topo, model);
    save_checkpoint((dir / "b.ckpt").string(), run, topo, model);
    std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
    std::string ba((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string bb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    REQUIRE_FALSE(ba.empty());
    CHECK(ba == bb);
}

TEST_CASE("tampered checkpoints are rejected") {
    const fs::path dir = fresh_dir("tamper");
    const RunConfig run = small_run();
    const SkeletonTopology topo = chain5();
    DestModel model = build(run, topo);
    const std::string path = (dir / "model.ckpt").string();
    save_checkpoint(path, run, topo, model);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    auto dump = [&](const std::string& name, const std::string& content) {
        const std::string p = (dir / name).string();
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        return p;
    };

    SUBCASE("bad magic") {
        std::string t = bytes;
        t[0] = 'Z';
        CHECK_THROWS_AS(load_checkpoint(dump("magic.ckpt", t)), DataError);
    }
    SUBCASE("truncated tail") {
        std::string t = bytes.substr(0, bytes.size() - 9);
        CHECK_THROWS_AS(load_checkpoint(dump("trunc.ckpt", t)), DataError);
    }
    SUBCASE("trailing bytes") {
        std::string t = bytes + "xx";
        CHECK_THROWS_AS(load_checkpoint(dump("trail.ckpt", t)), DataError);
    }
    SUBCASE("corrupted embedded config") {
        // Flip a brace inside the JSON block so it no longer parses.
        std::string t = bytes;
        const size_t at = t.find('{');
        REQUIRE(at != std::string::npos);
        t[at] = '!';
        CHECK_THROWS_AS(load_checkpoint(dump("json.ckpt", t)), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint((dir / "absent.ckpt").string()), IoError);
    }
}
