#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "dest/config.hpp"
#include "dest/errors.hpp"

using namespace dest;

TEST_CASE("defaults carry the shipped training regime") {
    RunConfig r;
    CHECK(r.model.K == 13);
    CHECK(r.model.M == 10);
    CHECK(r.model.L_c == 10);
    CHECK(r.model.L_y == 11);
    CHECK(r.model.beta == 0.001);
    CHECK(r.model.C_s % r.model.M == 0);
    CHECK(r.model.asb_stages == 2);
    CHECK(r.model.brb_stages == 3);
    CHECK(r.loss.gamma == 0.1);
    CHECK(r.loss.similarity_source == "input");
    CHECK(r.optim.lr == 0.0005);
    CHECK(r.optim.epochs == 300);
    CHECK(r.optim.batch_size == 1);
    CHECK(r.data.normalize);
    CHECK(r.data.stride == 1);
    CHECK(r.seed == 1);

    // Defaults must validate as-is once the data-dependent sizes are known.
    r.model.V = 25;
    r.model.C_in = 3;
    r.model.C_o = 4;
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("json round trip preserves every field") {
    RunConfig r;
    r.model.V = 7;
    r.model.C_in = 3;
    r.model.C_o = 5;
    r.model.K = 4;
    r.model.M = 5;
    r.model.C_s = 20;
    r.model.transform_mode = "maxpool";
    r.model.temporal_variant = "linear_transformer";
    r.model.normalized_attention = true;
    r.model.interaction_mode = "summation";
    r.model.jwtm_baseline = true;
    r.model.tau = 2.5;
    r.model.boundary_threshold = 0.25;
    r.loss.gamma = 0.05;
    r.loss.similarity_source = "stage";
    r.optim = optim_preset("batched");
    r.data.normalize = false;
    r.data.stride = 2;
    r.seed = 424242;

    const std::string text = r.to_json_text();
    const RunConfig back = RunConfig::from_json_text(text);
    CHECK(back.to_json_text() == text);
    CHECK(back.model.transform_mode == "maxpool");
    CHECK(back.model.normalized_attention);
    CHECK(back.model.jwtm_baseline);
    CHECK(back.model.tau == 2.5);
    CHECK(back.loss.similarity_source == "stage");
    CHECK(back.optim.batch_size == 8);
    CHECK(back.data.stride == 2);
    CHECK(back.seed == 424242);

    // Canonical form is stable under re-serialization.
    CHECK(RunConfig::from_json_text(back.to_json_text()).to_json_text() == text);
}

TEST_CASE("partial json fills the rest with defaults") {
    const RunConfig r = RunConfig::from_json_text(R"({"model": {"K": 3}, "seed": 9})");
    CHECK(r.model.K == 3);
    CHECK(r.model.M == 10);
    CHECK(r.optim.epochs == 300);
    CHECK(r.seed == 9);
}

TEST_CASE("unknown keys are rejected by name") {
    auto expect_message = [](const std::string& text, const std::string& needle) {
        try {
            RunConfig::from_json_text(text);
            FAIL("expected a config error for: " << text);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_message(R"({"model": {"n_heads": 4}})", "model.n_heads");
    expect_message(R"({"optimizer": {}})", "optimizer");
    expect_message(R"({"loss": {"gammma": 0.1}})", "loss.gammma");
}

TEST_CASE("malformed json and wrong types are config errors") {
    CHECK_THROWS_AS(RunConfig::from_json_text("{"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"model": {"K": "many"}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"model": []})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text("[]"), ConfigError);
}

TEST_CASE("attention depth clamps to the layer budget with a warning") {
    RunConfig r;
    r.model.V = 4;
    r.model.C_in = 2;
    r.model.C_o = 2;
    r.model.L_y = 4;
    r.model.L_c = 10;
    std::ostringstream warn;
    r.validate(&warn);
    CHECK(r.model.L_c == 3);
    CHECK(warn.str().find("L_c=10") != std::string::npos);
    CHECK(warn.str().find("clamping to 3") != std::string::npos);

    // Already-legal values stay put and stay quiet.
    RunConfig ok;
    ok.model.V = 4;
    ok.model.C_in = 2;
    ok.model.C_o = 2;
    ok.model.L_y = 11;
    ok.model.L_c = 10;
    std::ostringstream quiet;
    ok.validate(&quiet);
    CHECK(ok.model.L_c == 10);
    CHECK(quiet.str().empty());
}

TEST_CASE("validation rejects out-of-range fields") {
    auto base = [] {
        RunConfig r;
        r.model.V = 6;
        r.model.C_in = 3;
        r.model.C_o = 4;
        return r;
    };
    {
        RunConfig r = base();
        r.model.K = 0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.M = 1;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.C_s = 41;   // not divisible by M=10
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.C_f = 4;   // even kernels have no center tap
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.beta = 0.0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.transform_mode = "sumpool";
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.temporal_variant = "rnn";
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.interaction_mode = "concat";
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.tau = -1.0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.boundary_threshold = 1.0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.loss.gamma = -0.1;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.loss.similarity_source = "labels";
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.optim.lr = 0.0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.optim.batch_size = 0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.data.stride = 0;
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    {
        RunConfig r = base();
        r.model.L_y = 0;
        CHECK_THROWS_AS(r.validate(), ConfigError);       // forward needs depth
        CHECK_NOTHROW(r.validate(nullptr, false));        // summaries do not
    }
}

TEST_CASE("config files save and load through the filesystem") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dest_config_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig r;
    r.model.V = 9;
    r.seed = 31;
    const std::string path = (dir / "run.json").string();
    r.save(path);
    const RunConfig back = RunConfig::load(path);
    CHECK(back.to_json_text() == r.to_json_text());
    CHECK_THROWS_AS(RunConfig::load((dir / "missing.json").string()), IoError);
}

TEST_CASE("optimizer presets") {
    const OptimConfig small = optim_preset("small");
    CHECK(small.lr == 0.0005);
    CHECK(small.epochs == 300);
    CHECK(small.batch_size == 1);
    const OptimConfig batched = optim_preset("batched");
    CHECK(batched.lr == 0.001);
    CHECK(batched.epochs == 150);
    CHECK(batched.batch_size == 8);
    CHECK_THROWS_AS(optim_preset("adamw"), ConfigError);
}
