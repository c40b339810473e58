// Command line workbench: synthesize datasets, train, evaluate, run the
// finite-difference gradient suite, and print dataset/model tables.
//
// Exit codes: 0 success, 1 runtime/numerical failure, 2 configuration error,
// 3 data error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dest/adam.hpp"
#include "dest/checkpoint.hpp"
#include "dest/config.hpp"
#include "dest/data.hpp"
#include "dest/gradcheck.hpp"
#include "dest/graph.hpp"
#include "dest/interaction.hpp"
#include "dest/loss.hpp"
#include "dest/metrics.hpp"
#include "dest/model.hpp"
#include "dest/ops.hpp"
#include "dest/spatial.hpp"
#include "dest/temporal.hpp"
#include "dest/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dest;

namespace {

int run_guarded(const std::function<int()>& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string preset = "speed-contrast";
    std::string out;
    int seq = 40;
    int frames = 400;
    int joints = 25;
    int classes = 4;
    uint64_t seed = 7;
    double noise = -1.0;    // <0: preset default
    int min_seg = 0, max_seg = 0;
};

int run_synth(const SynthArgs& a) {
    if (a.preset != "speed-contrast")
        throw ConfigError("unknown preset '" + a.preset + "' (expected speed-contrast)");
    if (a.out.empty()) throw ConfigError("synth needs --out");
    SpeedProfile profile = speed_contrast_profile(a.classes);
    if (a.joints != profile.V)
        throw ConfigError("the speed-contrast preset is defined on " + std::to_string(profile.V) +
                          " joints, got --joints " + std::to_string(a.joints));
    if (a.noise >= 0.0) profile.noise_sigma = a.noise;
    if (a.min_seg > 0) profile.min_seg = a.min_seg;
    if (a.max_seg > 0) profile.max_seg = a.max_seg;

    std::vector<SequenceSample> dataset = synthesize(profile, a.seq, a.frames, a.seed);
    const std::string manifest = save_dataset(dataset, a.out);
    save_topology(default_skeleton(), (fs::path(a.out) / "topology.txt").string());

    nlohmann::json rec{
        {"preset", a.preset},     {"sequences", a.seq},   {"frames", a.frames},
        {"joints", a.joints},     {"classes", a.classes}, {"seed", a.seed},
        {"noise_sigma", profile.noise_sigma},             {"drift_sigma", profile.drift_sigma},
        {"min_seg", profile.min_seg},                     {"max_seg", profile.max_seg},
    };
    std::ofstream pr(fs::path(a.out) / "profile.json");
    pr << rec.dump(2) << "\n";
    if (!pr) throw IoError("cannot write profile record in " + a.out);
    std::cout << "wrote " << dataset.size() << " sequences to " << a.out << " (manifest "
              << manifest << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string config_path, manifest, topology, out, log_path;
    std::string optim_preset_name;
    bool print_config = false;
    bool quiet = false;
    // overrides (applied only when the flag was passed; see below)
    uint64_t seed = 0;
    int epochs = 0, batch = 0, save_every = 0, stride = 0;
    double lr = 0.0, gamma = 0.0, stop_at_acc = 0.0, stop_at_f1 = 0.0;
    bool jwtm = false, no_normalize = false, symmetric_norm = false, normalized_attention = false;
    std::string temporal_variant, interaction_mode, transform_mode, similarity_source;
};

int run_train(const TrainArgs& a, const std::function<bool(const std::string&)>& passed) {
    RunConfig run;
    if (!a.config_path.empty()) run = RunConfig::load(a.config_path);
    if (passed("--optim-preset")) run.optim = optim_preset(a.optim_preset_name);
    if (passed("--seed")) run.seed = a.seed;
    if (passed("--epochs")) run.optim.epochs = a.epochs;
    if (passed("--batch")) run.optim.batch_size = a.batch;
    if (passed("--lr")) run.optim.lr = a.lr;
    if (passed("--gamma")) run.loss.gamma = a.gamma;
    if (passed("--stride")) run.data.stride = a.stride;
    if (passed("--no-normalize")) run.data.normalize = !a.no_normalize;
    if (passed("--jwtm-baseline")) run.model.jwtm_baseline = a.jwtm;
    if (passed("--symmetric-norm")) run.model.symmetric_norm = a.symmetric_norm;
    if (passed("--normalized-attention")) run.model.normalized_attention = a.normalized_attention;
    if (passed("--temporal-variant")) run.model.temporal_variant = a.temporal_variant;
    if (passed("--interaction-mode")) run.model.interaction_mode = a.interaction_mode;
    if (passed("--transform-mode")) run.model.transform_mode = a.transform_mode;
    if (passed("--similarity-source")) run.loss.similarity_source = a.similarity_source;

    run.validate(&std::cerr, !a.print_config);
    if (a.print_config) {
        std::cout << run.to_json_text();
        return 0;
    }
    if (a.manifest.empty() || a.topology.empty() || a.out.empty())
        throw ConfigError("train needs --manifest, --topology and --out");

    SkeletonTopology topo = load_topology(a.topology);
    std::vector<SequenceSample> data = load_dataset(a.manifest, run.data);

    fs::create_directories(a.out);
    const std::string log_path =
        a.log_path.empty() ? (fs::path(a.out) / "train_log.ndjson").string() : a.log_path;
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw IoError("cannot open " + log_path + " for writing");

    TrainOptions opt;
    opt.out_dir = a.out;
    opt.save_every = a.save_every;
    opt.stop_at_acc = a.stop_at_acc;
    opt.stop_at_f1 = a.stop_at_f1;
    opt.log = &log;
    opt.progress = a.quiet ? nullptr : &std::cerr;

    TrainResult res = train(run, topo, data, opt);
    if (res.diverged) {
        std::cerr << "training diverged: loss left the finite range\n";
        return 1;
    }
    std::cout << "trained " << res.epochs.size() << " epochs; checkpoint at "
              << res.checkpoint_path << "; log at " << log_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string checkpoint, manifest, attention_dir;
    bool refine = false;
    int threads = 0;
};

int run_eval(const EvalArgs& a) {
    LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    std::vector<SequenceSample> data = load_dataset(a.manifest, ck.run.data);
    EvalOptions opt;
    opt.refine = a.refine;
    opt.attention_dir = a.attention_dir;
    opt.threads = a.threads;
    EvalReport rep = evaluate_model(ck.model, data, opt);
    std::cout << report_json(rep);
    return 0;
}

// ---------------------------------------------------------------------------
// stats / summary

int run_stats(const std::string& manifest) {
    DataConfig raw;            // speeds are computed on unnormalized coordinates
    raw.normalize = false;
    std::vector<SequenceSample> data = load_dataset(manifest, raw);
    JointSpeedStats st = joint_speed_stats(data, &std::cerr);
    std::cout << "joint\tmean_speed\tvariance\n";
    for (size_t v = 0; v < st.mean.size(); ++v) {
        std::printf("%zu\t%.9g\t%.9g\n", v, st.mean[v], st.variance[v]);
    }
    return 0;
}

int run_summary(const std::string& config_path, int joints, int channels, int classes) {
    RunConfig run;
    if (!config_path.empty()) run = RunConfig::load(config_path);
    if (run.model.V == 0) run.model.V = joints;
    if (run.model.C_in == 0) run.model.C_in = channels;
    if (run.model.C_o == 0) run.model.C_o = classes;
    run.validate(&std::cerr, false);
    std::cout << "component\tparams\tmacs_per_frame\n";
    for (const auto& row : model_summary(run.model)) {
        std::printf("%s\t%lld\t%lld\n", row.component.c_str(),
                    static_cast<long long>(row.params),
                    static_cast<long long>(row.macs_per_frame));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck suite

struct CheckCase {
    std::string name;
    double tol;
    std::function<GradCheckReport()> run;
};

Tensor rnd(const Shape& shape, uint64_t seed, double lo = -1.0, double hi = 1.0,
           bool requires_grad = true) {
    Tensor t = Tensor::zeros(shape, requires_grad);
    std::mt19937_64 rng(seed);
    fill_uniform(t, rng, lo, hi);
    return t;
}

// Magnitudes in [0.2, 1] with alternating sign: keeps finite differences away
// from the kinks of relu/elu/abs-like ops.
Tensor rnd_signed(const Shape& shape, uint64_t seed, bool requires_grad = true) {
    Tensor t = rnd(shape, seed, 0.2, 1.0, requires_grad);
    double* d = t.data();
    for (int64_t i = 0; i < t.numel(); ++i)
        if (i % 2 == 1) d[i] = -d[i];
    return t;
}

GradCheckReport check_unary(const std::function<Tensor(const Tensor&)>& op, const Tensor& x,
                            uint64_t scalar_seed) {
    return check_gradients({x}, [=] { return weighted_sum(op(x), scalar_seed); });
}

SkeletonTopology path_topology(int V) {
    SkeletonTopology t;
    t.V = V;
    for (int i = 0; i + 1 < V; ++i) t.edges.emplace_back(i, i + 1);
    return t;
}

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

GradCheckReport check_micro_model(DestConfig cfg, uint64_t seed, int64_t max_samples) {
    const int T = 8;
    SkeletonTopology topo = path_topology(cfg.V);
    SkeletonGraph graph = SkeletonGraph::build(topo, cfg.K, cfg.beta, cfg.symmetric_norm);
    DestModel model(cfg, std::move(graph), seed);
    Tensor x = rnd({cfg.C_in, T, cfg.V}, seed + 1, -1.0, 1.0, false);
    std::vector<int> labels = {0, 0, 1, 1, 1, 2, 2, 0};
    LossConfig lc;
    Tensor feats;
    {
        std::vector<double> f(static_cast<size_t>(2) * T);
        std::mt19937_64 rng(seed + 2);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& v : f) v = u(rng);
        feats = Tensor::from_data({2, T}, std::move(f));
    }
    // Mirror of total_loss with one change: the smoothing term's t-1 operand
    // is pinned to the unperturbed forward pass. total_loss treats that
    // operand as a constant, so at the probe point the analytic gradients of
    // the two composites are identical, but only the pinned form is an
    // ordinary function whose finite differences converge to that gradient.
    std::vector<Tensor> base_prev;
    {
        NoGradGuard ng;
        ModelForward out = model.forward(x);
        for (const Tensor& y : out.y_cls) {
            const int C = y.dim(0);
            const double* p = y.data();
            std::vector<double> lp(static_cast<size_t>(C) * (T - 1));
            for (int c = 0; c < C; ++c)
                for (int t = 0; t + 1 < T; ++t)
                    lp[static_cast<size_t>(c) * (T - 1) + t] =
                        std::log(std::max(p[c * T + t], 1e-12));
            base_prev.push_back(Tensor::from_data({C, T - 1}, std::move(lp)));
        }
    }
    BoundaryTarget target = derive_boundaries(labels);

    GradCheckOptions opt;
    opt.max_samples = max_samples;
    opt.seed = seed + 3;
    return check_gradients(
        model.parameters(),
        [&model, &base_prev, x, labels, feats, lc, target] {
            ModelForward out = model.forward(x);
            Tensor total = Tensor::scalar(0.0);
            for (size_t s = 0; s < out.y_cls.size(); ++s) {
                total = add(total, ce_loss(out.y_cls[s], labels));
                total = add(total, gs_tmse_from_prev(out.y_cls[s], base_prev[s], feats,
                                                     lc.gs_sigma, lc.gs_trunc));
            }
            Tensor bnd = Tensor::scalar(0.0);
            for (const Tensor& y : out.y_bnd) bnd = add(bnd, brb_loss(y, target));
            return add(total, scale(bnd, lc.gamma));
        },
        opt);
}

std::vector<CheckCase> build_suite() {
    std::vector<CheckCase> cases;
    auto add_case = [&](const std::string& name, double tol,
                        std::function<GradCheckReport()> fn) {
        cases.push_back({name, tol, std::move(fn)});
    };

    add_case("matmul", 1e-6, [] {
        Tensor a = rnd({3, 4}, 11), b = rnd({4, 5}, 12);
        return check_gradients({a, b}, [=] { return weighted_sum(matmul(a, b), 13); });
    });
    add_case("conv1d_dilated", 1e-6, [] {
        Tensor x = rnd({3, 9}, 21), w = rnd({4, 3, 3}, 22);
        return check_gradients({x, w}, [=] { return weighted_sum(conv1d(x, w, 2), 23); });
    });
    add_case("conv1d_pointwise", 1e-6, [] {
        Tensor x = rnd({3, 5}, 24), w = rnd({2, 3, 1}, 25);
        return check_gradients({x, w}, [=] { return weighted_sum(conv1d(x, w, 1), 26); });
    });
    add_case("softmax_axis0", 1e-5, [] {
        return check_unary([](const Tensor& t) { return softmax(t, 0); }, rnd({4, 6}, 31), 32);
    });
    add_case("softmax_axis1", 1e-5, [] {
        return check_unary([](const Tensor& t) { return softmax(t, 1); }, rnd({4, 6}, 33), 34);
    });
    add_case("add_broadcast_col", 1e-6, [] {
        Tensor a = rnd({3, 5}, 41), b = rnd({3, 1}, 42);
        return check_gradients({a, b}, [=] { return weighted_sum(add(a, b), 43); });
    });
    add_case("add_broadcast_row", 1e-6, [] {
        Tensor a = rnd({3, 5}, 44), b = rnd({1, 5}, 45);
        return check_gradients({a, b}, [=] { return weighted_sum(add(a, b), 46); });
    });
    add_case("mul_broadcast", 1e-6, [] {
        Tensor a = rnd({3, 5}, 47), b = rnd({1, 5}, 48);
        return check_gradients({a, b}, [=] { return weighted_sum(mul(a, b), 49); });
    });
    add_case("sub_scale_neg", 1e-6, [] {
        Tensor a = rnd({3, 4}, 50), b = rnd({3, 4}, 51);
        return check_gradients({a, b}, [=] {
            return weighted_sum(sub(scale(a, 1.7), neg(add_scalar(b, 0.3))), 52);
        });
    });
    add_case("add_n", 1e-6, [] {
        Tensor a = rnd({2, 3}, 53), b = rnd({2, 3}, 54), c = rnd({2, 3}, 55);
        return check_gradients({a, b, c}, [=] { return weighted_sum(add_n({a, b, c}), 56); });
    });
    add_case("relu_offset", 1e-6, [] {
        return check_unary([](const Tensor& t) { return relu(t); }, rnd_signed({4, 5}, 61), 62);
    });
    add_case("elu", 1e-5, [] {
        return check_unary([](const Tensor& t) { return elu(t); }, rnd_signed({4, 5}, 63), 64);
    });
    add_case("sigmoid", 1e-6, [] {
        return check_unary([](const Tensor& t) { return sigmoid(t); }, rnd({4, 5}, 65), 66);
    });
    add_case("log", 1e-5, [] {
        return check_unary([](const Tensor& t) { return log_t(t); }, rnd({4, 5}, 67, 0.5, 2.0), 68);
    });
    add_case("exp", 1e-6, [] {
        return check_unary([](const Tensor& t) { return exp_t(t); }, rnd({4, 5}, 69), 70);
    });
    add_case("reciprocal", 1e-5, [] {
        return check_unary([](const Tensor& t) { return reciprocal(t); },
                           rnd_signed({4, 5}, 71), 72);
    });
    add_case("clamp_interior", 1e-6, [] {
        Tensor x = rnd({4, 5}, 73);
        // Push every value at least 0.05 away from the clamp edges at +-0.5.
        double* d = x.data();
        for (int64_t i = 0; i < x.numel(); ++i) {
            if (std::fabs(std::fabs(d[i]) - 0.5) < 0.05) d[i] += d[i] > 0 ? 0.1 : -0.1;
        }
        return check_unary([](const Tensor& t) { return clamp(t, -0.5, 0.5); }, x, 74);
    });
    add_case("transpose_reshape", 1e-6, [] {
        Tensor x = rnd({3, 4}, 81);
        return check_gradients({x}, [=] {
            return weighted_sum(reshape(transpose2d(x), {2, 6}), 82);
        });
    });
    add_case("concat_axis0", 1e-6, [] {
        Tensor a = rnd({2, 3}, 83), b = rnd({1, 3}, 84);
        return check_gradients({a, b}, [=] { return weighted_sum(concat({a, b}, 0), 85); });
    });
    add_case("concat_axis1", 1e-6, [] {
        Tensor a = rnd({2, 3}, 86), b = rnd({2, 2}, 87);
        return check_gradients({a, b}, [=] { return weighted_sum(concat({a, b}, 1), 88); });
    });
    add_case("narrow_split", 1e-6, [] {
        Tensor x = rnd({4, 6}, 89);
        return check_gradients({x}, [=] {
            auto parts = split(x, 2, 0);
            return add(weighted_sum(narrow(x, 1, 1, 3), 90), weighted_sum(parts[1], 91));
        });
    });
    add_case("reductions", 1e-5, [] {
        Tensor x = rnd({3, 5}, 92);
        return check_gradients({x}, [=] {
            Tensor s = add(weighted_sum(reduce_sum(x, 0), 93), weighted_sum(reduce_mean(x, 1), 94));
            return add(s, add(sum(x), mean(x)));
        });
    });
    add_case("reduce_max", 1e-5, [] {
        Tensor x = rnd({3, 7}, 95);
        return check_gradients({x}, [=] { return weighted_sum(reduce_max(x, 1), 96); });
    });
    add_case("pick_per_column", 1e-6, [] {
        Tensor x = rnd({4, 7}, 97);
        std::vector<int> idx = {0, 3, 1, 2, 3, 0, 1};
        return check_gradients({x}, [=] { return weighted_sum(pick_per_column(x, idx), 98); });
    });

    add_case("spatial_forward", 1e-4, [] {
        SkeletonTopology topo = path_topology(4);
        SkeletonGraph graph = SkeletonGraph::build(topo, 3, 0.001, false);
        std::mt19937_64 rng(101);
        SpatialParams p = make_spatial_params(2, 2, 3, 4, 6, rng);
        for (auto& m : p.masks) {
            std::mt19937_64 r2(102);
            fill_uniform(m, r2, -0.3, 0.3);   // zero-init masks would hide mask gradients
        }
        Tensor x = rnd({2, 5, 4}, 103);
        std::vector<Tensor> params = {x, p.w_in, p.b_in, p.mlp_w1, p.mlp_b1, p.mlp_w2, p.mlp_b2};
        for (auto& m : p.masks) params.push_back(m);
        return check_gradients(params, [=] {
            return weighted_sum(spatial_forward(x, graph.a_hat, p), 104);
        });
    });
    add_case("transform_conv_channels", 1e-6, [] {
        std::mt19937_64 rng(111);
        TransformParams p = make_transform_params(3, CollapseAxis::Channels, rng);
        Tensor s = rnd({3, 4, 5}, 112);
        return check_gradients({s, p.w, p.b}, [=] {
            return weighted_sum(transform(s, "convolution", CollapseAxis::Channels, &p), 113);
        });
    });
    add_case("transform_conv_joints", 1e-6, [] {
        std::mt19937_64 rng(114);
        TransformParams p = make_transform_params(5, CollapseAxis::Joints, rng);
        Tensor s = rnd({3, 4, 5}, 115);
        return check_gradients({s, p.w, p.b}, [=] {
            return weighted_sum(transform(s, "convolution", CollapseAxis::Joints, &p), 116);
        });
    });
    add_case("transform_pools", 1e-5, [] {
        Tensor s = rnd({3, 4, 5}, 117);
        return check_gradients({s}, [=] {
            return add(weighted_sum(transform(s, "avgpool", CollapseAxis::Channels, nullptr), 118),
                       weighted_sum(transform(s, "maxpool", CollapseAxis::Joints, nullptr), 119));
        });
    });
    add_case("jtm_tcn_identity_residual", 1e-6, [] {
        std::mt19937_64 rng(121);
        JtmTcnLayerParams p = make_jtm_tcn_layer(5, 5, 3, true, rng);
        Tensor j = rnd({5, 7}, 122);
        return check_gradients({j, p.w}, [=] {
            return weighted_sum(jtm_tcn_forward(j, p, 2), 123);
        });
    });
    add_case("jtm_tcn_projected_residual", 1e-6, [] {
        std::mt19937_64 rng(124);
        JtmTcnLayerParams p = make_jtm_tcn_layer(3, 5, 3, true, rng);
        Tensor j = rnd({3, 7}, 125);
        return check_gradients({j, p.w, p.res_p}, [=] {
            return weighted_sum(jtm_tcn_forward(j, p, 1), 126);
        });
    });
    add_case("linear_attention", 1e-5, [] {
        Tensor q = rnd({4, 3}, 131), f = rnd({4, 3}, 132), u = rnd({4, 3}, 133);
        return check_gradients({q, f, u}, [=] {
            return add(weighted_sum(linear_attention(q, f, u, false), 134),
                       weighted_sum(linear_attention(q, f, u, true), 135));
        });
    });
    add_case("jtm_transformer", 1e-4, [] {
        std::mt19937_64 rng(141);
        JtmTransformerLayerParams p = make_jtm_transformer_layer(2, 3, true, false, rng);
        Tensor j = rnd({2, 5}, 142);
        std::vector<Tensor> params = {j,     p.emb_w, p.emb_b, p.q_w, p.q_b,
                                      p.f_w, p.f_b,   p.u_w,   p.u_b};
        if (p.res_p.defined()) params.push_back(p.res_p);
        return check_gradients(params, [=] {
            return weighted_sum(jtm_transformer_forward(j, p), 143);
        });
    });
    add_case("dsti_cross_attention", 1e-5, [] {
        std::mt19937_64 rng(151);
        DstiParams p = make_dsti_params(5, 4, rng);
        Tensor s_hat = rnd({6, 4}, 152);   // [T x D_s]
        Tensor h = rnd({5, 6}, 153);       // [C_t x T]
        return check_gradients({s_hat, h, p.wc_w, p.wc_b}, [=] {
            return weighted_sum(dsti_forward(s_hat, h, p, 2.0, "cross_attention").R, 154);
        });
    });
    add_case("dsti_summation", 1e-6, [] {
        std::mt19937_64 rng(155);
        DstiParams p = make_dsti_params(5, 4, rng);
        Tensor s_hat = rnd({6, 4}, 156);
        Tensor h = rnd({5, 6}, 157);
        return check_gradients({s_hat, h, p.wc_w, p.wc_b}, [=] {
            return weighted_sum(dsti_forward(s_hat, h, p, 2.0, "summation").R, 158);
        });
    });
    add_case("ce_loss", 1e-5, [] {
        Tensor logits = rnd({3, 6}, 161);
        std::vector<int> labels = {0, 1, 2, 1, 0, 2};
        return check_gradients({logits}, [=] { return ce_loss(softmax(logits, 0), labels); });
    });
    add_case("gs_tmse_loss", 1e-5, [] {
        Tensor logits = rnd({3, 6}, 162);
        Tensor feats = rnd({2, 6}, 163, -1.0, 1.0, false);
        // The smoothing loss holds its t-1 operand out of the gradient, so a
        // finite-difference probe has to pin that operand at the probe point
        // or it measures a different function than the backward pass
        // differentiates. Row 2 of the pinned block sits past the truncation
        // band to confirm clamped differences contribute zero gradient.
        const int C = 3, T = 6;
        Tensor prev;
        {
            NoGradGuard ng;
            Tensor base = softmax(logits, 0);
            const double* p = base.data();
            std::vector<double> lp(static_cast<size_t>(C) * (T - 1));
            for (int c = 0; c < C; ++c)
                for (int t = 0; t + 1 < T; ++t) {
                    double v = std::log(std::max(p[c * T + t], 1e-12));
                    if (c == 2) v += 6.0;
                    lp[static_cast<size_t>(c) * (T - 1) + t] = v;
                }
            prev = Tensor::from_data({C, T - 1}, std::move(lp));
        }
        return check_gradients({logits}, [=] {
            return gs_tmse_from_prev(softmax(logits, 0), prev, feats, 1.0, 4.0);
        });
    });
    add_case("brb_loss", 1e-5, [] {
        Tensor raw = rnd({1, 8}, 164);
        BoundaryTarget tgt = derive_boundaries({0, 0, 1, 1, 1, 2, 2, 2});
        return check_gradients({raw}, [=] { return brb_loss(sigmoid(raw), tgt); });
    });
    add_case("micro_model_tcn", 1e-4, [] { return check_micro_model(micro_config(), 201, 48); });
    add_case("micro_model_transformer", 1e-4, [] {
        DestConfig c = micro_config();
        c.temporal_variant = "linear_transformer";
        c.normalized_attention = true;
        c.L_y = 2;
        c.L_c = 1;
        return check_micro_model(c, 202, 32);
    });
    add_case("micro_model_jwtm", 1e-4, [] {
        DestConfig c = micro_config();
        c.jwtm_baseline = true;
        return check_micro_model(c, 203, 32);
    });
    add_case("micro_model_summation", 1e-4, [] {
        DestConfig c = micro_config();
        c.interaction_mode = "summation";
        return check_micro_model(c, 204, 32);
    });
    add_case("micro_model_pool_transform", 1e-4, [] {
        DestConfig c = micro_config();
        c.transform_mode = "avgpool";
        return check_micro_model(c, 205, 32);
    });
    return cases;
}

int run_gradcheck(const std::string& filter) {
    std::vector<CheckCase> cases = build_suite();
    bool any = false, all_pass = true;
    std::printf("%-28s %8s %12s %10s  %s\n", "check", "entries", "max_rel_err", "tol", "status");
    for (auto& c : cases) {
        if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
        any = true;
        GradCheckReport rep = c.run();
        const bool ok = rep.pass(c.tol);
        all_pass = all_pass && ok;
        std::printf("%-28s %8zu %12.3e %10.0e  %s\n", c.name.c_str(), rep.entries.size(),
                    rep.max_rel_err, c.tol, ok ? "PASS" : "FAIL");
        if (!ok && rep.worst) {
            std::printf("  worst: param %zu element %lld analytic %.9g numeric %.9g\n",
                        rep.worst->param, static_cast<long long>(rep.worst->index),
                        rep.worst->analytic, rep.worst->numeric);
        }
    }
    if (!any) {
        std::cerr << "config error: no gradient check matches '" << filter << "'\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"skeleton-based temporal action segmentation workbench"};
    app.require_subcommand(1);

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled dataset");
    synth->add_option("--preset", sa.preset, "generator preset (speed-contrast)");
    synth->add_option("--out", sa.out, "output directory")->required();
    synth->add_option("--seq", sa.seq, "number of sequences");
    synth->add_option("--frames", sa.frames, "frames per sequence");
    synth->add_option("--joints", sa.joints, "joint count");
    synth->add_option("--classes", sa.classes, "class count");
    synth->add_option("--seed", sa.seed, "generator seed");
    synth->add_option("--noise", sa.noise, "coordinate noise sigma (preset default if unset)");
    synth->add_option("--min-seg", sa.min_seg, "minimum segment length");
    synth->add_option("--max-seg", sa.max_seg, "maximum segment length");

    TrainArgs ta;
    CLI::App* tr = app.add_subcommand("train", "train a model on a manifest");
    tr->add_option("--config", ta.config_path, "run config JSON");
    tr->add_option("--manifest", ta.manifest, "dataset manifest");
    tr->add_option("--topology", ta.topology, "skeleton topology file");
    tr->add_option("--out", ta.out, "output directory (checkpoint + log)");
    tr->add_option("--log", ta.log_path, "metrics log path (default <out>/train_log.ndjson)");
    tr->add_option("--optim-preset", ta.optim_preset_name, "optimizer preset (small|batched)");
    tr->add_option("--seed", ta.seed, "run seed");
    tr->add_option("--epochs", ta.epochs, "epoch count");
    tr->add_option("--batch", ta.batch, "sequences per optimizer step");
    tr->add_option("--lr", ta.lr, "learning rate");
    tr->add_option("--gamma", ta.gamma, "boundary loss weight");
    tr->add_option("--stride", ta.stride, "frame stride at load");
    tr->add_flag("--no-normalize", ta.no_normalize, "skip per-sequence z-scoring");
    tr->add_flag("--jwtm-baseline", ta.jwtm, "joint-shared temporal baseline");
    tr->add_flag("--symmetric-norm", ta.symmetric_norm, "symmetric adjacency rescaling");
    tr->add_flag("--normalized-attention", ta.normalized_attention,
                 "mass-normalized linear attention");
    tr->add_option("--temporal-variant", ta.temporal_variant, "tcn|linear_transformer");
    tr->add_option("--interaction-mode", ta.interaction_mode, "cross_attention|summation");
    tr->add_option("--transform-mode", ta.transform_mode, "convolution|avgpool|maxpool");
    tr->add_option("--similarity-source", ta.similarity_source, "input|stage");
    tr->add_option("--save-every", ta.save_every, "checkpoint every N epochs");
    tr->add_option("--stop-at-acc", ta.stop_at_acc, "stop once training accuracy reaches this");
    tr->add_option("--stop-at-f1", ta.stop_at_f1, "stop once training F1@50 reaches this");
    tr->add_flag("--print-config", ta.print_config, "print the effective config and exit");
    tr->add_flag("--quiet", ta.quiet, "suppress per-epoch progress on stderr");

    EvalArgs ea;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    ev->add_option("--checkpoint", ea.checkpoint, "checkpoint file")->required();
    ev->add_option("--manifest", ea.manifest, "dataset manifest")->required();
    ev->add_flag("--refine", ea.refine, "boundary-guided relabeling before scoring");
    ev->add_option("--export-attention", ea.attention_dir, "write DSTI maps into this directory");
    ev->add_option("--threads", ea.threads, "evaluation thread count (0 = auto)");

    std::string gc_filter;
    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gc->add_option("--op", gc_filter, "only run checks whose name contains this substring");

    std::string st_manifest;
    CLI::App* st = app.add_subcommand("stats", "per-joint speed statistics for a dataset");
    st->add_option("--manifest", st_manifest, "dataset manifest")->required();

    std::string su_config;
    int su_joints = 25, su_channels = 3, su_classes = 4;
    CLI::App* su = app.add_subcommand("summary", "parameter and MAC table for a config");
    su->add_option("--config", su_config, "run config JSON");
    su->add_option("--joints", su_joints, "joint count when the config leaves V=0");
    su->add_option("--channels", su_channels, "input channels when the config leaves C_in=0");
    su->add_option("--classes", su_classes, "class count when the config leaves C_o=0");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (synth->parsed()) return run_guarded([&] { return run_synth(sa); });
    if (tr->parsed()) {
        return run_guarded([&] {
            return run_train(ta, [&](const std::string& flag) {
                return tr->count(flag) > 0;
            });
        });
    }
    if (ev->parsed()) return run_guarded([&] { return run_eval(ea); });
    if (gc->parsed()) return run_guarded([&] { return run_gradcheck(gc_filter); });
    if (st->parsed()) return run_guarded([&] { return run_stats(st_manifest); });
    if (su->parsed()) {
        return run_guarded([&] { return run_summary(su_config, su_joints, su_channels, su_classes); });
    }
    return 2;
}
