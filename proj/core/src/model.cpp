#include "dest/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dest/metrics.hpp"
#include "dest/ops.hpp"

namespace dest {
namespace {

constexpr int kStageKernel = 3;

std::string idx_name(const std::string& prefix, int i, const std::string& leaf) {
    return prefix + "." + std::to_string(i) + "." + leaf;
}

StageParams make_stage(int c_in, int c_out, int channels, int layers,
                       std::mt19937_64& rng) {
    StageParams s;
    s.in_w = Tensor::zeros({channels, c_in}, true);
    fill_glorot_uniform(s.in_w, rng, c_in, channels);
    s.in_b = Tensor::zeros({channels, 1}, true);
    s.blocks.resize(layers);
    for (auto& b : s.blocks) {
        b.dconv_w = Tensor::zeros({channels, channels, kStageKernel}, true);
        fill_glorot_uniform(b.dconv_w, rng, channels * kStageKernel, channels);
        b.dconv_b = Tensor::zeros({channels, 1}, true);
        b.pw_w = Tensor::zeros({channels, channels}, true);
        fill_glorot_uniform(b.pw_w, rng, channels, channels);
        b.pw_b = Tensor::zeros({channels, 1}, true);
    }
    s.out_w = Tensor::zeros({c_out, channels}, true);
    fill_glorot_uniform(s.out_w, rng, channels, c_out);
    s.out_b = Tensor::zeros({c_out, 1}, true);
    return s;
}

} // namespace

DestModel::DestModel(const DestConfig& cfg, SkeletonGraph graph, uint64_t seed)
    : cfg_(cfg), graph_(std::move(graph)) {
    if (cfg_.V <= 0 || cfg_.C_in <= 0 || cfg_.C_o <= 0)
        throw ConfigError("model construction needs resolved V, C_in, C_o");
    if (graph_.V != cfg_.V)
        throw ConfigError("graph has " + std::to_string(graph_.V) + " joints, config says " +
                          std::to_string(cfg_.V));
    if (graph_.K != cfg_.K)
        throw ConfigError("graph was built with K=" + std::to_string(graph_.K) +
                          ", config says K=" + std::to_string(cfg_.K));
    if (cfg_.L_y < 1)
        throw ConfigError("forward-capable model needs at least one temporal layer");
    if (cfg_.L_c > cfg_.L_y - 1)
        throw ConfigError("interaction depth exceeds temporal depth - 1");
    if (cfg_.M < 1 || cfg_.C_s < 1 || cfg_.C_s % cfg_.M != 0)
        throw ConfigError("group count " + std::to_string(cfg_.M) + " must divide the " +
                          std::to_string(cfg_.C_s) + " spatial channels");

    std::mt19937_64 rng(seed);
    const int c_g = cfg_.C_s / cfg_.M;
    const bool joints_mode = cfg_.jwtm_baseline;
    const int d_first = joints_mode ? c_g : cfg_.V;
    const int d_s = joints_mode ? c_g : cfg_.V;

    auto reg = [&](const std::string& name, const Tensor& t) {
        if (t.defined()) registry_.emplace_back(name, t);
    };

    spatial_ = make_spatial_params(cfg_.C_in, cfg_.C_mid, cfg_.K, cfg_.V, cfg_.C_s, rng);
    reg("spatial.w_in", spatial_.w_in);
    reg("spatial.b_in", spatial_.b_in);
    for (int k = 0; k < cfg_.K; ++k) reg("spatial.mask." + std::to_string(k), spatial_.masks[k]);
    reg("spatial.mlp_w1", spatial_.mlp_w1);
    reg("spatial.mlp_b1", spatial_.mlp_b1);
    reg("spatial.mlp_w2", spatial_.mlp_w2);
    reg("spatial.mlp_b2", spatial_.mlp_b2);

    const CollapseAxis axis = joints_mode ? CollapseAxis::Joints : CollapseAxis::Channels;
    if (cfg_.transform_mode == "convolution") {
        transforms_.reserve(cfg_.M);
        for (int i = 0; i < cfg_.M; ++i) {
            int collapsed = joints_mode ? cfg_.V : c_g;
            transforms_.push_back(make_transform_params(collapsed, axis, rng));
            reg(idx_name("transform", i, "w"), transforms_[i].w);
            reg(idx_name("transform", i, "b"), transforms_[i].b);
        }
    }

    if (cfg_.temporal_variant == "tcn") {
        tcn_layers_.reserve(cfg_.L_y);
        for (int l = 0; l < cfg_.L_y; ++l) {
            int rows = (l == 0) ? d_first : cfg_.C_t;
            tcn_layers_.push_back(make_jtm_tcn_layer(rows, cfg_.C_t, cfg_.C_f, true, rng));
            reg(idx_name("temporal", l, "w"), tcn_layers_[l].w);
            reg(idx_name("temporal", l, "res_p"), tcn_layers_[l].res_p);
        }
    } else {
        transformer_layers_.reserve(cfg_.L_y);
        for (int l = 0; l < cfg_.L_y; ++l) {
            int rows = (l == 0) ? d_first : cfg_.C_t;
            transformer_layers_.push_back(
                make_jtm_transformer_layer(rows, cfg_.C_t, true, cfg_.normalized_attention, rng));
            auto& tl = transformer_layers_[l];
            reg(idx_name("temporal", l, "emb_w"), tl.emb_w);
            reg(idx_name("temporal", l, "emb_b"), tl.emb_b);
            reg(idx_name("temporal", l, "q_w"), tl.q_w);
            reg(idx_name("temporal", l, "q_b"), tl.q_b);
            reg(idx_name("temporal", l, "f_w"), tl.f_w);
            reg(idx_name("temporal", l, "f_b"), tl.f_b);
            reg(idx_name("temporal", l, "u_w"), tl.u_w);
            reg(idx_name("temporal", l, "u_b"), tl.u_b);
            reg(idx_name("temporal", l, "res_p"), tl.res_p);
        }
    }

    dsti_layers_.reserve(cfg_.L_c);
    for (int l = 0; l < cfg_.L_c; ++l) {
        dsti_layers_.push_back(make_dsti_params(cfg_.C_t, d_s, rng));
        reg(idx_name("dsti", l, "wc_w"), dsti_layers_[l].wc_w);
        reg(idx_name("dsti", l, "wc_b"), dsti_layers_[l].wc_b);
    }

    head_cls_.w = Tensor::zeros({cfg_.C_o, cfg_.C_t}, true);
    fill_glorot_uniform(head_cls_.w, rng, cfg_.C_t, cfg_.C_o);
    head_cls_.b = Tensor::zeros({cfg_.C_o, 1}, true);
    head_bnd_.w = Tensor::zeros({1, cfg_.C_t}, true);
    fill_glorot_uniform(head_bnd_.w, rng, cfg_.C_t, 1);
    head_bnd_.b = Tensor::zeros({1, 1}, true);
    reg("head.cls.w", head_cls_.w);
    reg("head.cls.b", head_cls_.b);
    reg("head.bnd.w", head_bnd_.w);
    reg("head.bnd.b", head_bnd_.b);

    auto reg_stage = [&](const std::string& prefix, const StageParams& s) {
        reg(prefix + ".in_w", s.in_w);
        reg(prefix + ".in_b", s.in_b);
        for (size_t i = 0; i < s.blocks.size(); ++i) {
            const auto& b = s.blocks[i];
            std::string bp = prefix + ".block." + std::to_string(i);
            reg(bp + ".dconv_w", b.dconv_w);
            reg(bp + ".dconv_b", b.dconv_b);
            reg(bp + ".pw_w", b.pw_w);
            reg(bp + ".pw_b", b.pw_b);
        }
        reg(prefix + ".out_w", s.out_w);
        reg(prefix + ".out_b", s.out_b);
    };
    asb_.reserve(cfg_.asb_stages);
    for (int s = 0; s < cfg_.asb_stages; ++s) {
        asb_.push_back(make_stage(cfg_.C_o, cfg_.C_o, cfg_.stage_channels, cfg_.stage_layers, rng));
        reg_stage("asb." + std::to_string(s), asb_[s]);
    }
    brb_.reserve(cfg_.brb_stages);
    for (int s = 0; s < cfg_.brb_stages; ++s) {
        brb_.push_back(make_stage(1, 1, cfg_.stage_channels, cfg_.stage_layers, rng));
        reg_stage("brb." + std::to_string(s), brb_[s]);
    }
}

std::vector<Tensor> DestModel::parameters() const {
    std::vector<Tensor> out;
    out.reserve(registry_.size());
    for (const auto& [name, t] : registry_) out.push_back(t);
    return out;
}

int64_t DestModel::parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : registry_) n += t.numel();
    return n;
}

Tensor DestModel::run_stage(const StageParams& s, const Tensor& x) const {
    Tensor h = add(matmul(s.in_w, x), s.in_b);
    for (size_t i = 0; i < s.blocks.size(); ++i) {
        const auto& b = s.blocks[i];
        int dilation = 1 << i;
        Tensor a = relu(add(conv1d(h, b.dconv_w, dilation), b.dconv_b));
        h = add(h, add(matmul(b.pw_w, a), b.pw_b));
    }
    return add(matmul(s.out_w, h), s.out_b);
}

ModelForward DestModel::forward(const Tensor& X) const {
    if (X.rank() != 3)
        throw ShapeError("forward wants [C_in x T x V], got rank " + std::to_string(X.rank()));
    if (X.dim(0) != cfg_.C_in || X.dim(2) != cfg_.V)
        throw ShapeError("forward input is " + shape_str(X.shape()) + ", config wants [" +
                         std::to_string(cfg_.C_in) + " x T x " + std::to_string(cfg_.V) + "]");
    const int T = X.dim(1);
    if (T < 1) throw ShapeError("forward needs at least one frame");

    const bool joints_mode = cfg_.jwtm_baseline;
    const CollapseAxis axis = joints_mode ? CollapseAxis::Joints : CollapseAxis::Channels;
    const double tau = cfg_.tau > 0.0 ? cfg_.tau : std::sqrt(static_cast<double>(T));

    Tensor S = spatial_forward(X, graph_.a_hat, spatial_);
    std::vector<Tensor> groups = split_groups(S, cfg_.M);

    // Collapsed sub-features: channels mode gives [T x V] per group (already in
    // the row-per-frame layout the interaction wants), joints mode gives
    // [C_g x T] (transposed on demand).
    std::vector<Tensor> s_hat(cfg_.M);
    for (int i = 0; i < cfg_.M; ++i) {
        const TransformParams* tp =
            cfg_.transform_mode == "convolution" ? &transforms_[i] : nullptr;
        s_hat[i] = transform(groups[i], cfg_.transform_mode, axis, tp);
    }
    auto temporal_rows = [&](int g) {
        // [D x T] view of group g for the temporal stack.
        return joints_mode ? s_hat[g] : transpose2d(s_hat[g]);
    };
    auto interaction_rows = [&](int g) {
        // [T x D_s] view of group g for the interaction projection.
        return joints_mode ? transpose2d(s_hat[g]) : s_hat[g];
    };
    auto run_temporal = [&](const Tensor& rows, int layer) {
        int dilation = jtm_dilation(layer + 1, T);
        if (cfg_.temporal_variant == "tcn")
            return jtm_tcn_forward(rows, tcn_layers_[layer], dilation);
        return jtm_transformer_forward(rows, transformer_layers_[layer]);
    };

    ModelForward out;
    Tensor H = run_temporal(temporal_rows(0), 0);
    for (int l = 2; l <= cfg_.L_y; ++l) {
        Tensor input = H;
        if (l - 1 <= cfg_.L_c) {
            int g = std::min(l, cfg_.M) - 1;
            DstiResult r = dsti_forward(interaction_rows(g), H, dsti_layers_[l - 2], tau,
                                        cfg_.interaction_mode);
            input = r.R;
            if (r.A.defined()) out.attn.push_back(r.A);
        }
        H = run_temporal(input, l - 1);
    }
    out.h_final = H;

    Tensor y_c = softmax(add(matmul(head_cls_.w, H), head_cls_.b), 0);
    Tensor y_b = sigmoid(add(matmul(head_bnd_.w, H), head_bnd_.b));
    out.y_cls.push_back(y_c);
    out.y_bnd.push_back(y_b);
    for (const auto& s : asb_) {
        y_c = softmax(run_stage(s, y_c), 0);
        out.y_cls.push_back(y_c);
    }
    for (const auto& s : brb_) {
        y_b = sigmoid(run_stage(s, y_b));
        out.y_bnd.push_back(y_b);
    }
    return out;
}

std::vector<int> refine_with_boundaries(const Tensor& y_cls, const Tensor& y_bnd,
                                        double threshold) {
    if (y_cls.rank() != 2 || y_bnd.rank() != 2 || y_bnd.dim(0) != 1)
        throw ShapeError("refine wants y_cls [C x T] and y_bnd [1 x T]");
    const int T = y_cls.dim(1);
    if (y_bnd.dim(1) != T)
        throw ShapeError("class and boundary tracks disagree on T");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ConfigError("boundary threshold must lie in (0, 1)");

    std::vector<int> labels = argmax_labels(y_cls);
    const double* b = y_bnd.data();
    std::vector<int> cuts;
    for (int t = 0; t < T; ++t) {
        if (b[t] <= threshold) continue;
        double mx = b[t];
        for (int u = std::max(0, t - 2); u <= std::min(T - 1, t + 2); ++u)
            mx = std::max(mx, b[u]);
        if (b[t] == mx) cuts.push_back(t);
    }
    cuts.push_back(T);

    const int C = y_cls.dim(0);
    std::vector<int> out(T);
    int start = 0;
    for (int cut : cuts) {
        if (cut > start) {
            std::vector<int> hist(C, 0);
            for (int t = start; t < cut; ++t) ++hist[labels[t]];
            int best = 0;
            for (int c = 1; c < C; ++c)
                if (hist[c] > hist[best]) best = c;
            for (int t = start; t < cut; ++t) out[t] = best;
        }
        start = cut;
    }
    return out;
}

std::vector<SummaryRow> model_summary(const DestConfig& cfg) {
    if (cfg.V <= 0 || cfg.C_in <= 0 || cfg.C_o <= 0)
        throw ConfigError("summary needs resolved V, C_in, C_o");
    const int64_t V = cfg.V, K = cfg.K, M = cfg.M;
    const int64_t c_mid = cfg.C_mid, c_s = cfg.C_s, c_t = cfg.C_t, c_f = cfg.C_f;
    const int64_t c_g = c_s / M;
    const int64_t c_o = cfg.C_o, ch = cfg.stage_channels, L = cfg.stage_layers;
    const int64_t d_first = cfg.jwtm_baseline ? c_g : V;
    const int64_t d_s = cfg.jwtm_baseline ? c_g : V;
    const int64_t l_y = cfg.L_y;
    const int64_t l_c = std::min<int64_t>(cfg.L_c, std::max<int64_t>(0, l_y - 1));

    std::vector<SummaryRow> rows;
    auto push = [&](const std::string& name, int64_t params, int64_t macs) {
        rows.push_back({name, params, macs});
    };

    {
        int64_t p = c_mid * cfg.C_in + c_mid + K * V * V +
                    c_s * K * c_mid + c_s + c_s * c_s + c_s;
        int64_t m = c_mid * cfg.C_in * V + K * c_mid * V * V +
                    c_s * K * c_mid * V + c_s * c_s * V;
        push("spatial", p, m);
    }
    {
        int64_t collapsed = cfg.jwtm_baseline ? V : c_g;
        int64_t p = cfg.transform_mode == "convolution" ? M * (collapsed + 1) : 0;
        int64_t m = cfg.transform_mode == "convolution" ? M * c_g * V : 0;
        push("transforms", p, m);
    }
    {
        int64_t p = 0, m = 0;
        for (int64_t l = 0; l < l_y; ++l) {
            int64_t d = (l == 0) ? d_first : c_t;
            int64_t res = (d != c_t) ? d * c_t : 0;
            if (cfg.temporal_variant == "tcn") {
                p += d * c_t * c_f + res;
                m += d * c_t * c_f + res;
            } else {
                p += d * (2 * c_t + 3 * (c_t * c_t + c_t)) + res;
                m += d * (c_t + 5 * c_t * c_t) + res;
            }
        }
        push("temporal", p, m);
    }
    {
        int64_t per_p = c_t * d_s + c_t;
        int64_t per_m = cfg.interaction_mode == "cross_attention"
                            ? c_t * d_s + 2 * c_t * c_t
                            : c_t * d_s;
        push("interaction", l_c * per_p, l_c * per_m);
    }
    push("heads", c_o * c_t + c_o + c_t + 1, c_o * c_t + c_t);
    {
        int64_t block_p = ch * ch * kStageKernel + ch + ch * ch + ch;
        int64_t block_m = ch * ch * kStageKernel + ch * ch;
        int64_t p = cfg.asb_stages * (ch * c_o + ch + L * block_p + c_o * ch + c_o);
        int64_t m = cfg.asb_stages * (ch * c_o + L * block_m + c_o * ch);
        push("asb", p, m);
        p = cfg.brb_stages * (ch * 1 + ch + L * block_p + 1 * ch + 1);
        m = cfg.brb_stages * (ch * 1 + L * block_m + 1 * ch);
        push("brb", p, m);
    }
    int64_t tp = 0, tm = 0;
    for (const auto& r : rows) { tp += r.params; tm += r.macs_per_frame; }
    push("total", tp, tm);
    return rows;
}

} // namespace dest
