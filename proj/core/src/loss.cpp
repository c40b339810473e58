#include "dest/loss.hpp"

#include <cmath>
#include <string>

#include "dest/errors.hpp"
#include "dest/ops.hpp"

namespace dest {

namespace {
constexpr double kProbFloor = 1e-12;
}

BoundaryTarget derive_boundaries(const std::vector<int>& labels) {
    if (labels.empty()) throw DataError("cannot derive boundaries from an empty label track");
    BoundaryTarget t;
    t.p_b.assign(labels.size(), 0.0);
    int n = 0;
    for (size_t i = 1; i < labels.size(); ++i) {
        if (labels[i] != labels[i - 1]) {
            t.p_b[i] = 1.0;
            ++n;
        }
    }
    t.w_p = n > 0 ? static_cast<double>(labels.size()) / n : 0.0;
    return t;
}

Tensor ce_loss(const Tensor& y_c, const std::vector<int>& labels) {
    if (y_c.rank() != 2) throw ShapeError("ce_loss wants [C x T] probabilities");
    if (static_cast<int>(labels.size()) != y_c.dim(1))
        throw ShapeError("ce_loss label track has " + std::to_string(labels.size()) +
                         " frames, predictions have " + std::to_string(y_c.dim(1)));
    Tensor picked = pick_per_column(y_c, labels);
    return neg(mean(log_t(clamp(picked, kProbFloor, 1.0))));
}

Tensor gs_tmse_from_prev(const Tensor& y_c, const Tensor& prev_log, const Tensor& features,
                         double sigma, double trunc) {
    if (y_c.rank() != 2 || features.rank() != 2)
        throw ShapeError("gs_tmse wants rank-2 predictions and features");
    const int C = y_c.dim(0);
    const int T = y_c.dim(1);
    if (features.dim(1) != T)
        throw ShapeError("similarity features cover " + std::to_string(features.dim(1)) +
                         " frames, predictions " + std::to_string(T));
    if (!(trunc > 0.0)) throw ConfigError("gs_tmse truncation must be positive");
    if (T < 2) return Tensor::scalar(0.0);
    if (prev_log.rank() != 2 || prev_log.dim(0) != C || prev_log.dim(1) != T - 1)
        throw ShapeError("frozen operand must be [C x (T-1)] log-probabilities");

    // Similarity weights are data, not graph: exp(-||f_t - f_{t-1}||^2 / 2s^2).
    Tensor w;
    {
        NoGradGuard ng;
        const int F = features.dim(0);
        const double* f = features.data();
        std::vector<double> wv(static_cast<size_t>(T - 1));
        const double inv = 1.0 / (2.0 * sigma * sigma);
        for (int t = 1; t < T; ++t) {
            double d2 = 0.0;
            for (int c = 0; c < F; ++c) {
                double d = f[c * T + t] - f[c * T + t - 1];
                d2 += d * d;
            }
            wv[t - 1] = std::exp(-d2 * inv);
        }
        w = Tensor::from_data({1, T - 1}, std::move(wv));
    }

    Tensor lp = log_t(clamp(y_c, kProbFloor, 1.0));
    Tensor cur = narrow(lp, 1, 1, T - 1);
    Tensor delta = clamp(sub(cur, prev_log), -trunc, trunc);
    Tensor weighted = mul(mul(delta, delta), w);
    return scale(sum(weighted), 1.0 / (static_cast<double>(T) * C));
}

Tensor gs_tmse_loss(const Tensor& y_c, const Tensor& features, double sigma, double trunc) {
    if (y_c.rank() != 2 || features.rank() != 2)
        throw ShapeError("gs_tmse wants rank-2 predictions and features");
    if (!(trunc > 0.0)) throw ConfigError("gs_tmse truncation must be positive");
    const int T = y_c.dim(1);
    if (T < 2) return Tensor::scalar(0.0);
    // The t-1 operand is held out of the gradient: smoothing pulls each frame
    // toward its predecessor, never the predecessor toward the frame.
    Tensor prev = narrow(log_t(clamp(y_c, kProbFloor, 1.0)), 1, 0, T - 1).detach();
    return gs_tmse_from_prev(y_c, prev, features, sigma, trunc);
}

Tensor brb_loss(const Tensor& y_b, const BoundaryTarget& target) {
    if (y_b.rank() != 2 || y_b.dim(0) != 1) throw ShapeError("brb_loss wants [1 x T]");
    const int T = y_b.dim(1);
    if (static_cast<int>(target.p_b.size()) != T)
        throw ShapeError("boundary target has " + std::to_string(target.p_b.size()) +
                         " frames, predictions " + std::to_string(T));

    std::vector<double> pos(static_cast<size_t>(T)), negw(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        pos[t] = target.w_p * target.p_b[t];
        negw[t] = 1.0 - target.p_b[t];
    }
    Tensor pw = Tensor::from_data({1, T}, std::move(pos));
    Tensor nw = Tensor::from_data({1, T}, std::move(negw));

    Tensor yb = clamp(y_b, kProbFloor, 1.0 - kProbFloor);
    Tensor term = add(mul(pw, log_t(yb)),
                      mul(nw, log_t(add_scalar(neg(yb), 1.0))));
    return scale(sum(term), -1.0 / T);
}

Tensor total_loss(const std::vector<Tensor>& y_cls, const std::vector<Tensor>& y_bnd,
                  const std::vector<int>& labels, const Tensor& features,
                  const LossConfig& cfg) {
    if (y_cls.empty() || y_bnd.empty())
        throw ShapeError("total_loss wants at least one stage output per branch");
    if (cfg.gamma < 0.0) throw ConfigError("gamma must be non-negative");
    const bool from_input = cfg.similarity_source == "input";
    if (from_input && !features.defined())
        throw ShapeError("similarity_source=input needs a feature tensor");

    Tensor total = Tensor::scalar(0.0);
    for (const auto& y : y_cls) {
        const Tensor& f = from_input ? features : y;
        total = add(total, add(ce_loss(y, labels),
                               gs_tmse_loss(y, f, cfg.gs_sigma, cfg.gs_trunc)));
    }
    BoundaryTarget target = derive_boundaries(labels);
    Tensor bnd = Tensor::scalar(0.0);
    for (const auto& y : y_bnd) bnd = add(bnd, brb_loss(y, target));
    return add(total, scale(bnd, cfg.gamma));
}

} // namespace dest
