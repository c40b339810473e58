#include "dest/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dest/errors.hpp"
#include "dest/ops.hpp"

namespace dest {

GradCheckReport check_gradients(const std::vector<Tensor>& params,
                                const std::function<Tensor()>& fn,
                                const GradCheckOptions& opt) {
    if (params.empty()) throw InvariantError("gradient check needs parameters");
    if (!(opt.eps > 0.0)) throw ConfigError("finite-difference step must be positive");

    for (auto p : params) p.zero_grad();
    Tensor loss = fn();
    loss.backward();

    std::vector<std::pair<size_t, int64_t>> sites;
    for (size_t pi = 0; pi < params.size(); ++pi)
        for (int64_t i = 0; i < params[pi].numel(); ++i) sites.emplace_back(pi, i);
    if (opt.max_samples > 0 && opt.max_samples < static_cast<int64_t>(sites.size())) {
        std::mt19937_64 rng(opt.seed);
        std::shuffle(sites.begin(), sites.end(), rng);
        sites.resize(static_cast<size_t>(opt.max_samples));
    }

    GradCheckReport rep;
    rep.entries.reserve(sites.size());
    for (const auto& [pi, i] : sites) {
        Tensor p = params[pi];
        const double* g = p.grad_data();
        if (!g) throw InvariantError("parameter missing a gradient buffer after backward");
        GradEntry e;
        e.param = pi;
        e.index = i;
        e.analytic = g[i];

        double* v = p.data();
        const double keep = v[i];
        double plus, minus;
        {
            NoGradGuard ng;
            v[i] = keep + opt.eps;
            plus = fn().item();
            v[i] = keep - opt.eps;
            minus = fn().item();
            v[i] = keep;
        }
        e.numeric = (plus - minus) / (2.0 * opt.eps);
        const double denom = std::max({std::fabs(e.analytic), std::fabs(e.numeric), 1e-6});
        e.rel_err = std::fabs(e.analytic - e.numeric) / denom;
        rep.entries.push_back(e);
    }
    for (const auto& e : rep.entries) {
        if (!rep.worst || e.rel_err > rep.max_rel_err) {
            rep.max_rel_err = e.rel_err;
            rep.worst = &e;
        }
    }
    return rep;
}

Tensor weighted_sum(const Tensor& x, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> coeff(static_cast<size_t>(x.numel()));
    for (auto& c : coeff) c = u(rng);
    Tensor w = Tensor::from_data(x.shape(), std::move(coeff));
    return sum(mul(x, w));
}

} // namespace dest
