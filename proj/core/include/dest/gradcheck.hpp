#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dest/tensor.hpp"

namespace dest {

struct GradEntry {
    size_t param = 0;       // index into the checked parameter list
    int64_t index = 0;      // flat element index within that parameter
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradEntry> entries;
    double max_rel_err = 0.0;
    const GradEntry* worst = nullptr;   // points into entries

    bool pass(double tol) const { return max_rel_err < tol; }
};

struct GradCheckOptions {
    double eps = 1e-5;        // central-difference step
    int64_t max_samples = 0;  // 0 = every element; else that many (param, index) pairs
    uint64_t seed = 1;        // sampling order
};

// Compares reverse-mode gradients of fn() against central differences.
// fn must rebuild its graph from the parameters' CURRENT values on every call
// and return a scalar. Relative error uses max(|analytic|, |numeric|, 1e-6)
// as the denominator so near-zero gradients are judged absolutely.
GradCheckReport check_gradients(const std::vector<Tensor>& params,
                                const std::function<Tensor()>& fn,
                                const GradCheckOptions& opt = {});

// Deterministic scalarization for op-level checks: sum of x times a fixed
// pseudo-random coefficient pattern, so every element influences the scalar
// with a distinct weight.
Tensor weighted_sum(const Tensor& x, uint64_t seed);

} // namespace dest
