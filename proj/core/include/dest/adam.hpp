#pragma once

#include <cstdint>
#include <vector>

#include "dest/tensor.hpp"

namespace dest {

struct AdamConfig {
    double lr = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Holds first/second moment buffers per parameter;
// parameters are updated in place through their shared nodes.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamConfig cfg);

    // Allocates (or clears) every parameter's gradient buffer. Call before the
    // backward passes of a step so untouched parameters legitimately read g=0.
    void zero_grad();

    // Applies one update from the current gradient buffers. A parameter with
    // no gradient buffer at all means the caller never ran zero_grad/backward,
    // which is a contract violation.
    void step();

    int64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamConfig cfg_;
    int64_t t_ = 0;
};

} // namespace dest
