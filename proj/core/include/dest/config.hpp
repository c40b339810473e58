#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace dest {

// Architecture hyperparameters. Zeros on V / C_in / C_o mean "resolve from
// the topology / dataset at build time"; everything else is a concrete value.
struct DestConfig {
    int V = 0;
    int C_in = 0;
    int C_o = 0;

    int K = 13;              // adjacency scales
    int M = 10;              // channel groups of the spatial output
    int C_mid = 4;           // channels after the input projection
    int C_s = 40;            // spatial feature channels (divisible by M)
    int C_t = 64;            // temporal feature channels
    int C_f = 3;             // temporal conv kernel size (odd)
    int L_y = 11;            // temporal layers
    int L_c = 10;            // cross-attention layers (clamped to L_y - 1)

    double beta = 0.001;     // degree smoothing for adjacency rescaling
    bool symmetric_norm = false;

    std::string transform_mode = "convolution";   // convolution | avgpool | maxpool
    std::string temporal_variant = "tcn";         // tcn | linear_transformer
    bool normalized_attention = false;            // divide linear attention by its mass
    std::string interaction_mode = "cross_attention"; // cross_attention | summation
    bool jwtm_baseline = false;                   // collapse joints before temporal modelling

    double tau = 0.0;        // attention temperature; 0 = sqrt(T) per sequence

    int asb_stages = 2;
    int brb_stages = 3;
    int stage_layers = 10;
    int stage_channels = 64;
    double boundary_threshold = 0.5;
};

struct LossConfig {
    double gamma = 0.1;      // weight of the boundary branch loss
    double gs_sigma = 1.0;   // gaussian bandwidth of the smoothing weights
    double gs_trunc = 4.0;   // truncation of the log-prob deltas
    std::string similarity_source = "input";  // input | stage
};

struct OptimConfig {
    double lr = 0.0005;
    int epochs = 300;
    int batch_size = 1;
};

struct DataConfig {
    bool normalize = true;   // per-sequence, per-channel z-scoring at load
    int stride = 1;          // keep every stride-th frame
};

struct RunConfig {
    DestConfig model;
    LossConfig loss;
    OptimConfig optim;
    DataConfig data;
    uint64_t seed = 1;

    // Enforces field invariants, clamping L_c to L_y - 1 (warning goes to
    // `warn` when given). `for_forward` additionally requires L_y >= 1.
    void validate(std::ostream* warn = nullptr, bool for_forward = true);

    std::string to_json_text() const;                 // canonical: sorted keys, 2-space indent
    static RunConfig from_json_text(const std::string& text);  // rejects unknown keys
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
};

// Named optimizer regimes: "small" is the shipped default (one long run over
// few sequences), "batched" the shorter large-batch regime.
OptimConfig optim_preset(const std::string& name);

} // namespace dest
