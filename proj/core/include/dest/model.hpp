#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dest/config.hpp"
#include "dest/graph.hpp"
#include "dest/interaction.hpp"
#include "dest/spatial.hpp"
#include "dest/temporal.hpp"
#include "dest/tensor.hpp"

namespace dest {

// One dilated residual block of a refinement stage:
//   x + PW(relu(DConv(x))), kernel 3, dilation 2^i.
struct StageBlockParams {
    Tensor dconv_w;   // [ch x ch x 3]
    Tensor dconv_b;   // [ch x 1]
    Tensor pw_w;      // [ch x ch]
    Tensor pw_b;      // [ch x 1]
};

// A refinement stage: pointwise in-projection, stacked dilated residual
// blocks, pointwise out-projection back to the prediction width.
struct StageParams {
    Tensor in_w;      // [ch x c_in]
    Tensor in_b;      // [ch x 1]
    std::vector<StageBlockParams> blocks;
    Tensor out_w;     // [c_out x ch]
    Tensor out_b;     // [c_out x 1]
};

struct HeadParams {
    Tensor w;         // [c_out x C_t]
    Tensor b;         // [c_out x 1]
};

struct ModelForward {
    // Stage outputs, first entry the trunk head: class probabilities [C_o x T]
    // (columns sum to 1) and boundary probabilities [1 x T] (values in (0,1)).
    std::vector<Tensor> y_cls;    // 1 + asb_stages entries
    std::vector<Tensor> y_bnd;    // 1 + brb_stages entries
    std::vector<Tensor> attn;     // cross-attention maps, one per interaction layer
    Tensor h_final;               // last trunk feature map [C_t x T]
};

class DestModel {
public:
    // cfg must be fully resolved (V, C_in, C_o positive, L_c clamped) and is
    // checked against the graph. All parameters are drawn from `seed` in
    // registration order, so a seed pins the full initial state.
    DestModel(const DestConfig& cfg, SkeletonGraph graph, uint64_t seed);

    ModelForward forward(const Tensor& X) const;

    const DestConfig& config() const { return cfg_; }
    const SkeletonGraph& graph() const { return graph_; }

    const std::vector<std::pair<std::string, Tensor>>& named_parameters() const {
        return registry_;
    }
    std::vector<Tensor> parameters() const;
    int64_t parameter_count() const;

    // Exposed for tests and surgical experiments.
    SpatialParams& spatial() { return spatial_; }
    std::vector<TransformParams>& transforms() { return transforms_; }
    std::vector<JtmTcnLayerParams>& tcn_layers() { return tcn_layers_; }
    std::vector<JtmTransformerLayerParams>& transformer_layers() { return transformer_layers_; }
    std::vector<DstiParams>& dsti_layers() { return dsti_layers_; }

private:
    Tensor run_stage(const StageParams& s, const Tensor& x) const;

    DestConfig cfg_;
    SkeletonGraph graph_;
    SpatialParams spatial_;
    std::vector<TransformParams> transforms_;        // M entries (convolution mode only)
    std::vector<JtmTcnLayerParams> tcn_layers_;      // L_y entries (tcn variant)
    std::vector<JtmTransformerLayerParams> transformer_layers_;
    std::vector<DstiParams> dsti_layers_;            // L_c entries
    HeadParams head_cls_;
    HeadParams head_bnd_;
    std::vector<StageParams> asb_;
    std::vector<StageParams> brb_;
    std::vector<std::pair<std::string, Tensor>> registry_;
};

// Boundary-guided relabeling: boundaries are frames where the boundary score
// exceeds `threshold` and is the maximum within a +/-2 frame window; every
// span between consecutive boundaries is relabeled to its majority argmax
// class from y_cls. y_cls: [C_o x T], y_bnd: [1 x T].
std::vector<int> refine_with_boundaries(const Tensor& y_cls, const Tensor& y_bnd,
                                        double threshold);

struct SummaryRow {
    std::string component;
    int64_t params = 0;
    int64_t macs_per_frame = 0;
};

// Closed-form size/cost table (no model instantiation). The parameter total
// matches DestModel::parameter_count() for the same config.
std::vector<SummaryRow> model_summary(const DestConfig& cfg);

} // namespace dest
