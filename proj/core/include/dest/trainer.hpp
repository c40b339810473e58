#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dest/config.hpp"
#include "dest/data.hpp"
#include "dest/graph.hpp"
#include "dest/metrics.hpp"
#include "dest/model.hpp"

namespace dest {

// Fills in the data-dependent config fields (V from the topology, C_in /
// C_o from the samples when zero), checks every sample against the result
// and returns the resolved config. Labels must fit in C_o.
DestConfig resolve_config(const DestConfig& cfg, const SkeletonTopology& topo,
                          const std::vector<SequenceSample>& samples);

struct EpochRecord {
    int epoch = 0;        // 1-based
    double loss = 0.0;    // mean per-sequence composite loss
    EvalReport metrics;   // training-set metrics from the same pass
};

struct TrainOptions {
    std::string out_dir;           // empty: nothing written
    int save_every = 0;            // also checkpoint every N epochs (0: final only)
    // Early stop once every requested target is met (0 disables a target).
    double stop_at_acc = 0.0;
    double stop_at_f1 = 0.0;       // applies to F1@50
    std::ostream* log = nullptr;   // per-epoch NDJSON records
    std::ostream* progress = nullptr;
};

struct TrainResult {
    std::vector<EpochRecord> epochs;
    std::string checkpoint_path;   // empty when out_dir was empty
    bool diverged = false;         // loss left the finite range; training stopped
};

std::string epoch_record_json(const EpochRecord& r);

// Full training loop: seeded model construction, per-epoch shuffled order, Adam
// steps with gradient accumulation over batch_size sequences (per-sequence
// losses summed, each already frame-normalized), training metrics taken from
// the same forward passes, checkpoint written into out_dir. Deterministic:
// identical RunConfig + data give identical checkpoints and logs.
TrainResult train(const RunConfig& run, const SkeletonTopology& topo,
                  const std::vector<SequenceSample>& data, const TrainOptions& opt = {});

struct EvalOptions {
    bool refine = false;            // apply boundary-guided relabeling before scoring
    std::string attention_dir;      // non-empty: write DSTI maps per sequence
    int threads = 0;                // 0: hardware concurrency
};

// Scores the model over samples (gradients off, parallel across sequences,
// deterministic aggregation in manifest order). Attention files are named
// attn_L<layer>_<sequence id>.txt.
EvalReport evaluate_model(const DestModel& model, const std::vector<SequenceSample>& samples,
                          const EvalOptions& opt = {});

} // namespace dest
