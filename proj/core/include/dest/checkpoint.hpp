#pragma once

#include <string>

#include "dest/config.hpp"
#include "dest/graph.hpp"
#include "dest/model.hpp"

namespace dest {

// Single-file model container: magic "DESTCKPT", format version, one canonical
// JSON block holding the full run configuration plus the skeleton topology,
// then every registry parameter as (name, extents, little-endian f64 values)
// in registry order. Values round-trip bit-exactly, and the embedded topology
// makes the file self-sufficient for evaluation.
void save_checkpoint(const std::string& path, const RunConfig& run,
                     const SkeletonTopology& topo, const DestModel& model);

struct LoadedCheckpoint {
    RunConfig run;
    SkeletonTopology topology;
    DestModel model;
};

// Rebuilds the model from the embedded config/topology and overwrites its
// parameters with the stored values. Name, order, or shape drift between the
// file and the reconstructed registry is a data error.
LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace dest
