#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dest/config.hpp"
#include "dest/graph.hpp"
#include "dest/tensor.hpp"

namespace dest {

// One skeleton sequence: coords [C x T x V] plus a per-frame class id track.
struct SequenceSample {
    std::string id;
    Tensor coords;
    std::vector<int> labels;

    int channels() const { return coords.dim(0); }
    int frames() const { return coords.dim(1); }
    int joints() const { return coords.dim(2); }
};

// Binary sequence codec: magic "DESTSEQ1", C/T/V as little-endian u32, the
// coordinate block as little-endian f64 in (c, t, v) row-major order, then T
// labels as u32. Round-trips are bit-exact.
void save_sequence(const SequenceSample& s, const std::string& path);
SequenceSample load_sequence(const std::string& path, const std::string& id);

// Manifest: JSON array of {"id", "data_path", "label_in_file"}; relative
// data paths resolve against the manifest's directory. Samples come back in
// manifest order with per-sequence preprocessing from cfg applied (frame
// stride first, then per-channel z-scoring).
std::vector<SequenceSample> load_dataset(const std::string& manifest_path,
                                         const DataConfig& cfg);

// Writes one .destseq file per sample into dir and a manifest listing them.
// Returns the manifest path (dir + "/manifest.json").
std::string save_dataset(const std::vector<SequenceSample>& samples,
                         const std::string& dir);

// Preprocessing pieces, exposed for tests.
SequenceSample apply_stride(const SequenceSample& s, int stride);
SequenceSample zscore(const SequenceSample& s);

struct JointSpeedStats {
    std::vector<double> mean;       // per joint, frame displacement magnitude
    std::vector<double> variance;   // population variance over the same pool
    int64_t frames = 0;             // displacement samples per joint
};

// Pools ||coords[:,t,v] - coords[:,t-1,v]|| over every sequence and frame.
// Sequences shorter than 2 frames are skipped with a note to `warn`.
JointSpeedStats joint_speed_stats(const std::vector<SequenceSample>& samples,
                                  std::ostream* warn = nullptr);

// Per-class, per-joint motion regime for the generator. freq is in cycles per
// frame; a joint's mean speed scales with amp * freq, so classes are shaped by
// choosing which joints get the fast frequency.
struct SpeedProfile {
    int V = 0;
    int n_classes = 0;
    std::vector<std::vector<double>> freq;   // [n_classes][V]
    std::vector<std::vector<double>> amp;    // [n_classes][V]
    double noise_sigma = 0.02;
    double drift_sigma = 0.0;                // slope std-dev of a per-segment linear drift
    int min_seg = 20;
    int max_seg = 60;
};

// The 25-joint capture-rig skeleton used by the shipped presets.
SkeletonTopology default_skeleton();

// Speed-contrast preset on the default skeleton: the feet are fast in every
// class (so speed statistics rank them above the torso), while classes 0 and 1
// differ only in WHICH arm is fast (left vs right, mirror-symmetric sets of
// equal size). A model that pools joints before temporal filtering sees the
// same aggregate motion for both; a joint-resolved one does not. Classes
// beyond 1 use distinct joint sets (both arms, legs, torso emphasis).
SpeedProfile speed_contrast_profile(int n_classes);

// Segment-structured sequences under the profile: per sequence, segment
// lengths are uniform in [min_seg, max_seg], each segment's class differs from
// its predecessor, and every (segment, joint, channel) gets a fresh phase so
// only the speed regime carries class identity. Deterministic in seed.
std::vector<SequenceSample> synthesize(const SpeedProfile& profile, int n_sequences,
                                       int T, uint64_t seed);

} // namespace dest
