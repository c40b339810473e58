#pragma once

#include <string>
#include <vector>

#include "dest/tensor.hpp"

namespace dest {

// Maximal constant-label run, frames [start, end] inclusive.
struct Segment {
    int cls = 0;
    int start = 0;
    int end = 0;
};

std::vector<Segment> to_segments(const std::vector<int>& labels);

// Per-frame argmax of a [C x T] probability/score matrix; ties go to the
// smallest class index.
std::vector<int> argmax_labels(const Tensor& scores);

// All metric values are percentages in [0, 100].
double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt);

// 100 * (1 - levenshtein(pred classes, gt classes) / max(len_pred, len_gt)),
// computed on the segment class sequences.
double edit_score(const std::vector<int>& pred, const std::vector<int>& gt);

struct F1Counts {
    int tp = 0;
    int fp = 0;
    int n_gt = 0;
};

// Greedy matching in prediction order: a predicted segment is a true positive
// when the best-overlapping unmatched ground-truth segment of the same class
// reaches the IoU threshold; that segment is then consumed. IoU is measured
// on inclusive frame intervals.
F1Counts f1_counts(const std::vector<int>& pred, const std::vector<int>& gt, double iou_threshold);

double f1_from_counts(const F1Counts& c);

struct EvalReport {
    double acc = 0.0;
    double edit = 0.0;
    double f1_10 = 0.0;
    double f1_25 = 0.0;
    double f1_50 = 0.0;
};

EvalReport evaluate(const std::vector<int>& pred, const std::vector<int>& gt);

// Canonical JSON with keys acc, edit, f1@10, f1@25, f1@50.
std::string report_json(const EvalReport& r);

// Dataset-level aggregation: accuracy pools frames, the edit score averages
// per sequence, and F1 pools match counts across sequences.
class DatasetEval {
public:
    void add(const std::vector<int>& pred, const std::vector<int>& gt);
    EvalReport report() const;
    int sequences() const { return n_seq_; }

private:
    int64_t frames_total_ = 0;
    int64_t frames_correct_ = 0;
    double edit_sum_ = 0.0;
    int n_seq_ = 0;
    F1Counts c10_, c25_, c50_;
};

} // namespace dest
