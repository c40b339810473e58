#include "dest/metrics.hpp"

#include <algorithm>

#include "json.hpp"

namespace dest {

std::vector<Segment> to_segments(const std::vector<int>& labels) {
    std::vector<Segment> segs;
    if (labels.empty()) return segs;
    Segment cur{labels[0], 0, 0};
    for (int t = 1; t < static_cast<int>(labels.size()); ++t) {
        if (labels[t] == cur.cls) {
            cur.end = t;
        } else {
            segs.push_back(cur);
            cur = {labels[t], t, t};
        }
    }
    segs.push_back(cur);
    return segs;
}

std::vector<int> argmax_labels(const Tensor& scores) {
    if (scores.rank() != 2) {
        throw ShapeError("argmax_labels expects [C x T], got " + shape_str(scores.shape()));
    }
    const int C = scores.dim(0), T = scores.dim(1);
    const double* s = scores.data();
    std::vector<int> out(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        int best = 0;
        double bv = s[t];
        for (int c = 1; c < C; ++c) {
            const double v = s[static_cast<int64_t>(c) * T + t];
            if (v > bv) { bv = v; best = c; }
        }
        out[static_cast<size_t>(t)] = best;
    }
    return out;
}

double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size()) {
        throw ShapeError("frame_accuracy: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(gt.size()) + " labels");
    }
    if (pred.empty()) throw ShapeError("frame_accuracy: empty sequences");
    int64_t ok = 0;
    for (size_t i = 0; i < pred.size(); ++i) ok += pred[i] == gt[i];
    return 100.0 * static_cast<double>(ok) / static_cast<double>(pred.size());
}

namespace {

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    std::vector<int> prev(m + 1), cur(m + 1);
    for (int j = 0; j <= m; ++j) prev[j] = j;
    for (int i = 1; i <= n; ++i) {
        cur[0] = i;
        for (int j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::vector<int> segment_classes(const std::vector<int>& labels) {
    std::vector<int> cls;
    for (const Segment& s : to_segments(labels)) cls.push_back(s.cls);
    return cls;
}

} // namespace

double edit_score(const std::vector<int>& pred, const std::vector<int>& gt) {
    const auto pc = segment_classes(pred);
    const auto gc = segment_classes(gt);
    const size_t denom = std::max(pc.size(), gc.size());
    if (denom == 0) return 100.0;
    return 100.0 * (1.0 - static_cast<double>(levenshtein(pc, gc)) / static_cast<double>(denom));
}

namespace {

double interval_iou(const Segment& a, const Segment& b) {
    const int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
    if (inter <= 0) return 0.0;
    const int len_a = a.end - a.start + 1;
    const int len_b = b.end - b.start + 1;
    return static_cast<double>(inter) / static_cast<double>(len_a + len_b - inter);
}

} // namespace

F1Counts f1_counts(const std::vector<int>& pred, const std::vector<int>& gt, double iou_threshold) {
    const auto ps = to_segments(pred);
    const auto gs = to_segments(gt);
    F1Counts c;
    c.n_gt = static_cast<int>(gs.size());
    std::vector<bool> used(gs.size(), false);
    for (const Segment& p : ps) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t i = 0; i < gs.size(); ++i) {
            if (used[i] || gs[i].cls != p.cls) continue;
            const double iou = interval_iou(p, gs[i]);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0 && best_iou >= iou_threshold) {
            used[static_cast<size_t>(best)] = true;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    return c;
}

double f1_from_counts(const F1Counts& c) {
    const int n_pred = c.tp + c.fp;
    const double precision = n_pred > 0 ? static_cast<double>(c.tp) / n_pred : 0.0;
    const double recall = c.n_gt > 0 ? static_cast<double>(c.tp) / c.n_gt : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

EvalReport evaluate(const std::vector<int>& pred, const std::vector<int>& gt) {
    EvalReport r;
    r.acc = frame_accuracy(pred, gt);
    r.edit = edit_score(pred, gt);
    r.f1_10 = f1_from_counts(f1_counts(pred, gt, 0.10));
    r.f1_25 = f1_from_counts(f1_counts(pred, gt, 0.25));
    r.f1_50 = f1_from_counts(f1_counts(pred, gt, 0.50));
    return r;
}

std::string report_json(const EvalReport& r) {
    nlohmann::json j{
        {"acc", r.acc},
        {"edit", r.edit},
        {"f1@10", r.f1_10},
        {"f1@25", r.f1_25},
        {"f1@50", r.f1_50},
    };
    return j.dump() + "\n";
}

void DatasetEval::add(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size()) {
        throw ShapeError("DatasetEval: prediction/label length mismatch");
    }
    for (size_t i = 0; i < pred.size(); ++i) frames_correct_ += pred[i] == gt[i];
    frames_total_ += static_cast<int64_t>(pred.size());
    edit_sum_ += edit_score(pred, gt);
    ++n_seq_;
    auto pool = [&](F1Counts& acc, double thr) {
        const F1Counts c = f1_counts(pred, gt, thr);
        acc.tp += c.tp;
        acc.fp += c.fp;
        acc.n_gt += c.n_gt;
    };
    pool(c10_, 0.10);
    pool(c25_, 0.25);
    pool(c50_, 0.50);
}

EvalReport DatasetEval::report() const {
    if (n_seq_ == 0) throw DataError("DatasetEval: no sequences were added");
    EvalReport r;
    r.acc = 100.0 * static_cast<double>(frames_correct_) / static_cast<double>(frames_total_);
    r.edit = edit_sum_ / n_seq_;
    r.f1_10 = f1_from_counts(c10_);
    r.f1_25 = f1_from_counts(c25_);
    r.f1_50 = f1_from_counts(c50_);
    return r;
}

} // namespace dest
