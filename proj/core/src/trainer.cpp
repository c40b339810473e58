#include "dest/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "dest/adam.hpp"
#include "dest/checkpoint.hpp"
#include "dest/loss.hpp"
#include "dest/ops.hpp"
#include "json.hpp"

namespace dest {
namespace {

// Similarity features for the smoothing loss: the raw input flattened to one
// column per frame ([C*V x T]).
Tensor flatten_input(const Tensor& x) {
    const int C = x.dim(0), T = x.dim(1), V = x.dim(2);
    std::vector<double> out(static_cast<size_t>(C) * V * T);
    const double* d = x.data();
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t)
            for (int v = 0; v < V; ++v)
                out[(static_cast<size_t>(c) * V + v) * T + t] =
                    d[(static_cast<size_t>(c) * T + t) * V + v];
    return Tensor::from_data({C * V, T}, std::move(out));
}

} // namespace

DestConfig resolve_config(const DestConfig& cfg, const SkeletonTopology& topo,
                          const std::vector<SequenceSample>& samples) {
    DestConfig r = cfg;
    if (r.V == 0) r.V = topo.V;
    if (r.V != topo.V)
        throw ConfigError("config V=" + std::to_string(r.V) + " but topology has " +
                          std::to_string(topo.V) + " joints");
    if (samples.empty()) throw DataError("no sequences to resolve the config against");
    int max_label = -1;
    for (const auto& s : samples) {
        if (s.joints() != r.V)
            throw DataError("sequence " + s.id + " has " + std::to_string(s.joints()) +
                            " joints, topology has " + std::to_string(r.V));
        if (r.C_in == 0) r.C_in = s.channels();
        if (s.channels() != r.C_in)
            throw DataError("sequence " + s.id + " has " + std::to_string(s.channels()) +
                            " channels, expected " + std::to_string(r.C_in));
        for (int lab : s.labels) max_label = std::max(max_label, lab);
    }
    if (r.C_o == 0) r.C_o = max_label + 1;
    if (max_label >= r.C_o)
        throw DataError("label " + std::to_string(max_label) + " exceeds class count " +
                        std::to_string(r.C_o));
    return r;
}

std::string epoch_record_json(const EpochRecord& r) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["loss"] = r.loss;
    j["acc"] = r.metrics.acc;
    j["edit"] = r.metrics.edit;
    j["f1@10"] = r.metrics.f1_10;
    j["f1@25"] = r.metrics.f1_25;
    j["f1@50"] = r.metrics.f1_50;
    return j.dump();
}

TrainResult train(const RunConfig& run_in, const SkeletonTopology& topo,
                  const std::vector<SequenceSample>& data, const TrainOptions& opt) {
    RunConfig run = run_in;
    run.validate(nullptr, true);
    run.model = resolve_config(run.model, topo, data);
    if (run.optim.batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (run.optim.epochs < 1) throw ConfigError("epoch count must be >= 1");

    SkeletonGraph graph = SkeletonGraph::build(topo, run.model.K, run.model.beta,
                                               run.model.symmetric_norm);
    DestModel model(run.model, std::move(graph), run.seed);
    Adam adam(model.parameters(), AdamConfig{run.optim.lr});

    // Precompute per-sequence constants once.
    std::vector<Tensor> features;
    std::vector<BoundaryTarget> targets;
    features.reserve(data.size());
    targets.reserve(data.size());
    const bool need_features = run.loss.similarity_source == "input";
    for (const auto& s : data) {
        features.push_back(need_features ? flatten_input(s.coords) : Tensor());
        targets.push_back(derive_boundaries(s.labels));
    }

    std::mt19937_64 order_rng(run.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    const std::string ckpt_path =
        opt.out_dir.empty()
            ? std::string()
            : (std::filesystem::path(opt.out_dir) / "checkpoint.destckpt").string();
    if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);

    auto save = [&]() {
        if (!ckpt_path.empty()) {
            save_checkpoint(ckpt_path, run, topo, model);
            result.checkpoint_path = ckpt_path;
        }
    };

    for (int epoch = 1; epoch <= run.optim.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        DatasetEval eval;
        double loss_sum = 0.0;
        bool finite = true;

        size_t i = 0;
        while (i < order.size() && finite) {
            adam.zero_grad();
            const size_t batch_end = std::min(order.size(), i + run.optim.batch_size);
            for (; i < batch_end; ++i) {
                const SequenceSample& s = data[order[i]];
                ModelForward out = model.forward(s.coords);
                // Composite objective over every stage output; boundary targets
                // were derived from the labels up front.
                Tensor total = Tensor::scalar(0.0);
                for (const auto& y : out.y_cls) {
                    const Tensor& f = need_features ? features[order[i]] : y;
                    total = add(total, add(ce_loss(y, s.labels),
                                           gs_tmse_loss(y, f, run.loss.gs_sigma,
                                                        run.loss.gs_trunc)));
                }
                Tensor bnd = Tensor::scalar(0.0);
                for (const auto& y : out.y_bnd) bnd = add(bnd, brb_loss(y, targets[order[i]]));
                total = add(total, scale(bnd, run.loss.gamma));

                const double lv = total.item();
                if (!std::isfinite(lv)) {
                    finite = false;
                    break;
                }
                loss_sum += lv;
                total.backward();
                eval.add(argmax_labels(out.y_cls.back()), s.labels);
            }
            if (finite) adam.step();
        }

        if (!finite) {
            result.diverged = true;
            if (opt.progress) *opt.progress << "epoch " << epoch << ": non-finite loss, stopping\n";
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / data.size();
        rec.metrics = eval.report();
        result.epochs.push_back(rec);
        if (opt.log) *opt.log << epoch_record_json(rec) << "\n" << std::flush;
        if (opt.progress)
            *opt.progress << "epoch " << epoch << " loss " << rec.loss << " acc "
                          << rec.metrics.acc << "\n";

        if (opt.save_every > 0 && epoch % opt.save_every == 0) save();
        const bool want_stop = opt.stop_at_acc > 0.0 || opt.stop_at_f1 > 0.0;
        const bool acc_ok = opt.stop_at_acc <= 0.0 || rec.metrics.acc >= opt.stop_at_acc;
        const bool f1_ok = opt.stop_at_f1 <= 0.0 || rec.metrics.f1_50 >= opt.stop_at_f1;
        if (want_stop && acc_ok && f1_ok) break;
    }

    save();
    return result;
}

EvalReport evaluate_model(const DestModel& model, const std::vector<SequenceSample>& samples,
                          const EvalOptions& opt) {
    if (samples.empty()) throw DataError("evaluation needs at least one sequence");
    const DestConfig& cfg = model.config();

    struct PerSeq {
        std::vector<int> pred;
        std::vector<Tensor> attn;
    };
    std::vector<PerSeq> results(samples.size());

    int threads = opt.threads > 0 ? opt.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(samples.size())));

    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto worker = [&]() {
        NoGradGuard ng;
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            try {
                ModelForward out = model.forward(samples[i].coords);
                results[i].pred =
                    opt.refine
                        ? refine_with_boundaries(out.y_cls.back(), out.y_bnd.back(),
                                                 cfg.boundary_threshold)
                        : argmax_labels(out.y_cls.back());
                if (!opt.attention_dir.empty()) results[i].attn = std::move(out.attn);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    if (!opt.attention_dir.empty()) {
        std::filesystem::create_directories(opt.attention_dir);
        for (size_t i = 0; i < samples.size(); ++i)
            for (size_t l = 0; l < results[i].attn.size(); ++l)
                export_attention(results[i].attn[l],
                                 (std::filesystem::path(opt.attention_dir) /
                                  ("attn_L" + std::to_string(l + 1) + "_" + samples[i].id + ".txt"))
                                     .string());
    }

    DatasetEval eval;
    for (size_t i = 0; i < samples.size(); ++i) eval.add(results[i].pred, samples[i].labels);
    return eval.report();
}

} // namespace dest
