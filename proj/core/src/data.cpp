#include "dest/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "json.hpp"
#include "wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dest {
namespace {

constexpr char kSeqMagic[] = "DESTSEQ1";
constexpr int64_t kMaxSeqElements = int64_t(1) << 31;   // ~2G doubles, sanity cap

void check_sample(const SequenceSample& s, const std::string& origin) {
    if (!s.coords.defined() || s.coords.rank() != 3)
        throw DataError(origin + ": coords must be [C x T x V]");
    const int T = s.coords.dim(1);
    if (static_cast<int>(s.labels.size()) != T)
        throw DataError(origin + ": " + std::to_string(s.labels.size()) + " labels for " +
                        std::to_string(T) + " frames");
    const double* d = s.coords.data();
    for (int64_t i = 0; i < s.coords.numel(); ++i)
        if (!std::isfinite(d[i]))
            throw DataError(origin + ": non-finite coordinate at flat index " + std::to_string(i));
    for (int t = 0; t < T; ++t)
        if (s.labels[t] < 0)
            throw DataError(origin + ": negative class id at frame " + std::to_string(t));
}

} // namespace

void save_sequence(const SequenceSample& s, const std::string& path) {
    check_sample(s, s.id.empty() ? path : s.id);
    std::string b;
    b.reserve(16 + static_cast<size_t>(s.coords.numel()) * 8 + s.labels.size() * 4);
    b.append(kSeqMagic, 8);
    wire::put_u32(b, static_cast<uint32_t>(s.channels()));
    wire::put_u32(b, static_cast<uint32_t>(s.frames()));
    wire::put_u32(b, static_cast<uint32_t>(s.joints()));
    const double* d = s.coords.data();
    for (int64_t i = 0; i < s.coords.numel(); ++i) wire::put_f64(b, d[i]);
    for (int lab : s.labels) wire::put_u32(b, static_cast<uint32_t>(lab));
    wire::write_file(path, b);
}

SequenceSample load_sequence(const std::string& path, const std::string& id) {
    wire::Reader r = wire::Reader::from_file(path);
    if (r.raw(8) != std::string(kSeqMagic, 8))
        throw DataError(path + ": not a sequence file (bad magic)");
    const int64_t C = r.u32(), T = r.u32(), V = r.u32();
    if (C < 1 || T < 1 || V < 1)
        throw DataError(path + ": degenerate dimensions " + std::to_string(C) + "x" +
                        std::to_string(T) + "x" + std::to_string(V));
    if (C * T * V > kMaxSeqElements)
        throw DataError(path + ": implausibly large sequence");
    std::vector<double> coords(static_cast<size_t>(C * T * V));
    for (auto& v : coords) v = r.f64();
    SequenceSample s;
    s.id = id;
    s.coords = Tensor::from_data({static_cast<int>(C), static_cast<int>(T), static_cast<int>(V)},
                                 std::move(coords));
    s.labels.resize(static_cast<size_t>(T));
    for (auto& lab : s.labels) lab = static_cast<int>(r.u32());
    if (!r.exhausted())
        throw DataError(path + ": " + std::to_string(r.remaining()) + " trailing bytes");
    check_sample(s, path);
    return s;
}

SequenceSample apply_stride(const SequenceSample& s, int stride) {
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (stride == 1) return s;
    const int C = s.channels(), T = s.frames(), V = s.joints();
    const int T2 = (T + stride - 1) / stride;
    std::vector<double> out(static_cast<size_t>(C) * T2 * V);
    const double* d = s.coords.data();
    SequenceSample r;
    r.id = s.id;
    r.labels.resize(static_cast<size_t>(T2));
    for (int t2 = 0; t2 < T2; ++t2) {
        const int t = t2 * stride;
        r.labels[t2] = s.labels[t];
        for (int c = 0; c < C; ++c)
            for (int v = 0; v < V; ++v)
                out[(static_cast<size_t>(c) * T2 + t2) * V + v] =
                    d[(static_cast<size_t>(c) * T + t) * V + v];
    }
    r.coords = Tensor::from_data({C, T2, V}, std::move(out));
    return r;
}

SequenceSample zscore(const SequenceSample& s) {
    const int C = s.channels(), T = s.frames(), V = s.joints();
    const int64_t n = static_cast<int64_t>(T) * V;
    std::vector<double> out(static_cast<size_t>(s.coords.numel()));
    const double* d = s.coords.data();
    for (int c = 0; c < C; ++c) {
        const double* ch = d + static_cast<int64_t>(c) * n;
        double sum = 0.0;
        for (int64_t i = 0; i < n; ++i) sum += ch[i];
        const double mean = sum / n;
        double ss = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const double dev = ch[i] - mean;
            ss += dev * dev;
        }
        const double sd = std::sqrt(ss / n);
        const double denom = sd < 1e-12 ? 1.0 : sd;
        for (int64_t i = 0; i < n; ++i)
            out[static_cast<size_t>(c) * n + i] = (ch[i] - mean) / denom;
    }
    SequenceSample r;
    r.id = s.id;
    r.labels = s.labels;
    r.coords = Tensor::from_data({C, T, V}, std::move(out));
    return r;
}

std::vector<SequenceSample> load_dataset(const std::string& manifest_path,
                                         const DataConfig& cfg) {
    if (cfg.stride < 1) throw ConfigError("stride must be >= 1");
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(manifest_path + ": " + e.what());
    }
    if (!j.is_array()) throw DataError(manifest_path + ": manifest must be a JSON array");

    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<SequenceSample> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        const json& e = j[i];
        const std::string where = manifest_path + " entry " + std::to_string(i);
        if (!e.is_object() || !e.contains("id") || !e.contains("data_path"))
            throw DataError(where + ": need object with id and data_path");
        if (!e["id"].is_string() || !e["data_path"].is_string())
            throw DataError(where + ": id and data_path must be strings");
        if (e.contains("label_in_file") && e["label_in_file"] != true)
            throw DataError(where + ": external label files are not supported");
        fs::path p = e["data_path"].get<std::string>();
        if (p.is_relative()) p = base / p;
        if (!fs::exists(p)) throw DataError(where + ": missing file " + p.string());
        SequenceSample s = load_sequence(p.string(), e["id"].get<std::string>());
        if (cfg.stride > 1) s = apply_stride(s, cfg.stride);
        if (cfg.normalize) s = zscore(s);
        out.push_back(std::move(s));
    }
    return out;
}

std::string save_dataset(const std::vector<SequenceSample>& samples, const std::string& dir) {
    fs::create_directories(dir);
    json manifest = json::array();
    for (const auto& s : samples) {
        if (s.id.empty() || s.id.find('/') != std::string::npos)
            throw DataError("sample id '" + s.id + "' is not a valid file stem");
        const std::string name = s.id + ".destseq";
        save_sequence(s, (fs::path(dir) / name).string());
        manifest.push_back({{"id", s.id}, {"data_path", name}, {"label_in_file", true}});
    }
    const std::string mpath = (fs::path(dir) / "manifest.json").string();
    std::ofstream out(mpath, std::ios::trunc);
    if (!out) throw IoError("cannot open " + mpath + " for writing");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("error writing " + mpath);
    return mpath;
}

JointSpeedStats joint_speed_stats(const std::vector<SequenceSample>& samples,
                                  std::ostream* warn) {
    if (samples.empty()) throw DataError("speed statistics need at least one sequence");
    const int V = samples.front().joints();
    JointSpeedStats st;
    st.mean.assign(V, 0.0);
    st.variance.assign(V, 0.0);
    std::vector<double> sum(V, 0.0), sumsq(V, 0.0);
    int64_t n = 0;
    for (const auto& s : samples) {
        if (s.joints() != V)
            throw DataError("sequence " + s.id + " has " + std::to_string(s.joints()) +
                            " joints, expected " + std::to_string(V));
        const int C = s.channels(), T = s.frames();
        if (T < 2) {
            if (warn) *warn << "skipping " << s.id << ": too short for speed statistics\n";
            continue;
        }
        const double* d = s.coords.data();
        for (int t = 1; t < T; ++t) {
            for (int v = 0; v < V; ++v) {
                double d2 = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double dv = d[(static_cast<size_t>(c) * T + t) * V + v] -
                                      d[(static_cast<size_t>(c) * T + t - 1) * V + v];
                    d2 += dv * dv;
                }
                const double sp = std::sqrt(d2);
                sum[v] += sp;
                sumsq[v] += sp * sp;
            }
        }
        n += T - 1;
    }
    if (n == 0) throw DataError("no sequence is long enough for speed statistics");
    for (int v = 0; v < V; ++v) {
        st.mean[v] = sum[v] / n;
        st.variance[v] = std::max(0.0, sumsq[v] / n - st.mean[v] * st.mean[v]);
    }
    st.frames = n;
    return st;
}

SkeletonTopology default_skeleton() {
    SkeletonTopology t;
    t.V = 25;
    // Torso chain, two arms with hand tips/thumbs, two legs.
    t.edges = {{0, 1},  {1, 20},  {20, 2},  {2, 3},            // spine to head
               {20, 4}, {4, 5},   {5, 6},   {6, 7},   {7, 21}, {7, 22},   // left arm
               {20, 8}, {8, 9},   {9, 10},  {10, 11}, {11, 23}, {11, 24}, // right arm
               {0, 12}, {12, 13}, {13, 14}, {14, 15},           // left leg
               {0, 16}, {16, 17}, {17, 18}, {18, 19}};          // right leg
    return t;
}

SpeedProfile speed_contrast_profile(int n_classes) {
    if (n_classes < 2) throw ConfigError("speed-contrast preset needs at least 2 classes");
    const int V = 25;
    const double slow = 0.04, fast = 0.22;

    const std::vector<int> left_arm = {4, 5, 6, 7, 21, 22};
    const std::vector<int> right_arm = {8, 9, 10, 11, 23, 24};
    const std::vector<int> feet = {14, 15, 18, 19};
    const std::vector<int> legs = {12, 13, 16, 17};
    const std::vector<int> torso = {0, 1, 2, 3, 20};

    SpeedProfile p;
    p.V = V;
    p.n_classes = n_classes;
    p.freq.assign(n_classes, std::vector<double>(V, slow));
    p.amp.assign(n_classes, std::vector<double>(V, 1.0));
    p.noise_sigma = 0.05;
    p.drift_sigma = 0.01;

    // The mirror pair 0/1 is the joint-identity probe: same number of fast
    // joints, same frequencies, different side. Later classes recycle other
    // joint sets with a mild frequency bump to stay mutually separable.
    const std::vector<std::vector<int>> fast_sets = {left_arm, right_arm, legs, torso};
    for (int c = 0; c < n_classes; ++c) {
        const auto& set = fast_sets[c % fast_sets.size()];
        const double f = fast * (1.0 + 0.15 * (c / static_cast<int>(fast_sets.size())));
        for (int v : set) p.freq[c][v] = f;
        for (int v : feet) p.freq[c][v] = fast;   // feet are fast in every class
    }
    return p;
}

std::vector<SequenceSample> synthesize(const SpeedProfile& profile, int n_sequences,
                                       int T, uint64_t seed) {
    if (profile.V < 1) throw ConfigError("profile needs at least one joint");
    if (profile.n_classes < 2) throw ConfigError("synthesis needs at least 2 classes");
    if (static_cast<int>(profile.freq.size()) != profile.n_classes ||
        static_cast<int>(profile.amp.size()) != profile.n_classes)
        throw ConfigError("profile tables must have one row per class");
    for (int c = 0; c < profile.n_classes; ++c) {
        if (static_cast<int>(profile.freq[c].size()) != profile.V ||
            static_cast<int>(profile.amp[c].size()) != profile.V)
            throw ConfigError("profile tables must have one column per joint");
        for (int v = 0; v < profile.V; ++v)
            if (profile.freq[c][v] < 0.0 || profile.amp[c][v] < 0.0)
                throw ConfigError("profile speeds must be non-negative");
    }
    if (profile.min_seg < 2 || profile.max_seg < profile.min_seg)
        throw ConfigError("segment bounds must satisfy 2 <= min_seg <= max_seg");
    if (n_sequences < 1 || T < 1) throw ConfigError("need positive sequence count and length");
    if (profile.noise_sigma < 0.0 || profile.drift_sigma < 0.0)
        throw ConfigError("noise and drift sigmas must be non-negative");

    constexpr int C = 3;
    constexpr double kTwoPi = 6.283185307179586;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> seg_len(profile.min_seg, profile.max_seg);
    std::uniform_int_distribution<int> cls_pick(0, profile.n_classes - 1);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<SequenceSample> out;
    out.reserve(n_sequences);
    for (int s = 0; s < n_sequences; ++s) {
        SequenceSample seq;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "seq_%04d", s);
        seq.id = idbuf;
        seq.labels.assign(static_cast<size_t>(T), 0);
        std::vector<double> coords(static_cast<size_t>(C) * T * profile.V, 0.0);

        int pos = 0, prev_cls = -1;
        while (pos < T) {
            int len = std::min(seg_len(rng), T - pos);
            if (T - (pos + len) < profile.min_seg) len = T - pos;   // absorb a short tail
            int cls = cls_pick(rng);
            while (cls == prev_cls) cls = cls_pick(rng);
            prev_cls = cls;
            for (int t = pos; t < pos + len; ++t) seq.labels[t] = cls;

            for (int v = 0; v < profile.V; ++v) {
                const double f = profile.freq[cls][v];
                const double a = profile.amp[cls][v];
                for (int c = 0; c < C; ++c) {
                    const double ph = phase(rng);
                    const double slope = profile.drift_sigma * gauss(rng);
                    for (int t = pos; t < pos + len; ++t) {
                        const int dt = t - pos;
                        double val = a * std::sin(kTwoPi * f * dt + ph) + slope * dt +
                                     profile.noise_sigma * gauss(rng);
                        coords[(static_cast<size_t>(c) * T + t) * profile.V + v] = val;
                    }
                }
            }
            pos += len;
        }
        seq.coords = Tensor::from_data({C, T, profile.V}, std::move(coords));
        out.push_back(std::move(seq));
    }
    return out;
}

} // namespace dest
