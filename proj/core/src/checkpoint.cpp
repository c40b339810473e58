#include "dest/checkpoint.hpp"

#include <string>
#include <utility>

#include "json.hpp"
#include "wire.hpp"

using nlohmann::json;

namespace dest {
namespace {

constexpr char kCkptMagic[] = "DESTCKPT";
constexpr uint32_t kCkptVersion = 1;

std::string config_block(const RunConfig& run, const SkeletonTopology& topo) {
    json j;
    j["run"] = json::parse(run.to_json_text());
    json edges = json::array();
    for (const auto& [a, b] : topo.edges) edges.push_back({a, b});
    j["topology"] = {{"V", topo.V}, {"edges", edges}};
    return j.dump(2) + "\n";
}

} // namespace

void save_checkpoint(const std::string& path, const RunConfig& run,
                     const SkeletonTopology& topo, const DestModel& model) {
    std::string b;
    b.append(kCkptMagic, 8);
    wire::put_u32(b, kCkptVersion);
    const std::string cfg = config_block(run, topo);
    wire::put_u32(b, static_cast<uint32_t>(cfg.size()));
    b += cfg;
    const auto& params = model.named_parameters();
    wire::put_u32(b, static_cast<uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        wire::put_u32(b, static_cast<uint32_t>(name.size()));
        b += name;
        wire::put_u32(b, static_cast<uint32_t>(t.rank()));
        for (int a = 0; a < t.rank(); ++a) wire::put_u32(b, static_cast<uint32_t>(t.dim(a)));
        const double* d = t.data();
        for (int64_t i = 0; i < t.numel(); ++i) wire::put_f64(b, d[i]);
    }
    wire::write_file(path, b);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    wire::Reader r = wire::Reader::from_file(path);
    if (r.raw(8) != std::string(kCkptMagic, 8))
        throw DataError(path + ": not a checkpoint (bad magic)");
    const uint32_t version = r.u32();
    if (version != kCkptVersion)
        throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));

    const uint32_t cfg_len = r.u32();
    json j;
    try {
        j = json::parse(r.raw(cfg_len));
    } catch (const json::parse_error& e) {
        throw DataError(path + ": config block: " + e.what());
    }
    if (!j.contains("run") || !j.contains("topology"))
        throw DataError(path + ": config block missing run/topology");

    RunConfig run = RunConfig::from_json_text(j["run"].dump());
    run.validate(nullptr, true);
    SkeletonTopology topo;
    topo.V = j["topology"].at("V").get<int>();
    for (const auto& e : j["topology"].at("edges"))
        topo.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());

    SkeletonGraph graph = SkeletonGraph::build(topo, run.model.K, run.model.beta,
                                               run.model.symmetric_norm);
    DestModel model(run.model, std::move(graph), run.seed);

    const uint32_t n_params = r.u32();
    const auto& params = model.named_parameters();
    if (n_params != params.size())
        throw DataError(path + ": holds " + std::to_string(n_params) + " parameters, config implies " +
                        std::to_string(params.size()));
    for (const auto& [name, t] : params) {
        const uint32_t name_len = r.u32();
        const std::string stored = r.raw(name_len);
        if (stored != name)
            throw DataError(path + ": parameter order mismatch, found '" + stored +
                            "' where '" + name + "' belongs");
        const uint32_t rank = r.u32();
        if (static_cast<int>(rank) != t.rank())
            throw DataError(path + ": " + name + " has rank " + std::to_string(rank) +
                            ", expected " + std::to_string(t.rank()));
        for (int a = 0; a < t.rank(); ++a) {
            const uint32_t extent = r.u32();
            if (static_cast<int>(extent) != t.dim(a))
                throw DataError(path + ": " + name + " axis " + std::to_string(a) + " has extent " +
                                std::to_string(extent) + ", expected " + std::to_string(t.dim(a)));
        }
        Tensor dst = t;   // shared handle, mutable view of the same node
        double* d = dst.data();
        for (int64_t i = 0; i < t.numel(); ++i) d[i] = r.f64();
    }
    if (!r.exhausted())
        throw DataError(path + ": " + std::to_string(r.remaining()) + " trailing bytes");
    return LoadedCheckpoint{std::move(run), std::move(topo), std::move(model)};
}

} // namespace dest
