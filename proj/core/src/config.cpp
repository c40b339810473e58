#include "dest/config.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dest/errors.hpp"

namespace dest {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config section '" + where + "' must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown config key '" + where + "." + it.key() + "'");
        }
    }
}

template <class T>
void pick(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

json model_to_json(const DestConfig& m) {
    return json{
        {"V", m.V},
        {"C_in", m.C_in},
        {"C_o", m.C_o},
        {"K", m.K},
        {"M", m.M},
        {"C_mid", m.C_mid},
        {"C_s", m.C_s},
        {"C_t", m.C_t},
        {"C_f", m.C_f},
        {"L_y", m.L_y},
        {"L_c", m.L_c},
        {"beta", m.beta},
        {"symmetric_norm", m.symmetric_norm},
        {"transform_mode", m.transform_mode},
        {"temporal_variant", m.temporal_variant},
        {"normalized_attention", m.normalized_attention},
        {"interaction_mode", m.interaction_mode},
        {"jwtm_baseline", m.jwtm_baseline},
        {"tau", m.tau},
        {"asb_stages", m.asb_stages},
        {"brb_stages", m.brb_stages},
        {"stage_layers", m.stage_layers},
        {"stage_channels", m.stage_channels},
        {"boundary_threshold", m.boundary_threshold},
    };
}

void model_from_json(const json& j, DestConfig& m) {
    reject_unknown(j, {"V", "C_in", "C_o", "K", "M", "C_mid", "C_s", "C_t", "C_f", "L_y", "L_c",
                       "beta", "symmetric_norm", "transform_mode", "temporal_variant",
                       "normalized_attention", "interaction_mode", "jwtm_baseline", "tau",
                       "asb_stages", "brb_stages", "stage_layers", "stage_channels",
                       "boundary_threshold"},
                   "model");
    pick(j, "V", m.V);
    pick(j, "C_in", m.C_in);
    pick(j, "C_o", m.C_o);
    pick(j, "K", m.K);
    pick(j, "M", m.M);
    pick(j, "C_mid", m.C_mid);
    pick(j, "C_s", m.C_s);
    pick(j, "C_t", m.C_t);
    pick(j, "C_f", m.C_f);
    pick(j, "L_y", m.L_y);
    pick(j, "L_c", m.L_c);
    pick(j, "beta", m.beta);
    pick(j, "symmetric_norm", m.symmetric_norm);
    pick(j, "transform_mode", m.transform_mode);
    pick(j, "temporal_variant", m.temporal_variant);
    pick(j, "normalized_attention", m.normalized_attention);
    pick(j, "interaction_mode", m.interaction_mode);
    pick(j, "jwtm_baseline", m.jwtm_baseline);
    pick(j, "tau", m.tau);
    pick(j, "asb_stages", m.asb_stages);
    pick(j, "brb_stages", m.brb_stages);
    pick(j, "stage_layers", m.stage_layers);
    pick(j, "stage_channels", m.stage_channels);
    pick(j, "boundary_threshold", m.boundary_threshold);
}

} // namespace

void RunConfig::validate(std::ostream* warn, bool for_forward) {
    auto& m = model;
    if (m.V < 0 || m.C_in < 0 || m.C_o < 0) throw ConfigError("V/C_in/C_o must be >= 0");
    if (m.K < 1) throw ConfigError("K must be >= 1");
    if (m.M < 2) throw ConfigError("M must be >= 2");
    if (m.C_s < 1 || m.C_s % m.M != 0) {
        throw ConfigError("C_s (" + std::to_string(m.C_s) + ") must be positive and divisible by M (" +
                          std::to_string(m.M) + ")");
    }
    if (m.C_mid < 1) throw ConfigError("C_mid must be >= 1");
    if (m.C_t < 1) throw ConfigError("C_t must be >= 1");
    if (m.C_f < 1 || m.C_f % 2 == 0) throw ConfigError("C_f must be odd and >= 1");
    if (m.L_y < 0 || (for_forward && m.L_y < 1)) throw ConfigError("L_y must be >= 1");
    if (m.L_c < 0) throw ConfigError("L_c must be >= 0");
    const int max_lc = m.L_y > 0 ? m.L_y - 1 : 0;
    if (m.L_c > max_lc) {
        if (warn) {
            *warn << "warning: L_c=" << m.L_c << " exceeds L_y-1=" << max_lc
                  << ", clamping to " << max_lc << "\n";
        }
        m.L_c = max_lc;
    }
    if (m.beta <= 0.0) throw ConfigError("beta must be > 0");
    if (m.transform_mode != "convolution" && m.transform_mode != "avgpool" &&
        m.transform_mode != "maxpool") {
        throw ConfigError("transform_mode must be convolution|avgpool|maxpool, got '" +
                          m.transform_mode + "'");
    }
    if (m.temporal_variant != "tcn" && m.temporal_variant != "linear_transformer") {
        throw ConfigError("temporal_variant must be tcn|linear_transformer, got '" +
                          m.temporal_variant + "'");
    }
    if (m.interaction_mode != "cross_attention" && m.interaction_mode != "summation") {
        throw ConfigError("interaction_mode must be cross_attention|summation, got '" +
                          m.interaction_mode + "'");
    }
    if (m.tau < 0.0) throw ConfigError("tau must be >= 0 (0 selects sqrt(T))");
    if (m.asb_stages < 0 || m.brb_stages < 0) throw ConfigError("stage counts must be >= 0");
    if ((m.asb_stages > 0 || m.brb_stages > 0) && m.stage_layers < 1) {
        throw ConfigError("stage_layers must be >= 1 when refinement stages exist");
    }
    if (m.stage_layers < 0) throw ConfigError("stage_layers must be >= 0");
    if (m.stage_channels < 1) throw ConfigError("stage_channels must be >= 1");
    if (m.boundary_threshold <= 0.0 || m.boundary_threshold >= 1.0) {
        throw ConfigError("boundary_threshold must lie in (0, 1)");
    }

    if (loss.gamma < 0.0) throw ConfigError("gamma must be >= 0");
    if (loss.gs_sigma <= 0.0) throw ConfigError("gs_sigma must be > 0");
    if (loss.gs_trunc <= 0.0) throw ConfigError("gs_trunc must be > 0");
    if (loss.similarity_source != "input" && loss.similarity_source != "stage") {
        throw ConfigError("similarity_source must be input|stage, got '" + loss.similarity_source + "'");
    }

    if (optim.lr <= 0.0) throw ConfigError("lr must be > 0");
    if (optim.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (optim.batch_size < 1) throw ConfigError("batch_size must be >= 1");

    if (data.stride < 1) throw ConfigError("stride must be >= 1");
}

std::string RunConfig::to_json_text() const {
    json j;
    j["model"] = model_to_json(model);
    j["loss"] = json{
        {"gamma", loss.gamma},
        {"gs_sigma", loss.gs_sigma},
        {"gs_trunc", loss.gs_trunc},
        {"similarity_source", loss.similarity_source},
    };
    j["optim"] = json{
        {"lr", optim.lr},
        {"epochs", optim.epochs},
        {"batch_size", optim.batch_size},
    };
    j["data"] = json{
        {"normalize", data.normalize},
        {"stride", data.stride},
    };
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"model", "loss", "optim", "data", "seed"}, "<root>");
    RunConfig cfg;
    if (j.contains("model")) model_from_json(j.at("model"), cfg.model);
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        reject_unknown(l, {"gamma", "gs_sigma", "gs_trunc", "similarity_source"}, "loss");
        pick(l, "gamma", cfg.loss.gamma);
        pick(l, "gs_sigma", cfg.loss.gs_sigma);
        pick(l, "gs_trunc", cfg.loss.gs_trunc);
        pick(l, "similarity_source", cfg.loss.similarity_source);
    }
    if (j.contains("optim")) {
        const json& o = j.at("optim");
        reject_unknown(o, {"lr", "epochs", "batch_size"}, "optim");
        pick(o, "lr", cfg.optim.lr);
        pick(o, "epochs", cfg.optim.epochs);
        pick(o, "batch_size", cfg.optim.batch_size);
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        reject_unknown(d, {"normalize", "stride"}, "data");
        pick(d, "normalize", cfg.data.normalize);
        pick(d, "stride", cfg.data.stride);
    }
    pick(j, "seed", cfg.seed);
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void RunConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config file: " + path);
    out << to_json_text();
    if (!out) throw IoError("failed while writing config file: " + path);
}

OptimConfig optim_preset(const std::string& name) {
    if (name == "small") return OptimConfig{0.0005, 300, 1};
    if (name == "batched") return OptimConfig{0.001, 150, 8};
    throw ConfigError("unknown optimizer preset '" + name + "' (expected small|batched)");
}

} // namespace dest
