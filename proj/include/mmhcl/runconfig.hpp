#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmhcl/common.hpp"
#include "mmhcl/dataset.hpp"
#include "mmhcl/graphs.hpp"
#include "mmhcl/model.hpp"
#include "mmhcl/serialize.hpp"

namespace mmhcl {

using Json = nlohmann::json;

// Where interactions and item features come from: files, or the built-in
// synthetic generator.
struct DataConfig {
    std::string interactions_path;
    std::vector<std::pair<ModalityTag, std::string>> feature_paths;
    bool synthetic = false;
    std::size_t synth_users = 200;
    std::size_t synth_items = 120;
    std::size_t synth_blocks = 4;
    double synth_noise = 0.05;
};

struct RunConfig {
    std::string preset;
    DataConfig data;
    std::string output_dir = "runs/default";
    SplitMode split_mode = SplitMode::global;
    ModelConfig model;
    // Sweep axes: model field name -> candidate values, all numeric.
    std::map<std::string, std::vector<double>> sweep;
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                                const std::string& scope) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const auto& key : allowed) ok = ok || key == item.key();
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + scope);
    }
}

template <typename T>
T get_size(const Json& j, const std::string& key) {
    if (!j.at(key).is_number_integer() && !j.at(key).is_number_unsigned())
        throw ConfigError(key + " must be an integer");
    const auto v = j.at(key).get<std::int64_t>();
    if (v < 0) throw ConfigError(key + " must be nonnegative");
    return static_cast<T>(v);
}

inline double get_number(const Json& j, const std::string& key) {
    if (!j.at(key).is_number()) throw ConfigError(key + " must be a number");
    return j.at(key).get<double>();
}

inline bool get_bool(const Json& j, const std::string& key) {
    if (!j.at(key).is_boolean()) throw ConfigError(key + " must be a boolean");
    return j.at(key).get<bool>();
}

inline std::string get_string(const Json& j, const std::string& key) {
    if (!j.at(key).is_string()) throw ConfigError(key + " must be a string");
    return j.at(key).get<std::string>();
}

}  // namespace detail

// Hyperparameter bundles selectable by name. Dataset presets carry the
// published operating points; "synthetic" is sized for the generator's
// default corpus and trains in seconds on a CPU.
inline ModelConfig preset_model_config(const std::string& name) {
    ModelConfig m;
    if (name == "tiktok") {
        m.embed_dim = 64;
        m.learning_rate = 1e-4;
        m.batch_size = 1024;
        m.knn_k = 5;
        m.alpha = 0.03;
        m.beta = 0.07;
        m.tau = 0.6;
        m.lambda = 1e-3;
        m.layers_u2u = 3;
        m.layers_i2i = 2;
        m.layers_backbone = 2;
        m.max_epochs = 250;
        m.patience = 5;
    } else if (name == "clothing") {
        m.embed_dim = 64;
        m.learning_rate = 1e-4;
        m.batch_size = 1024;
        m.knn_k = 10;
        m.alpha = 0.1;
        m.beta = 0.7;
        m.tau = 0.4;
        m.lambda = 1e-3;
        m.layers_u2u = 2;
        m.layers_i2i = 2;
        m.layers_backbone = 2;
        m.max_epochs = 250;
        m.patience = 5;
    } else if (name == "sports") {
        m.embed_dim = 64;
        m.learning_rate = 1e-4;
        m.batch_size = 1024;
        m.knn_k = 5;
        m.alpha = 0.3;
        m.beta = 0.7;
        m.tau = 0.5;
        m.lambda = 1e-5;
        m.layers_u2u = 2;
        m.layers_i2i = 2;
        m.layers_backbone = 2;
        m.max_epochs = 250;
        m.patience = 5;
    } else if (name == "synthetic") {
        m.embed_dim = 32;
        m.learning_rate = 5e-3;
        m.batch_size = 256;
        m.knn_k = 5;
        m.alpha = 0.1;
        m.beta = 0.3;
        m.tau = 0.5;
        m.lambda = 1e-4;
        m.layers_u2u = 2;
        m.layers_i2i = 2;
        m.layers_backbone = 2;
        m.max_epochs = 40;
        m.patience = 8;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return m;
}

inline ModelConfig model_config_from_json(const Json& j, ModelConfig base) {
    detail::reject_unknown_keys(
        j,
        {"embed_dim", "layers_u2u", "layers_i2i", "layers_backbone", "knn_k", "alpha", "beta",
         "tau", "lambda", "learning_rate", "batch_size", "max_epochs", "patience", "seed",
         "use_u2u", "use_i2i", "use_scl", "hgnn_style", "contrast_scope"},
        "model");
    if (j.contains("embed_dim")) base.embed_dim = detail::get_size<std::size_t>(j, "embed_dim");
    if (j.contains("layers_u2u")) base.layers_u2u = detail::get_size<std::size_t>(j, "layers_u2u");
    if (j.contains("layers_i2i")) base.layers_i2i = detail::get_size<std::size_t>(j, "layers_i2i");
    if (j.contains("layers_backbone"))
        base.layers_backbone = detail::get_size<std::size_t>(j, "layers_backbone");
    if (j.contains("knn_k")) base.knn_k = detail::get_size<std::size_t>(j, "knn_k");
    if (j.contains("alpha")) base.alpha = detail::get_number(j, "alpha");
    if (j.contains("beta")) base.beta = detail::get_number(j, "beta");
    if (j.contains("tau")) base.tau = detail::get_number(j, "tau");
    if (j.contains("lambda")) base.lambda = detail::get_number(j, "lambda");
    if (j.contains("learning_rate")) base.learning_rate = detail::get_number(j, "learning_rate");
    if (j.contains("batch_size")) base.batch_size = detail::get_size<std::size_t>(j, "batch_size");
    if (j.contains("max_epochs")) base.max_epochs = detail::get_size<std::size_t>(j, "max_epochs");
    if (j.contains("patience")) base.patience = detail::get_size<std::size_t>(j, "patience");
    if (j.contains("seed")) base.seed = detail::get_size<std::uint64_t>(j, "seed");
    if (j.contains("use_u2u")) base.use_u2u = detail::get_bool(j, "use_u2u");
    if (j.contains("use_i2i")) base.use_i2i = detail::get_bool(j, "use_i2i");
    if (j.contains("use_scl")) base.use_scl = detail::get_bool(j, "use_scl");
    if (j.contains("hgnn_style")) base.hgnn_style = detail::get_bool(j, "hgnn_style");
    if (j.contains("contrast_scope"))
        base.contrast_scope = contrast_scope_from_string(detail::get_string(j, "contrast_scope"));
    return base;
}

inline Json model_config_to_json(const ModelConfig& m) {
    Json j;
    j["embed_dim"] = m.embed_dim;
    j["layers_u2u"] = m.layers_u2u;
    j["layers_i2i"] = m.layers_i2i;
    j["layers_backbone"] = m.layers_backbone;
    j["knn_k"] = m.knn_k;
    j["alpha"] = m.alpha;
    j["beta"] = m.beta;
    j["tau"] = m.tau;
    j["lambda"] = m.lambda;
    j["learning_rate"] = m.learning_rate;
    j["batch_size"] = m.batch_size;
    j["max_epochs"] = m.max_epochs;
    j["patience"] = m.patience;
    j["seed"] = m.seed;
    j["use_u2u"] = m.use_u2u;
    j["use_i2i"] = m.use_i2i;
    j["use_scl"] = m.use_scl;
    j["hgnn_style"] = m.hgnn_style;
    j["contrast_scope"] = to_string(m.contrast_scope);
    return j;
}

inline DataConfig data_config_from_json(const Json& j) {
    detail::reject_unknown_keys(j, {"interactions", "features", "synthetic"}, "data");
    DataConfig d;
    if (j.contains("interactions")) d.interactions_path = detail::get_string(j, "interactions");
    if (j.contains("features")) {
        const Json& f = j.at("features");
        if (!f.is_object()) throw ConfigError("data.features must be an object");
        detail::reject_unknown_keys(f, {"visual", "acoustic", "textual"}, "data.features");
        for (const char* tag : {"visual", "acoustic", "textual"})
            if (f.contains(tag))
                d.feature_paths.emplace_back(modality_tag_from_string(tag),
                                             detail::get_string(f, tag));
    }
    if (j.contains("synthetic")) {
        const Json& s = j.at("synthetic");
        if (!s.is_object()) throw ConfigError("data.synthetic must be an object");
        detail::reject_unknown_keys(s, {"users", "items", "blocks", "noise"}, "data.synthetic");
        d.synthetic = true;
        if (s.contains("users")) d.synth_users = detail::get_size<std::size_t>(s, "users");
        if (s.contains("items")) d.synth_items = detail::get_size<std::size_t>(s, "items");
        if (s.contains("blocks")) d.synth_blocks = detail::get_size<std::size_t>(s, "blocks");
        if (s.contains("noise")) d.synth_noise = detail::get_number(s, "noise");
    }
    return d;
}

// Precedence, lowest to highest: struct defaults, preset values, explicit
// "model" keys. CLI flag overrides are applied by the caller afterwards.
inline RunConfig parse_run_config(const Json& j,
                                  const std::optional<std::string>& preset_override = std::nullopt) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    detail::reject_unknown_keys(j, {"preset", "data", "output_dir", "split_mode", "model", "sweep"},
                                "config root");
    RunConfig rc;
    if (j.contains("preset")) rc.preset = detail::get_string(j, "preset");
    if (preset_override) rc.preset = *preset_override;
    if (!rc.preset.empty()) {
        rc.model = preset_model_config(rc.preset);
        if (rc.preset == "synthetic") rc.data.synthetic = true;
    }
    if (j.contains("data")) {
        const DataConfig file_data = data_config_from_json(j.at("data"));
        if (file_data.synthetic || !file_data.interactions_path.empty()) {
            rc.data = file_data;
        } else if (!file_data.feature_paths.empty()) {
            throw ConfigError("data.features requires data.interactions");
        }
        // An empty data object keeps whatever the preset implies.
    }
    if (j.contains("output_dir")) rc.output_dir = detail::get_string(j, "output_dir");
    if (j.contains("split_mode"))
        rc.split_mode = split_mode_from_string(detail::get_string(j, "split_mode"));
    if (j.contains("model")) rc.model = model_config_from_json(j.at("model"), rc.model);
    if (j.contains("sweep")) {
        const Json& s = j.at("sweep");
        if (!s.is_object()) throw ConfigError("sweep must be an object");
        for (const auto& item : s.items()) {
            if (!item.value().is_array() || item.value().empty())
                throw ConfigError("sweep." + item.key() + " must be a nonempty array");
            std::vector<double> vals;
            for (const auto& v : item.value()) {
                if (!v.is_number()) throw ConfigError("sweep." + item.key() + " must be numeric");
                vals.push_back(v.get<double>());
            }
            rc.sweep[item.key()] = vals;
        }
    }
    if (!rc.data.synthetic && rc.data.interactions_path.empty())
        throw ConfigError("config needs data.interactions or a synthetic data source");
    if (!rc.data.synthetic && rc.data.feature_paths.empty())
        throw ConfigError("config needs at least one modality under data.features");
    rc.model.validate();
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path,
                                 const std::optional<std::string>& preset_override = std::nullopt) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    Json j;
    try {
        j = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, preset_override);
}

// Canonical form of the effective configuration. output_dir and the sweep
// grid are excluded: they change where results land, not what is computed.
inline Json effective_config_json(const RunConfig& rc) {
    Json j;
    j["preset"] = rc.preset;
    Json d;
    d["interactions"] = rc.data.interactions_path;
    Json f = Json::object();
    for (const auto& [tag, path] : rc.data.feature_paths) f[to_string(tag)] = path;
    d["features"] = f;
    d["synthetic"] = rc.data.synthetic;
    if (rc.data.synthetic) {
        d["synthetic_users"] = rc.data.synth_users;
        d["synthetic_items"] = rc.data.synth_items;
        d["synthetic_blocks"] = rc.data.synth_blocks;
        d["synthetic_noise"] = rc.data.synth_noise;
    }
    j["data"] = d;
    j["split_mode"] = to_string(rc.split_mode);
    j["model"] = model_config_to_json(rc.model);
    return j;
}

inline std::string config_digest(const RunConfig& rc) {
    return hex64(fnv1a_bytes(effective_config_json(rc).dump()));
}

// The subset of configuration that determines the prepared artifacts
// (split and graph operators). Training-only knobs stay out, so a train or
// evaluate run with different loss weights still matches its prepare run.
inline Json graph_scope_json(const RunConfig& rc) {
    const Json full = effective_config_json(rc);
    Json j;
    j["data"] = full.at("data");
    j["split_mode"] = full.at("split_mode");
    j["seed"] = rc.model.seed;
    j["knn_k"] = rc.model.knn_k;
    j["hgnn_style"] = rc.model.hgnn_style;
    return j;
}

inline std::string graph_digest(const RunConfig& rc) {
    return hex64(fnv1a_bytes(graph_scope_json(rc).dump()));
}

}  // namespace mmhcl
