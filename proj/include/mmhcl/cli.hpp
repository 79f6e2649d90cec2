#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmhcl/dataset.hpp"
#include "mmhcl/evaluator.hpp"
#include "mmhcl/graphs.hpp"
#include "mmhcl/runconfig.hpp"
#include "mmhcl/serialize.hpp"
#include "mmhcl/trainer.hpp"

namespace mmhcl {

namespace paths {
inline std::filesystem::path manifest(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "manifest.json"; }
inline std::filesystem::path split(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "split.json"; }
inline std::filesystem::path mappings(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "mappings.json"; }
inline std::filesystem::path graph_u2u(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "graph_u2u.bin"; }
inline std::filesystem::path graph_i2i(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "graph_i2i.bin"; }
inline std::filesystem::path graph_backbone(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "graph_backbone.bin"; }
inline std::filesystem::path checkpoint(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "checkpoint.bin"; }
inline std::filesystem::path train_report(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "train_report.json"; }
inline std::filesystem::path metrics(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "metrics.json"; }
inline std::filesystem::path sweep_csv(const RunConfig& rc) { return std::filesystem::path(rc.output_dir) / "sweep.csv"; }
}  // namespace paths

struct LoadedData {
    InteractionLog log;
    ModalityBundle bundle;
};

// Materializes the configured data source. The synthetic generator is
// seeded with the run seed, so sweeping the seed regenerates the corpus.
inline LoadedData load_data(const RunConfig& rc) {
    if (rc.data.synthetic) {
        SyntheticData s =
            generate_synthetic(rc.data.synth_users, rc.data.synth_items, rc.data.synth_blocks,
                               rc.data.synth_noise, rc.model.seed);
        return {std::move(s.log), std::move(s.features)};
    }
    LoadedData d;
    d.log = load_interactions(rc.data.interactions_path);
    for (const auto& [tag, path] : rc.data.feature_paths) {
        DenseMatrix f = load_feature_matrix(path);
        if (f.rows() != d.log.num_items)
            throw DataError("feature file " + path + " has " + std::to_string(f.rows()) +
                            " rows, expected " + std::to_string(d.log.num_items) + " items");
        d.bundle.modalities.push_back({tag, std::move(f)});
    }
    return d;
}

namespace detail {

inline void write_json_file(const std::filesystem::path& p, const Json& j) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + p.string());
    os << j.dump(2) << "\n";
    if (!os) throw IoError("write failed: " + p.string());
}

inline Json read_json_file(const std::filesystem::path& p, const char* what) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError(std::string(what) + " not found: " + p.string() + " (run prepare first?)");
    try {
        return Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string(what) + " " + p.string() + ": " + e.what());
    }
}

inline Json pairs_to_json(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    Json arr = Json::array();
    for (const auto& [u, i] : pairs) arr.push_back(Json::array({u, i}));
    return arr;
}

inline std::vector<std::pair<std::size_t, std::size_t>> pairs_from_json(const Json& arr,
                                                                        const char* what) {
    if (!arr.is_array()) throw FormatError(std::string(what) + ": expected an array of pairs");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(arr.size());
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 2) throw FormatError(std::string(what) + ": malformed pair");
        out.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    return out;
}

inline std::string file_digest(const std::filesystem::path& p) {
    return hex64(fnv1a_bytes(read_file_bytes(p)));
}

// Fixed-precision-free float formatting: shortest representation that
// round-trips, identical across runs.
inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    std::string s = os.str();
    // prefer the shorter form when it round-trips
    for (int prec = 1; prec < 17; ++prec) {
        std::ostringstream t;
        t.precision(prec);
        t << v;
        if (std::stod(t.str()) == v) return t.str();
    }
    return s;
}

}  // namespace detail

// Builds split, id mappings, and the three graph operators; writes them plus
// a manifest binding everything to the graph-scope digest of the config.
inline void run_prepare(const RunConfig& rc) {
    std::filesystem::create_directories(rc.output_dir);
    const LoadedData data = load_data(rc);
    const DataSplit split = make_split(data.log, rc.model.seed, rc.split_mode);
    const SparseCsr a_train =
        interactions_to_csr(data.log.num_users, data.log.num_items, split.train);
    const GraphSet graphs = build_graphs(a_train, data.bundle, rc.model.knn_k, rc.model.hgnn_style);

    Json split_json;
    split_json["format"] = "mmhcl-split";
    split_json["version"] = 1;
    split_json["seed"] = split.seed;
    split_json["mode"] = to_string(split.mode);
    split_json["num_users"] = data.log.num_users;
    split_json["num_items"] = data.log.num_items;
    split_json["train"] = detail::pairs_to_json(split.train);
    split_json["val"] = detail::pairs_to_json(split.val);
    split_json["test"] = detail::pairs_to_json(split.test);
    detail::write_json_file(paths::split(rc), split_json);

    Json mappings;
    mappings["format"] = "mmhcl-mappings";
    mappings["version"] = 1;
    mappings["users"] = data.log.user_ids;
    mappings["items"] = data.log.item_ids;
    detail::write_json_file(paths::mappings(rc), mappings);

    save_propagation_operator(paths::graph_u2u(rc), graphs.u2u);
    save_propagation_operator(paths::graph_i2i(rc), graphs.i2i);
    save_adjacency_operator(paths::graph_backbone(rc), graphs.backbone);

    Json manifest;
    manifest["format"] = "mmhcl-manifest";
    manifest["version"] = 1;
    manifest["graph_digest"] = graph_digest(rc);
    manifest["config_digest"] = config_digest(rc);
    manifest["config"] = effective_config_json(rc);
    Json counts;
    counts["users"] = data.log.num_users;
    counts["items"] = data.log.num_items;
    counts["interactions"] = data.log.pairs.size();
    counts["train"] = split.train.size();
    counts["val"] = split.val.size();
    counts["test"] = split.test.size();
    counts["duplicates_dropped"] = data.log.duplicates_dropped;
    manifest["counts"] = counts;
    Json files;
    for (const char* name : {"split.json", "mappings.json", "graph_u2u.bin", "graph_i2i.bin",
                             "graph_backbone.bin"})
        files[name] = detail::file_digest(std::filesystem::path(rc.output_dir) / name);
    manifest["files"] = files;
    detail::write_json_file(paths::manifest(rc), manifest);

    std::cout << "prepared " << rc.output_dir << ": " << data.log.num_users << " users, "
              << data.log.num_items << " items, " << split.train.size() << "/" << split.val.size()
              << "/" << split.test.size() << " train/val/test interactions\n";
}

struct PreparedArtifacts {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    SparseCsr train;
    std::vector<std::vector<std::size_t>> train_lists;
    std::vector<std::vector<std::size_t>> val_lists;
    std::vector<std::vector<std::size_t>> test_lists;
    GraphSet graphs;
    Json manifest;
};

// Loads everything prepare wrote, re-verifying file hashes and refusing to
// pair artifacts with a config whose graph scope differs.
inline PreparedArtifacts load_artifacts(const RunConfig& rc) {
    PreparedArtifacts art;
    art.manifest = detail::read_json_file(paths::manifest(rc), "manifest");
    const std::string want = graph_digest(rc);
    const std::string have = art.manifest.value("graph_digest", "");
    if (have != want)
        throw ConfigError("prepared artifacts in " + rc.output_dir +
                          " were built from a different configuration (graph digest " + have +
                          ", this config needs " + want + "); rerun prepare");
    for (const auto& item : art.manifest.at("files").items()) {
        const std::string actual =
            detail::file_digest(std::filesystem::path(rc.output_dir) / item.key());
        if (actual != item.value().get<std::string>())
            throw DataError("artifact " + item.key() + " does not match its manifest hash");
    }

    const Json split_json = detail::read_json_file(paths::split(rc), "split file");
    art.num_users = split_json.at("num_users").get<std::size_t>();
    art.num_items = split_json.at("num_items").get<std::size_t>();
    const auto train_pairs = detail::pairs_from_json(split_json.at("train"), "split train");
    const auto val_pairs = detail::pairs_from_json(split_json.at("val"), "split val");
    const auto test_pairs = detail::pairs_from_json(split_json.at("test"), "split test");
    art.train = interactions_to_csr(art.num_users, art.num_items, train_pairs);
    art.train_lists = interactions_to_lists(art.num_users, train_pairs);
    art.val_lists = interactions_to_lists(art.num_users, val_pairs);
    art.test_lists = interactions_to_lists(art.num_users, test_pairs);

    art.graphs.u2u = load_propagation_operator(paths::graph_u2u(rc));
    art.graphs.i2i = load_propagation_operator(paths::graph_i2i(rc));
    art.graphs.backbone = load_adjacency_operator(paths::graph_backbone(rc));
    art.graphs.num_users = art.num_users;
    art.graphs.num_items = art.num_items;
    if (art.graphs.u2u.node_count() != art.num_users ||
        art.graphs.i2i.node_count() != art.num_items ||
        art.graphs.backbone.node_count() != art.num_users + art.num_items)
        throw FormatError("graph operators disagree with the split's user/item counts");
    return art;
}

inline Json train_report_to_json(const TrainReport& r, const RunConfig& rc) {
    Json j;
    j["format"] = "mmhcl-train-report";
    j["version"] = 1;
    j["config_digest"] = config_digest(rc);
    j["graph_digest"] = graph_digest(rc);
    j["best_epoch"] = r.best_epoch;
    j["best_val_recall"] = r.best_val_recall;
    j["stop_reason"] = r.stop_reason;
    Json epochs = Json::array();
    for (const EpochStats& e : r.epochs) {
        Json ej;
        ej["epoch"] = e.epoch;
        ej["bpr"] = e.losses.bpr;
        ej["scl_user"] = e.losses.scl_user;
        ej["scl_item"] = e.losses.scl_item;
        ej["reg"] = e.losses.reg;
        ej["total"] = e.losses.total;
        ej["val_recall"] = e.val_recall;
        ej["val_ndcg"] = e.val_ndcg;
        epochs.push_back(ej);
    }
    j["epochs"] = epochs;
    return j;
}

// Trains on the prepared artifacts and writes checkpoint plus train report.
// The checkpoint embeds the effective config and the graph digest, so a
// later evaluate can verify it is paired with the same artifacts.
inline void run_train(const RunConfig& rc, bool log_progress = true) {
    const PreparedArtifacts art = load_artifacts(rc);
    const FitResult result = fit(rc.model, art.graphs, art.train, art.val_lists, log_progress);
    Json ckpt_cfg = effective_config_json(rc);
    ckpt_cfg["graph_digest"] = graph_digest(rc);
    save_checkpoint(paths::checkpoint(rc), result.params, ckpt_cfg.dump());
    detail::write_json_file(paths::train_report(rc), train_report_to_json(result.report, rc));
    std::cout << "trained " << result.report.epochs.size() << " epochs (" << result.report.stop_reason
              << "), best epoch " << result.report.best_epoch << " with val recall@" << kValidationK
              << " " << detail::format_double(result.report.best_val_recall) << "\n";
}

struct MetricsReport {
    std::size_t k = 0;
    std::size_t users_evaluated = 0;
    double recall = 0.0;
    double precision = 0.0;
    double ndcg = 0.0;
    std::optional<double> cold_recall;
    std::optional<double> cold_ndcg;
    std::string config_digest;
};

inline Json metrics_report_to_json(const MetricsReport& r) {
    Json j;
    j["k"] = r.k;
    j["users_evaluated"] = r.users_evaluated;
    j["recall"] = r.recall;
    j["precision"] = r.precision;
    j["ndcg"] = r.ndcg;
    if (r.cold_recall) j["cold_recall"] = *r.cold_recall;
    if (r.cold_ndcg) j["cold_ndcg"] = *r.cold_ndcg;
    j["config_digest"] = r.config_digest;
    return j;
}

// Item cold-start protocol: strip floor(ratio * items) items' interactions
// from the training matrix, rebuild the interaction-derived operators,
// retrain from scratch, and rank. The feature-derived item operator is
// reused: interaction removal cannot change it. Returns the rankings'
// metrics against `truth` plus, separately, against the removed pairs.
struct ColdEvalResult {
    MetricsSummary overall;
    MetricsSummary cold;
    std::vector<std::size_t> cold_items;
    TrainReport report;
};

inline ColdEvalResult run_cold_protocol(const RunConfig& rc, const PreparedArtifacts& art,
                                        double ratio, std::size_t k, bool log_progress = false) {
    Rng cold_rng(rc.model.seed + 5);  // seed .. seed+4 feed init and sampling
    const ColdStartSplit cs = make_cold_start_split(art.train, ratio, cold_rng);
    GraphSet graphs;
    graphs.u2u = build_u2u(cs.train, rc.model.hgnn_style);
    graphs.i2i = art.graphs.i2i;
    graphs.backbone = build_backbone(cs.train);
    graphs.num_users = art.num_users;
    graphs.num_items = art.num_items;

    const FitResult result = fit(rc.model, graphs, cs.train, art.val_lists, log_progress);
    std::vector<std::vector<std::size_t>> reduced_lists(art.num_users);
    for (std::size_t u = 0; u < art.num_users; ++u)
        reduced_lists[u].assign(cs.train.col_idx.begin() + cs.train.row_ptr[u],
                                cs.train.col_idx.begin() + cs.train.row_ptr[u + 1]);
    const FusedEmbeddings emb = materialize_embeddings(result.params, graphs, rc.model);
    const auto rankings = rank_all(emb.user, emb.item, reduced_lists, k);

    ColdEvalResult out;
    out.cold_items = cs.cold_items;
    out.report = result.report;
    out.overall = summarize_ranking(rankings, art.test_lists, k);
    out.cold = summarize_ranking(rankings, interactions_to_lists(art.num_users, cs.removed), k);
    return out;
}

// Evaluates on the held-out test split. Without --cold-start the trained
// checkpoint is scored (using the model architecture stored inside it);
// with --cold-start the protocol retrains on the reduced matrix and the
// whole report describes that run.
inline MetricsReport run_evaluate(const RunConfig& rc, std::optional<std::size_t> k_override,
                                  std::optional<double> cold_ratio, bool log_progress = false) {
    const PreparedArtifacts art = load_artifacts(rc);
    const std::size_t k = k_override.value_or(20);
    if (k == 0) throw ConfigError("k must be positive");
    MetricsReport report;
    report.k = k;

    if (!cold_ratio) {
        const Checkpoint ckpt = load_checkpoint(paths::checkpoint(rc));
        Json ckpt_cfg;
        try {
            ckpt_cfg = Json::parse(ckpt.config_json);
        } catch (const Json::parse_error& e) {
            throw FormatError(std::string("checkpoint config: ") + e.what());
        }
        if (ckpt_cfg.value("graph_digest", "") != graph_digest(rc))
            throw ConfigError(
                "checkpoint was trained against different artifacts (graph digest mismatch); "
                "retrain before evaluating");
        const ModelConfig trained =
            model_config_from_json(ckpt_cfg.at("model"), ModelConfig{});
        const MetricsSummary s =
            evaluate_model(ckpt.params, art.graphs, trained, art.train_lists, art.test_lists, k);
        report.users_evaluated = s.users_evaluated;
        report.recall = s.recall;
        report.precision = s.precision;
        report.ndcg = s.ndcg;
        Json digest_src = ckpt_cfg;
        digest_src.erase("graph_digest");
        report.config_digest = hex64(fnv1a_bytes(digest_src.dump()));
    } else {
        const ColdEvalResult cold = run_cold_protocol(rc, art, *cold_ratio, k, log_progress);
        report.users_evaluated = cold.overall.users_evaluated;
        report.recall = cold.overall.recall;
        report.precision = cold.overall.precision;
        report.ndcg = cold.overall.ndcg;
        report.cold_recall = cold.cold.recall;
        report.cold_ndcg = cold.cold.ndcg;
        report.config_digest = config_digest(rc);
    }

    const Json out = metrics_report_to_json(report);
    detail::write_json_file(paths::metrics(rc), out);
    std::cout << out.dump(2) << "\n";
    return report;
}

inline void apply_model_override(ModelConfig& m, const std::string& key, double v) {
    auto as_count = [&]() -> std::size_t {
        if (v < 0.0 || v != std::floor(v))
            throw ConfigError("sweep." + key + ": value must be a nonnegative integer");
        return static_cast<std::size_t>(v);
    };
    if (key == "alpha") m.alpha = v;
    else if (key == "beta") m.beta = v;
    else if (key == "tau") m.tau = v;
    else if (key == "lambda") m.lambda = v;
    else if (key == "learning_rate") m.learning_rate = v;
    else if (key == "embed_dim") m.embed_dim = as_count();
    else if (key == "layers_u2u") m.layers_u2u = as_count();
    else if (key == "layers_i2i") m.layers_i2i = as_count();
    else if (key == "layers_backbone") m.layers_backbone = as_count();
    else if (key == "knn_k") m.knn_k = as_count();
    else if (key == "batch_size") m.batch_size = as_count();
    else if (key == "max_epochs") m.max_epochs = as_count();
    else if (key == "patience") m.patience = as_count();
    else if (key == "seed") m.seed = static_cast<std::uint64_t>(as_count());
    else throw ConfigError("sweep key not supported: " + key);
}

// In-memory grid search over model hyperparameters: cartesian product of the
// sweep axes (keys in sorted order), full prepare+train+evaluate per cell,
// one CSV row per cell. A failing cell records its error and the sweep
// continues.
inline void run_sweep(const RunConfig& rc, bool log_progress = false) {
    if (rc.sweep.empty()) throw ConfigError("sweep requires a nonempty 'sweep' grid in the config");
    for (const auto& [key, vals] : rc.sweep) {
        ModelConfig probe = rc.model;
        for (double v : vals) apply_model_override(probe, key, v);  // validate keys and values
    }
    std::filesystem::create_directories(rc.output_dir);

    std::vector<std::string> keys;
    for (const auto& [key, vals] : rc.sweep) keys.push_back(key);
    std::vector<std::size_t> sizes;
    for (const auto& key : keys) sizes.push_back(rc.sweep.at(key).size());
    std::size_t total = 1;
    for (std::size_t s : sizes) total *= s;

    // File-based data does not depend on the model config; load it once.
    std::optional<LoadedData> file_data;
    if (!rc.data.synthetic) file_data = load_data(rc);

    std::ostringstream csv;
    for (const auto& key : keys) csv << key << ",";
    csv << "k,users_evaluated,recall,precision,ndcg,status\n";

    std::vector<std::size_t> cursor(keys.size(), 0);
    for (std::size_t cell = 0; cell < total; ++cell) {
        RunConfig cfg = rc;
        for (std::size_t a = 0; a < keys.size(); ++a)
            apply_model_override(cfg.model, keys[a], rc.sweep.at(keys[a])[cursor[a]]);
        std::string status = "ok";
        MetricsSummary metrics;
        try {
            cfg.model.validate();
            const LoadedData data = file_data ? *file_data : load_data(cfg);
            const DataSplit split = make_split(data.log, cfg.model.seed, cfg.split_mode);
            const SparseCsr a_train =
                interactions_to_csr(data.log.num_users, data.log.num_items, split.train);
            const GraphSet graphs =
                build_graphs(a_train, data.bundle, cfg.model.knn_k, cfg.model.hgnn_style);
            const FitResult result =
                fit(cfg.model, graphs, a_train, interactions_to_lists(data.log.num_users, split.val),
                    log_progress);
            metrics = evaluate_model(result.params, graphs, cfg.model,
                                     interactions_to_lists(data.log.num_users, split.train),
                                     interactions_to_lists(data.log.num_users, split.test), 20);
        } catch (const Error& e) {
            status = e.what();
            for (char& c : status)
                if (c == ',' || c == '\n') c = ';';
        }
        std::ostringstream line;
        for (std::size_t a = 0; a < keys.size(); ++a)
            line << detail::format_double(rc.sweep.at(keys[a])[cursor[a]]) << ",";
        if (status == "ok") {
            line << metrics.k << "," << metrics.users_evaluated << ","
                 << detail::format_double(metrics.recall) << ","
                 << detail::format_double(metrics.precision) << ","
                 << detail::format_double(metrics.ndcg) << ",ok";
        } else {
            line << ",,,,," << status;
        }
        csv << line.str() << "\n";
        std::cout << "[" << (cell + 1) << "/" << total << "] " << line.str() << "\n";
        for (std::size_t a = keys.size(); a-- > 0;) {
            if (++cursor[a] < sizes[a]) break;
            cursor[a] = 0;
        }
    }
    std::ofstream os(paths::sweep_csv(rc), std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + paths::sweep_csv(rc).string());
    os << csv.str();
    if (!os) throw IoError("write failed: " + paths::sweep_csv(rc).string());
    std::cout << "sweep results written to " << paths::sweep_csv(rc).string() << "\n";
}

}  // namespace mmhcl
