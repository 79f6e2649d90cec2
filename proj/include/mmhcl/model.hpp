#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mmhcl/autograd.hpp"
#include "mmhcl/common.hpp"
#include "mmhcl/dense.hpp"
#include "mmhcl/graphs.hpp"

namespace mmhcl {

// Which rows the contrastive denominator sums over: the rows appearing in
// the current batch, or every row of the table.
enum class ContrastScope { batch, full };

inline const char* to_string(ContrastScope s) {
    return s == ContrastScope::batch ? "batch" : "full";
}

inline ContrastScope contrast_scope_from_string(const std::string& s) {
    if (s == "batch") return ContrastScope::batch;
    if (s == "full") return ContrastScope::full;
    throw ConfigError("unknown contrast_scope: " + s);
}

struct ModelConfig {
    std::size_t embed_dim = 64;
    std::size_t layers_u2u = 2;
    std::size_t layers_i2i = 2;
    std::size_t layers_backbone = 2;
    std::size_t knn_k = 5;
    double alpha = 0.3;   // weight of the user-side contrastive term
    double beta = 0.7;    // weight of the item-side contrastive term
    double tau = 0.5;     // contrastive temperature
    double lambda = 1e-3;  // L2 penalty weight
    double learning_rate = 1e-4;
    std::size_t batch_size = 1024;
    std::size_t max_epochs = 250;
    std::size_t patience = 5;
    std::uint64_t seed = 2024;
    bool use_u2u = true;
    bool use_i2i = true;
    bool use_scl = true;
    bool hgnn_style = false;
    ContrastScope contrast_scope = ContrastScope::batch;

    void validate() const {
        if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
        if (knn_k == 0) throw ConfigError("knn_k must be positive");
        if (tau <= 0.0) throw ConfigError("tau must be positive");
        if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be nonnegative");
        if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
        if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
        if (batch_size == 0) throw ConfigError("batch_size must be positive");
        if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
        if (patience == 0) throw ConfigError("patience must be positive");
    }
};

// The four trainable tables: ID embeddings and hypergraph-channel
// embeddings for users and items.
struct ModelParams {
    DenseMatrix user_emb;
    DenseMatrix item_emb;
    DenseMatrix user_hyper;
    DenseMatrix item_hyper;

    // Tables draw from consecutive seeds so each has its own stream.
    static ModelParams init(std::size_t users, std::size_t items, std::size_t dim,
                            std::uint64_t seed) {
        ModelParams p;
        p.user_emb = xavier_init(users, dim, seed);
        p.item_emb = xavier_init(items, dim, seed + 1);
        p.user_hyper = xavier_init(users, dim, seed + 2);
        p.item_hyper = xavier_init(items, dim, seed + 3);
        return p;
    }

    std::size_t num_users() const { return user_emb.rows(); }
    std::size_t num_items() const { return item_emb.rows(); }
    std::size_t dim() const { return user_emb.cols(); }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.user_emb == b.user_emb && a.item_emb == b.item_emb &&
               a.user_hyper == b.user_hyper && a.item_hyper == b.item_hyper;
    }
};

struct LeafIds {
    NodeId user_emb;
    NodeId item_emb;
    NodeId user_hyper;
    NodeId item_hyper;
};

// Node ids for all model outputs of one forward build. h_* are the
// hypergraph-channel embeddings (constant zeros when that channel is
// disabled), e_* the interaction-backbone readouts, fused_* the embeddings
// used for scoring. When a channel is off its fused id aliases the backbone
// id, so the equality "disabled channel changes nothing" holds exactly.
struct ForwardOutputs {
    LeafIds leaves;
    NodeId h_user, h_item;
    NodeId e_user, e_item;
    NodeId fused_user, fused_item;
};

// Repeated operator application; only the last layer is read out.
inline NodeId propagate_hypergraph(Tape& tape, const SymmetricMap& op, NodeId x0,
                                   std::size_t layers) {
    NodeId x = x0;
    for (std::size_t l = 0; l < layers; ++l) x = tape.apply_operator(op, x);
    return x;
}

// Stacks user and item tables into one (users+items) block, propagates, and
// reads out the mean over layers 0..L, split back into the two blocks.
inline std::pair<NodeId, NodeId> propagate_backbone(Tape& tape, const SymmetricMap& op,
                                                    NodeId user_table, NodeId item_table,
                                                    std::size_t users, std::size_t items,
                                                    std::size_t layers) {
    NodeId x = tape.concat_rows(user_table, item_table);
    std::vector<NodeId> per_layer{x};
    for (std::size_t l = 0; l < layers; ++l) {
        x = tape.apply_operator(op, x);
        per_layer.push_back(x);
    }
    const NodeId mean = tape.row_mean(per_layer);
    std::vector<std::size_t> user_rows(users);
    std::iota(user_rows.begin(), user_rows.end(), std::size_t{0});
    std::vector<std::size_t> item_rows(items);
    std::iota(item_rows.begin(), item_rows.end(), users);
    return {tape.gather_rows(mean, std::move(user_rows)), tape.gather_rows(mean, std::move(item_rows))};
}

// fused = backbone + hyper / ||hyper||_2 (rowwise); zero hyper rows add nothing.
inline NodeId fuse(Tape& tape, NodeId backbone, NodeId hyper) {
    return tape.add(backbone, tape.row_l2_normalize(hyper));
}

inline ForwardOutputs forward(Tape& tape, const ModelParams& params, const GraphSet& graphs,
                              const ModelConfig& cfg) {
    const std::size_t users = graphs.num_users;
    const std::size_t items = graphs.num_items;
    if (params.num_users() != users || params.num_items() != items)
        throw ShapeError("forward: parameter tables do not match graph sizes");
    if (params.user_hyper.rows() != users || params.item_hyper.rows() != items)
        throw ShapeError("forward: hypergraph tables do not match graph sizes");
    if (params.item_emb.cols() != params.dim() || params.user_hyper.cols() != params.dim() ||
        params.item_hyper.cols() != params.dim())
        throw ShapeError("forward: parameter tables disagree on embedding dim");

    ForwardOutputs out;
    out.leaves.user_emb = tape.leaf(params.user_emb);
    out.leaves.item_emb = tape.leaf(params.item_emb);
    out.leaves.user_hyper = tape.leaf(params.user_hyper);
    out.leaves.item_hyper = tape.leaf(params.item_hyper);

    out.h_user = cfg.use_u2u
                     ? propagate_hypergraph(tape, graphs.u2u, out.leaves.user_hyper, cfg.layers_u2u)
                     : tape.constant(DenseMatrix(users, params.dim()));
    out.h_item = cfg.use_i2i
                     ? propagate_hypergraph(tape, graphs.i2i, out.leaves.item_hyper, cfg.layers_i2i)
                     : tape.constant(DenseMatrix(items, params.dim()));

    std::tie(out.e_user, out.e_item) =
        propagate_backbone(tape, graphs.backbone, out.leaves.user_emb, out.leaves.item_emb, users,
                           items, cfg.layers_backbone);

    out.fused_user = cfg.use_u2u ? fuse(tape, out.e_user, out.h_user) : out.e_user;
    out.fused_item = cfg.use_i2i ? fuse(tape, out.e_item, out.h_item) : out.e_item;
    return out;
}

// Plain inner-product scores for (user, item) pairs on materialized
// embeddings; the evaluator path needs no tape.
inline std::vector<double> score_pairs(const DenseMatrix& fused_user, const DenseMatrix& fused_item,
                                       const std::vector<std::size_t>& users,
                                       const std::vector<std::size_t>& items) {
    if (users.size() != items.size()) throw ShapeError("score_pairs: index lists differ in length");
    if (fused_user.cols() != fused_item.cols()) throw ShapeError("score_pairs: embedding dims differ");
    std::vector<double> scores(users.size());
    for (std::size_t r = 0; r < users.size(); ++r) {
        if (users[r] >= fused_user.rows() || items[r] >= fused_item.rows())
            throw ParamError("score_pairs: index out of range");
        scores[r] = dot(fused_user.row(users[r]), fused_item.row(items[r]));
    }
    return scores;
}

}  // namespace mmhcl
