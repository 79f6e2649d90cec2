#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmhcl/model.hpp"
#include "mmhcl/rng.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

struct FusedEmbeddings {
    DenseMatrix user;
    DenseMatrix item;
};

// Runs the forward pass once and copies out the scoring embeddings.
inline FusedEmbeddings materialize_embeddings(const ModelParams& params, const GraphSet& graphs,
                                              const ModelConfig& cfg) {
    Tape tape;
    const ForwardOutputs fw = forward(tape, params, graphs, cfg);
    return {tape.value(fw.fused_user), tape.value(fw.fused_item)};
}

namespace detail {

// Top-k of a score vector with already-masked entries; ties rank the lower
// index first. Returns indices in rank order (best first).
inline std::vector<std::size_t> select_topk(const std::vector<double>& score, std::size_t k) {
    const std::size_t n = score.size();
    const std::size_t keep = std::min(k, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto better = [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    };
    if (keep == 0) return {};
    std::nth_element(order.begin(), order.begin() + (keep - 1), order.end(), better);
    order.resize(keep);
    std::sort(order.begin(), order.end(), better);
    // Masked entries sort last; drop them so they are never recommended.
    while (!order.empty() && score[order.back()] == -std::numeric_limits<double>::infinity())
        order.pop_back();
    return order;
}

}  // namespace detail

// Ranks every item for every user by inner product, masking each user's
// training items to -inf so they can never be recommended. k larger than the
// item count is clamped. Lists come back in rank order.
inline std::vector<std::vector<std::size_t>> rank_all(const DenseMatrix& fused_user,
                                                      const DenseMatrix& fused_item,
                                                      const std::vector<std::vector<std::size_t>>& train_lists,
                                                      std::size_t k) {
    if (fused_user.cols() != fused_item.cols()) throw ShapeError("rank_all: embedding dims differ");
    if (train_lists.size() != fused_user.rows())
        throw ShapeError("rank_all: train mask does not match user count");
    const std::size_t items = fused_item.rows();
    std::vector<std::vector<std::size_t>> out(fused_user.rows());
    std::vector<double> score(items);
    for (std::size_t u = 0; u < fused_user.rows(); ++u) {
        for (std::size_t i = 0; i < items; ++i) score[i] = dot(fused_user.row(u), fused_item.row(i));
        for (std::size_t i : train_lists[u]) score[i] = -std::numeric_limits<double>::infinity();
        out[u] = detail::select_topk(score, k);
    }
    return out;
}

// Most-popular-first ranking from training interaction counts, same masking
// and tie rules as rank_all. The trivial baseline the model must beat.
inline std::vector<std::vector<std::size_t>> popularity_ranking(
    const SparseCsr& train, const std::vector<std::vector<std::size_t>>& train_lists, std::size_t k) {
    const std::vector<double> pop = col_sums(train);
    std::vector<std::vector<std::size_t>> out(train.rows);
    std::vector<double> score(train.cols);
    for (std::size_t u = 0; u < train.rows; ++u) {
        std::copy(pop.begin(), pop.end(), score.begin());
        for (std::size_t i : train_lists[u]) score[i] = -std::numeric_limits<double>::infinity();
        out[u] = detail::select_topk(score, k);
    }
    return out;
}

// truth must be sorted ascending.
inline double recall_at_k(const std::vector<std::size_t>& ranked,
                          const std::vector<std::size_t>& truth) {
    if (truth.empty()) throw ParamError("recall_at_k: empty truth set");
    std::size_t hits = 0;
    for (std::size_t item : ranked)
        hits += std::binary_search(truth.begin(), truth.end(), item) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double precision_at_k(const std::vector<std::size_t>& ranked,
                             const std::vector<std::size_t>& truth, std::size_t k) {
    if (k == 0) throw ParamError("precision_at_k: k must be positive");
    std::size_t hits = 0;
    for (std::size_t item : ranked)
        hits += std::binary_search(truth.begin(), truth.end(), item) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

// Binary-relevance NDCG: DCG = sum over hit ranks r (0-based) of
// 1/log2(r+2); ideal DCG places min(|truth|, k) hits at the top.
inline double ndcg_at_k(const std::vector<std::size_t>& ranked,
                        const std::vector<std::size_t>& truth, std::size_t k) {
    if (k == 0) throw ParamError("ndcg_at_k: k must be positive");
    if (truth.empty()) throw ParamError("ndcg_at_k: empty truth set");
    double dcg = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r)
        if (std::binary_search(truth.begin(), truth.end(), ranked[r]))
            dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    double idcg = 0.0;
    const std::size_t ideal = std::min(truth.size(), k);
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    return dcg / idcg;
}

struct MetricsSummary {
    std::size_t k = 0;
    std::size_t users_evaluated = 0;
    double recall = 0.0;
    double precision = 0.0;
    double ndcg = 0.0;
};

// Averages the three metrics over users with nonempty truth sets; users with
// nothing to find are skipped entirely.
inline MetricsSummary summarize_ranking(const std::vector<std::vector<std::size_t>>& rankings,
                                        const std::vector<std::vector<std::size_t>>& truth,
                                        std::size_t k) {
    if (rankings.size() != truth.size()) throw ShapeError("summarize_ranking: size mismatch");
    MetricsSummary s;
    s.k = k;
    for (std::size_t u = 0; u < rankings.size(); ++u) {
        if (truth[u].empty()) continue;
        ++s.users_evaluated;
        s.recall += recall_at_k(rankings[u], truth[u]);
        s.precision += precision_at_k(rankings[u], truth[u], k);
        s.ndcg += ndcg_at_k(rankings[u], truth[u], k);
    }
    if (s.users_evaluated > 0) {
        const double n = static_cast<double>(s.users_evaluated);
        s.recall /= n;
        s.precision /= n;
        s.ndcg /= n;
    }
    return s;
}

// Full-rank evaluation of a trained model against per-user truth lists.
inline MetricsSummary evaluate_model(const ModelParams& params, const GraphSet& graphs,
                                     const ModelConfig& cfg,
                                     const std::vector<std::vector<std::size_t>>& train_lists,
                                     const std::vector<std::vector<std::size_t>>& truth,
                                     std::size_t k) {
    const FusedEmbeddings emb = materialize_embeddings(params, graphs, cfg);
    return summarize_ranking(rank_all(emb.user, emb.item, train_lists, k), truth, k);
}

// Cold-start protocol input: the reduced training matrix, which items went
// cold, and the interactions that were removed (they become the truth set).
struct ColdStartSplit {
    SparseCsr train;
    std::vector<std::size_t> cold_items;
    std::vector<std::pair<std::size_t, std::size_t>> removed;
};

// Uniformly samples floor(ratio * items) items and strips all their training
// interactions. Item identity is preserved, only incident edges vanish.
inline ColdStartSplit make_cold_start_split(const SparseCsr& train, double ratio, Rng& rng) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw ParamError("make_cold_start_split: ratio must be in (0, 1)");
    const std::size_t n_cold = static_cast<std::size_t>(ratio * static_cast<double>(train.cols));
    ColdStartSplit out;
    out.cold_items = sample_without_replacement(rng, train.cols, n_cold);
    std::vector<bool> cold(train.cols, false);
    for (std::size_t i : out.cold_items) cold[i] = true;
    out.train = SparseCsr(train.rows, train.cols);
    for (std::size_t u = 0; u < train.rows; ++u) {
        for (std::size_t kk = train.row_ptr[u]; kk < train.row_ptr[u + 1]; ++kk) {
            const std::size_t i = train.col_idx[kk];
            if (cold[i]) {
                out.removed.emplace_back(u, i);
            } else {
                out.train.col_idx.push_back(i);
                out.train.values.push_back(train.values[kk]);
            }
        }
        out.train.row_ptr[u + 1] = out.train.col_idx.size();
    }
    return out;
}

}  // namespace mmhcl
