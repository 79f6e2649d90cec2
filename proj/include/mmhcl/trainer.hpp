#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "mmhcl/evaluator.hpp"
#include "mmhcl/model.hpp"
#include "mmhcl/objective.hpp"
#include "mmhcl/rng.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

// Gradients regrouped per parameter table; absent tables are zero-filled.
struct TableGrads {
    DenseMatrix user_emb;
    DenseMatrix item_emb;
    DenseMatrix user_hyper;
    DenseMatrix item_hyper;
};

inline TableGrads extract_table_grads(const Gradients& grads, const LeafIds& leaves,
                                      const ModelParams& params) {
    auto pick = [&](NodeId id, const DenseMatrix& like) {
        return grads.contains(id) ? grads.at(id) : DenseMatrix(like.rows(), like.cols());
    };
    return {pick(leaves.user_emb, params.user_emb), pick(leaves.item_emb, params.item_emb),
            pick(leaves.user_hyper, params.user_hyper), pick(leaves.item_hyper, params.item_hyper)};
}

// Adam with the usual constants and bias correction. step counts completed
// updates; moments persist across batches and epochs.
struct AdamState {
    struct Slot {
        DenseMatrix m;
        DenseMatrix v;
    };
    Slot user_emb, item_emb, user_hyper, item_hyper;
    std::size_t step = 0;

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    static AdamState init(const ModelParams& p) {
        auto zeros = [](const DenseMatrix& like) {
            return Slot{DenseMatrix(like.rows(), like.cols()), DenseMatrix(like.rows(), like.cols())};
        };
        return {zeros(p.user_emb), zeros(p.item_emb), zeros(p.user_hyper), zeros(p.item_hyper), 0};
    }
};

inline void adam_step(ModelParams& params, const TableGrads& grads, AdamState& state, double lr) {
    auto check = [](const DenseMatrix& g, const char* name) {
        if (!all_finite(g)) throw DataError(std::string("adam_step: non-finite gradient in ") + name);
    };
    check(grads.user_emb, "user_emb");
    check(grads.item_emb, "item_emb");
    check(grads.user_hyper, "user_hyper");
    check(grads.item_hyper, "item_hyper");

    ++state.step;
    const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.step));
    auto update = [&](DenseMatrix& p, const DenseMatrix& g, AdamState::Slot& s) {
        if (!p.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data()[i];
            double& m = s.m.data()[i];
            double& v = s.v.data()[i];
            m = AdamState::kBeta1 * m + (1.0 - AdamState::kBeta1) * gi;
            v = AdamState::kBeta2 * v + (1.0 - AdamState::kBeta2) * gi * gi;
            p.data()[i] -= lr * (m / c1) / (std::sqrt(v / c2) + AdamState::kEps);
        }
    };
    update(params.user_emb, grads.user_emb, state.user_emb);
    update(params.item_emb, grads.item_emb, state.item_emb);
    update(params.user_hyper, grads.user_hyper, state.user_hyper);
    update(params.item_hyper, grads.item_hyper, state.item_hyper);
}

// Uniformly samples observed (user, pos) pairs and rejection-samples one
// negative per pair from the user's non-interacted items.
inline TripleBatch sample_triples(const SparseCsr& train, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) throw ParamError("sample_triples: batch_size must be positive");
    if (train.nnz() == 0) throw DataError("sample_triples: no training interactions");
    TripleBatch batch;
    batch.users.reserve(batch_size);
    batch.pos_items.reserve(batch_size);
    batch.neg_items.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const std::size_t k = static_cast<std::size_t>(uniform_below(rng, train.nnz()));
        const std::size_t u =
            static_cast<std::size_t>(std::upper_bound(train.row_ptr.begin(), train.row_ptr.end(), k) -
                                     train.row_ptr.begin()) -
            1;
        const auto row_begin = train.col_idx.begin() + train.row_ptr[u];
        const auto row_end = train.col_idx.begin() + train.row_ptr[u + 1];
        if (static_cast<std::size_t>(row_end - row_begin) == train.cols)
            throw DataError("sample_triples: a user interacts with every item");
        std::size_t neg;
        do {
            neg = static_cast<std::size_t>(uniform_below(rng, train.cols));
        } while (std::binary_search(row_begin, row_end, neg));
        batch.users.push_back(u);
        batch.pos_items.push_back(train.col_idx[k]);
        batch.neg_items.push_back(neg);
    }
    return batch;
}

struct EpochLosses {
    double bpr = 0.0;
    double scl_user = 0.0;
    double scl_item = 0.0;
    double reg = 0.0;
    double total = 0.0;
    std::size_t steps = 0;
};

// One pass over the training set: ceil(nnz / batch_size) sampled batches,
// each with a fresh tape, exact backward, and one Adam update. Returned
// losses are per-step means.
inline EpochLosses train_epoch(ModelParams& params, AdamState& adam, const GraphSet& graphs,
                               const ModelConfig& cfg, const SparseCsr& train, Rng& rng) {
    const std::size_t steps = (train.nnz() + cfg.batch_size - 1) / cfg.batch_size;
    EpochLosses acc;
    for (std::size_t s = 0; s < steps; ++s) {
        const TripleBatch batch = sample_triples(train, cfg.batch_size, rng);
        Tape tape;
        const ForwardOutputs fw = forward(tape, params, graphs, cfg);
        const LossNodes loss = compose_loss(tape, fw, batch, cfg);
        const Gradients grads = tape.backward(loss.total);
        const TableGrads tg = extract_table_grads(grads, fw.leaves, params);
        adam_step(params, tg, adam, cfg.learning_rate);
        acc.bpr += tape.scalar_value(loss.bpr);
        acc.reg += tape.scalar_value(loss.reg);
        if (loss.scl_user) acc.scl_user += tape.scalar_value(*loss.scl_user);
        if (loss.scl_item) acc.scl_item += tape.scalar_value(*loss.scl_item);
        acc.total += tape.scalar_value(loss.total);
        ++acc.steps;
    }
    if (acc.steps > 0) {
        const double n = static_cast<double>(acc.steps);
        acc.bpr /= n;
        acc.scl_user /= n;
        acc.scl_item /= n;
        acc.reg /= n;
        acc.total /= n;
    }
    return acc;
}

// Strict-improvement early stopping: a tie counts as no improvement, and
// `patience` consecutive non-improving observations stop the run.
class EarlyStopper {
public:
    explicit EarlyStopper(std::size_t patience) : patience_(patience) {
        if (patience == 0) throw ParamError("EarlyStopper: patience must be positive");
    }

    // Returns true when `metric` strictly improves on the best seen so far.
    bool observe(double metric) {
        if (metric > best_) {
            best_ = metric;
            strikes_ = 0;
            return true;
        }
        ++strikes_;
        return false;
    }

    bool should_stop() const { return strikes_ >= patience_; }
    double best() const { return best_; }

private:
    std::size_t patience_;
    double best_ = -std::numeric_limits<double>::infinity();
    std::size_t strikes_ = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    EpochLosses losses;
    double val_recall = 0.0;
    double val_ndcg = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;  // 1-based; 0 means no epoch ran
    double best_val_recall = 0.0;
    std::string stop_reason;
};

struct FitResult {
    ModelParams params;
    TrainReport report;
};

// The metric driving model selection and early stopping.
inline constexpr std::size_t kValidationK = 20;

// Full training loop. Keeps the parameter snapshot of the best validation
// Recall@20 epoch and restores it at the end. The triple sampler draws from
// seed + 4 (tables consume seed .. seed + 3).
inline FitResult fit(const ModelConfig& cfg, const GraphSet& graphs, const SparseCsr& train,
                     const std::vector<std::vector<std::size_t>>& val_lists,
                     bool log_progress = false) {
    cfg.validate();
    if (val_lists.size() != graphs.num_users) throw ShapeError("fit: val_lists size mismatch");
    std::vector<std::vector<std::size_t>> train_lists(train.rows);
    for (std::size_t u = 0; u < train.rows; ++u)
        train_lists[u].assign(train.col_idx.begin() + train.row_ptr[u],
                              train.col_idx.begin() + train.row_ptr[u + 1]);

    ModelParams params = ModelParams::init(graphs.num_users, graphs.num_items, cfg.embed_dim, cfg.seed);
    AdamState adam = AdamState::init(params);
    Rng sample_rng(cfg.seed + 4);
    EarlyStopper stopper(cfg.patience);

    FitResult result;
    result.params = params;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        stats.losses = train_epoch(params, adam, graphs, cfg, train, sample_rng);
        const MetricsSummary val =
            evaluate_model(params, graphs, cfg, train_lists, val_lists, kValidationK);
        stats.val_recall = val.recall;
        stats.val_ndcg = val.ndcg;
        result.report.epochs.push_back(stats);
        if (log_progress)
            std::fprintf(stderr, "epoch %zu loss %.6f val recall@%zu %.4f\n", epoch,
                         stats.losses.total, kValidationK, stats.val_recall);
        if (stopper.observe(val.recall)) {
            result.params = params;
            result.report.best_epoch = epoch;
            result.report.best_val_recall = val.recall;
        }
        if (stopper.should_stop()) {
            result.report.stop_reason = "early_stop";
            break;
        }
    }
    if (result.report.stop_reason.empty()) result.report.stop_reason = "max_epochs";
    return result;
}

}  // namespace mmhcl
