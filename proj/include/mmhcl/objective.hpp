#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "mmhcl/autograd.hpp"
#include "mmhcl/model.hpp"

namespace mmhcl {

// One training batch of (user, positive item, negative item) triples.
struct TripleBatch {
    std::vector<std::size_t> users;
    std::vector<std::size_t> pos_items;
    std::vector<std::size_t> neg_items;

    std::size_t size() const { return users.size(); }

    void validate() const {
        if (users.size() != pos_items.size() || users.size() != neg_items.size())
            throw ShapeError("TripleBatch: component lists differ in length");
    }
};

// Pairwise ranking loss: -sum_b log sigmoid(score(u, pos) - score(u, neg)).
// Summed, not averaged, over the batch.
inline NodeId bpr_loss(Tape& tape, const ForwardOutputs& fw, const TripleBatch& batch) {
    batch.validate();
    if (batch.size() == 0) throw ParamError("bpr_loss: empty batch");
    const NodeId bu = tape.gather_rows(fw.fused_user, batch.users);
    const NodeId bp = tape.gather_rows(fw.fused_item, batch.pos_items);
    const NodeId bn = tape.gather_rows(fw.fused_item, batch.neg_items);
    const NodeId pos = tape.rowwise_dot(bu, bp);
    const NodeId neg = tape.rowwise_dot(bu, bn);
    const NodeId margin = tape.add(pos, tape.scale(neg, -1.0));
    return tape.scale(tape.sum(tape.log_sigmoid(margin)), -1.0);
}

// Contrastive alignment between the hypergraph view and the fused view for
// the given anchor rows (deduplicated here). With batch scope the
// denominator runs over the batch anchors themselves; with full scope over
// every row. The anchor's own similarity stays inside the denominator.
inline NodeId scl_loss(Tape& tape, NodeId hyper, NodeId fused, std::vector<std::size_t> anchors,
                       double tau, ContrastScope scope) {
    std::sort(anchors.begin(), anchors.end());
    anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
    if (anchors.empty()) throw ParamError("scl_loss: empty anchor set");
    std::vector<std::size_t> contrast;
    if (scope == ContrastScope::full) {
        contrast.resize(tape.value(hyper).rows());
        std::iota(contrast.begin(), contrast.end(), std::size_t{0});
    } else {
        contrast = anchors;
    }
    return tape.sum(
        tape.contrastive_log_softmax(hyper, fused, std::move(anchors), std::move(contrast), tau));
}

// lambda * sum of squared entries over all four tables.
inline NodeId l2_penalty(Tape& tape, const LeafIds& leaves, double lambda) {
    const NodeId s = tape.add(
        tape.add(tape.frobenius_sq(leaves.user_emb), tape.frobenius_sq(leaves.item_emb)),
        tape.add(tape.frobenius_sq(leaves.user_hyper), tape.frobenius_sq(leaves.item_hyper)));
    return tape.scale(s, lambda);
}

// Node ids of the loss terms built for one batch. Contrastive terms are
// absent when their channel is disabled or their weight is zero.
struct LossNodes {
    NodeId total;
    NodeId bpr;
    std::optional<NodeId> scl_user;
    std::optional<NodeId> scl_item;
    NodeId reg;
};

// total = bpr + alpha * scl_user + beta * scl_item + l2. User anchors are
// the distinct users of the batch; item anchors the distinct positives and
// negatives.
inline LossNodes compose_loss(Tape& tape, const ForwardOutputs& fw, const TripleBatch& batch,
                              const ModelConfig& cfg) {
    LossNodes out{};
    out.bpr = bpr_loss(tape, fw, batch);
    out.reg = l2_penalty(tape, fw.leaves, cfg.lambda);
    NodeId total = tape.add(out.bpr, out.reg);
    if (cfg.use_scl) {
        if (cfg.use_u2u && cfg.alpha > 0.0) {
            out.scl_user = scl_loss(tape, fw.h_user, fw.fused_user, batch.users, cfg.tau,
                                    cfg.contrast_scope);
            total = tape.add(total, tape.scale(*out.scl_user, cfg.alpha));
        }
        if (cfg.use_i2i && cfg.beta > 0.0) {
            std::vector<std::size_t> item_anchors = batch.pos_items;
            item_anchors.insert(item_anchors.end(), batch.neg_items.begin(), batch.neg_items.end());
            out.scl_item = scl_loss(tape, fw.h_item, fw.fused_item, std::move(item_anchors), cfg.tau,
                                    cfg.contrast_scope);
            total = tape.add(total, tape.scale(*out.scl_item, cfg.beta));
        }
    }
    out.total = total;
    return out;
}

}  // namespace mmhcl
