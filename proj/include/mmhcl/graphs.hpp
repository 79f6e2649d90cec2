#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mmhcl/common.hpp"
#include "mmhcl/dense.hpp"
#include "mmhcl/knn.hpp"
#include "mmhcl/operators.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

enum class ModalityTag { visual, acoustic, textual };

inline const char* to_string(ModalityTag t) {
    switch (t) {
        case ModalityTag::visual: return "visual";
        case ModalityTag::acoustic: return "acoustic";
        case ModalityTag::textual: return "textual";
    }
    return "?";
}

inline ModalityTag modality_tag_from_string(const std::string& s) {
    if (s == "visual") return ModalityTag::visual;
    if (s == "acoustic") return ModalityTag::acoustic;
    if (s == "textual") return ModalityTag::textual;
    throw ConfigError("unknown modality tag: " + s);
}

struct Modality {
    ModalityTag tag;
    DenseMatrix features;  // one row per item
};

// The per-item multimodal features available to the item graph builder.
// Feature dimensions may differ across modalities; row counts may not.
struct ModalityBundle {
    std::vector<Modality> modalities;

    std::size_t item_count() const { return modalities.empty() ? 0 : modalities.front().features.rows(); }

    void validate() const {
        if (modalities.empty()) throw DataError("ModalityBundle: at least one modality required");
        for (const auto& m : modalities) {
            if (m.features.rows() != item_count())
                throw ShapeError("ModalityBundle: modalities disagree on item count");
            if (m.features.cols() == 0) throw DataError("ModalityBundle: empty feature dimension");
        }
    }
};

// User hypergraph: each item is a hyperedge over the users who interacted
// with it, so the incidence is the binary interaction matrix itself.
inline PropagationOperator build_u2u(const SparseCsr& interactions, bool hgnn_style = false) {
    if (interactions.rows == 0 || interactions.cols == 0 || interactions.nnz() == 0)
        throw DataError("build_u2u: empty interaction matrix");
    for (double v : interactions.values)
        if (v != 1.0) throw DataError("build_u2u: interaction matrix must be binary");
    return make_operator(interactions, hgnn_style);
}

// Item hypergraph: per modality, a binary cosine-KNN matrix over item
// features; the incidences are concatenated horizontally in fixed tag order
// (visual, acoustic, textual) so every modality contributes its own block of
// hyperedges.
inline PropagationOperator build_i2i(const ModalityBundle& bundle, std::size_t k,
                                     bool hgnn_style = false) {
    bundle.validate();
    std::vector<const Modality*> ordered;
    for (const auto& m : bundle.modalities) ordered.push_back(&m);
    std::stable_sort(ordered.begin(), ordered.end(), [](const Modality* a, const Modality* b) {
        return static_cast<int>(a->tag) < static_cast<int>(b->tag);
    });
    std::vector<SparseCsr> blocks;
    blocks.reserve(ordered.size());
    for (const Modality* m : ordered) blocks.push_back(cosine_topk(m->features, k));
    return make_operator(hstack(blocks), hgnn_style);
}

// Symmetrically normalized bipartite interaction graph over users+items:
// entry (u, M+i) = A_ui / sqrt(deg(u) deg(i)), mirrored below the diagonal.
// Users (or items) without interactions get empty rows and stay zero under
// propagation.
inline AdjacencyOperator build_backbone(const SparseCsr& interactions) {
    const std::size_t m = interactions.rows;
    const std::size_t n = interactions.cols;
    const std::vector<double> user_deg = row_sums(interactions);
    const std::vector<double> item_deg = col_sums(interactions);
    std::vector<CooEntry> entries;
    entries.reserve(2 * interactions.nnz());
    for (std::size_t u = 0; u < m; ++u) {
        for (std::size_t kk = interactions.row_ptr[u]; kk < interactions.row_ptr[u + 1]; ++kk) {
            const std::size_t i = interactions.col_idx[kk];
            const double w = interactions.values[kk] / std::sqrt(user_deg[u] * item_deg[i]);
            entries.push_back({u, m + i, w});
            entries.push_back({m + i, u, w});
        }
    }
    return AdjacencyOperator(from_coo(m + n, m + n, std::move(entries)));
}

struct GraphSet {
    PropagationOperator u2u;
    PropagationOperator i2i;
    AdjacencyOperator backbone;
    std::size_t num_users = 0;
    std::size_t num_items = 0;
};

inline GraphSet build_graphs(const SparseCsr& interactions, const ModalityBundle& bundle,
                             std::size_t k, bool hgnn_style = false) {
    if (bundle.item_count() != interactions.cols)
        throw ShapeError("build_graphs: feature rows must match item count");
    GraphSet g;
    g.u2u = build_u2u(interactions, hgnn_style);
    g.i2i = build_i2i(bundle, k, hgnn_style);
    g.backbone = build_backbone(interactions);
    g.num_users = interactions.rows;
    g.num_items = interactions.cols;
    return g;
}

}  // namespace mmhcl
