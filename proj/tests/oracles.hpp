#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is dense, direct, and deliberately naive: values are
// computed straight from the defining formulas with no factoring, fusion,
// or stabilization tricks, so agreement with the library is meaningful.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "mmhcl/dense.hpp"
#include "mmhcl/model.hpp"
#include "mmhcl/sparse.hpp"

namespace oracles {

using mmhcl::DenseMatrix;
using mmhcl::SparseCsr;

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k)
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

// Dense image of a linear map, column by column: M = op(I).
inline DenseMatrix densify(const mmhcl::SymmetricMap& op) {
    const std::size_t n = op.node_count();
    DenseMatrix eye(n, n);
    for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
    return op.apply(eye);
}

// Degree-normalized propagation matrix built densely from the incidence:
// D^{-1/2} B W B^T D^{-1/2}, with W = I or, hgnn style, W = diag(1/delta(e)).
inline DenseMatrix dense_propagation_matrix(const DenseMatrix& incidence, bool hgnn_style) {
    const std::size_t n = incidence.rows();
    const std::size_t h = incidence.cols();
    std::vector<double> edge_deg(h, 0.0);
    for (std::size_t e = 0; e < h; ++e)
        for (std::size_t v = 0; v < n; ++v) edge_deg[e] += incidence(v, e);
    DenseMatrix weighted = incidence;  // B W
    if (hgnn_style) {
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t e = 0; e < h; ++e)
                weighted(v, e) = edge_deg[e] > 0.0 ? incidence(v, e) / edge_deg[e] : 0.0;
    }
    DenseMatrix bbt = matmul(weighted, transpose(incidence));
    std::vector<double> node_deg(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t e = 0; e < h; ++e)
            node_deg[v] += incidence(v, e) * (hgnn_style ? (edge_deg[e] > 0.0 ? 1.0 : 0.0)
                                                         : edge_deg[e]);
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (node_deg[i] > 0.0 && node_deg[j] > 0.0)
                out(i, j) = bbt(i, j) / std::sqrt(node_deg[i] * node_deg[j]);
        }
    return out;
}

// Symmetrically normalized bipartite adjacency over users+items.
inline DenseMatrix dense_bipartite_matrix(const DenseMatrix& interactions) {
    const std::size_t m = interactions.rows();
    const std::size_t n = interactions.cols();
    std::vector<double> du(m, 0.0), di(n, 0.0);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t i = 0; i < n; ++i) {
            du[u] += interactions(u, i);
            di[i] += interactions(u, i);
        }
    DenseMatrix out(m + n, m + n);
    for (std::size_t u = 0; u < m; ++u)
        for (std::size_t i = 0; i < n; ++i) {
            if (interactions(u, i) != 0.0) {
                const double w = interactions(u, i) / std::sqrt(du[u] * di[i]);
                out(u, m + i) = w;
                out(m + i, u) = w;
            }
        }
    return out;
}

// Cosine KNN by exhaustive stable sort (similarity desc, index asc).
inline std::vector<std::vector<std::size_t>> cosine_topk_sets(const DenseMatrix& features,
                                                              std::size_t k) {
    const std::size_t n = features.rows();
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ni = mmhcl::row_norm(features, i);
        if (ni == 0.0) {
            out[i] = {i};
            continue;
        }
        std::vector<std::pair<double, std::size_t>> sims;
        for (std::size_t j = 0; j < n; ++j) {
            const double nj = mmhcl::row_norm(features, j);
            double s;
            if (j == i)
                s = 1.0;
            else if (nj == 0.0)
                s = 0.0;
            else
                s = mmhcl::dot(features.row(i), features.row(j)) / (ni * nj);
            sims.emplace_back(s, j);
        }
        std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < std::min(k, n); ++r) out[i].push_back(sims[r].second);
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

// The contrastive loss written directly from its definition: cosine
// similarities over tau, plain exp, denominator over both views including
// the anchor itself, minus the aligned term.
inline double direct_contrastive_loss(const DenseMatrix& h, const DenseMatrix& e,
                                      const std::vector<std::size_t>& anchors,
                                      const std::vector<std::size_t>& contrast, double tau) {
    auto cos_sim = [&](const DenseMatrix& x, std::size_t a, const DenseMatrix& y, std::size_t b) {
        const double nx = mmhcl::row_norm(x, a);
        const double ny = mmhcl::row_norm(y, b);
        if (nx == 0.0 || ny == 0.0) return 0.0;
        return mmhcl::dot(x.row(a), y.row(b)) / (nx * ny);
    };
    double total = 0.0;
    for (std::size_t a : anchors) {
        double denom = 0.0;
        for (std::size_t c : contrast) {
            denom += std::exp(cos_sim(h, c, e, a) / tau);
            denom += std::exp(cos_sim(e, c, e, a) / tau);
        }
        total += std::log(denom) - cos_sim(h, a, e, a) / tau;
    }
    return total;
}

// BPR written directly: -sum log(1 / (1 + exp(-(pos - neg)))).
inline double direct_bpr_loss(const DenseMatrix& fu, const DenseMatrix& fi,
                              const std::vector<std::size_t>& users,
                              const std::vector<std::size_t>& pos,
                              const std::vector<std::size_t>& neg) {
    double total = 0.0;
    for (std::size_t b = 0; b < users.size(); ++b) {
        const double sp = mmhcl::dot(fu.row(users[b]), fi.row(pos[b]));
        const double sn = mmhcl::dot(fu.row(users[b]), fi.row(neg[b]));
        total += -std::log(1.0 / (1.0 + std::exp(-(sp - sn))));
    }
    return total;
}

// Central-difference gradient of a scalar function of one table entry.
inline double central_difference(const std::function<double(double)>& f_of_entry, double x0,
                                 double step) {
    return (f_of_entry(x0 + step) - f_of_entry(x0 - step)) / (2.0 * step);
}

// Relative error with an absolute floor, for comparing analytic and
// numerical gradients whose entries may be legitimately near zero.
inline double rel_err(double a, double b, double floor_value) {
    return std::abs(a - b) / std::max({floor_value, std::abs(a), std::abs(b)});
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// Brute-force ranking: every item scored, training items removed, sorted by
// (score desc, index asc), truncated to k.
inline std::vector<std::size_t> rank_user(const DenseMatrix& fu, const DenseMatrix& fi,
                                          std::size_t user, const std::vector<std::size_t>& mask,
                                          std::size_t k) {
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < fi.rows(); ++i) {
        if (std::find(mask.begin(), mask.end(), i) != mask.end()) continue;
        scored.emplace_back(mmhcl::dot(fu.row(user), fi.row(i)), i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < std::min(k, scored.size()); ++r) out.push_back(scored[r].second);
    return out;
}

}  // namespace oracles
