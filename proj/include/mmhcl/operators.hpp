#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "mmhcl/dense.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

// A self-adjoint linear map on node embeddings. Both propagation operators
// and the normalized bipartite backbone implement this interface; the
// autograd layer relies on self-adjointness to reuse apply() in backward.
class SymmetricMap {
public:
    virtual ~SymmetricMap() = default;
    virtual std::size_t node_count() const = 0;
    virtual DenseMatrix apply(const DenseMatrix& x) const = 0;
};

namespace detail {

inline void scale_rows_inplace(DenseMatrix& x, const std::vector<double>& s) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double f = s[r];
        for (double& v : x.row(r)) v *= f;
    }
}

}  // namespace detail

// Degree-normalized hypergraph propagation D^{-1/2} B (W_e) B^T D^{-1/2},
// held in factored form; the dense n x n product is never materialized.
// B is the node-by-hyperedge incidence. With hgnn_style the optional W_e
// divides each hyperedge by its degree; otherwise W_e is identity. Node
// degrees count hyperedge weight reachable from the node, d = B W_e colsum(B)
// in the identity case reduces to d_v = sum_e B_ve * |e|.
class PropagationOperator final : public SymmetricMap {
public:
    PropagationOperator() = default;
    PropagationOperator(SparseCsr incidence, bool hgnn_style)
        : incidence_(std::move(incidence)),
          incidence_t_(transpose(incidence_)),
          hgnn_style_(hgnn_style) {
        const std::vector<double> edge_degree = col_sums(incidence_);
        inv_edge_degree_.assign(edge_degree.size(), 0.0);
        for (std::size_t e = 0; e < edge_degree.size(); ++e)
            if (edge_degree[e] > 0.0) inv_edge_degree_[e] = 1.0 / edge_degree[e];

        std::vector<double> node_degree(incidence_.rows, 0.0);
        for (std::size_t r = 0; r < incidence_.rows; ++r) {
            for (std::size_t k = incidence_.row_ptr[r]; k < incidence_.row_ptr[r + 1]; ++k) {
                const std::size_t e = incidence_.col_idx[k];
                const double w = hgnn_style_ ? edge_degree[e] * inv_edge_degree_[e] : edge_degree[e];
                node_degree[r] += incidence_.values[k] * w;
            }
        }
        inv_sqrt_degree_.assign(node_degree.size(), 0.0);
        for (std::size_t v = 0; v < node_degree.size(); ++v)
            if (node_degree[v] > 0.0) inv_sqrt_degree_[v] = 1.0 / std::sqrt(node_degree[v]);
    }

    std::size_t node_count() const override { return incidence_.rows; }
    std::size_t hyperedge_count() const { return incidence_.cols; }
    const SparseCsr& incidence() const { return incidence_; }
    bool hgnn_style() const { return hgnn_style_; }
    const std::vector<double>& inv_sqrt_degree() const { return inv_sqrt_degree_; }

    DenseMatrix apply(const DenseMatrix& x) const override {
        if (x.rows() != incidence_.rows) throw ShapeError("PropagationOperator::apply: row count mismatch");
        DenseMatrix scaled = x;
        detail::scale_rows_inplace(scaled, inv_sqrt_degree_);
        DenseMatrix mid = spmm(incidence_t_, scaled);
        if (hgnn_style_) detail::scale_rows_inplace(mid, inv_edge_degree_);
        DenseMatrix out = spmm(incidence_, mid);
        detail::scale_rows_inplace(out, inv_sqrt_degree_);
        return out;
    }

    friend bool operator==(const PropagationOperator& a, const PropagationOperator& b) {
        return a.incidence_ == b.incidence_ && a.hgnn_style_ == b.hgnn_style_;
    }

private:
    SparseCsr incidence_;
    SparseCsr incidence_t_;
    std::vector<double> inv_sqrt_degree_;
    std::vector<double> inv_edge_degree_;
    bool hgnn_style_ = false;
};

// Validates the incidence matrix (nonnegative weights) and precomputes the
// normalization. Isolated nodes keep inv-sqrt degree 0 and map to zero rows.
inline PropagationOperator make_operator(SparseCsr incidence, bool hgnn_style = false) {
    incidence.validate();
    for (double v : incidence.values)
        if (v < 0.0) throw DataError("make_operator: negative incidence weight");
    return PropagationOperator(std::move(incidence), hgnn_style);
}

// A symmetric sparse matrix applied as-is. Used for the normalized bipartite
// interaction graph, whose (users+items)-square adjacency is already built
// with symmetric entries.
class AdjacencyOperator final : public SymmetricMap {
public:
    AdjacencyOperator() = default;
    explicit AdjacencyOperator(SparseCsr adjacency) : adjacency_(std::move(adjacency)) {
        if (adjacency_.rows != adjacency_.cols)
            throw ShapeError("AdjacencyOperator: matrix must be square");
    }

    std::size_t node_count() const override { return adjacency_.rows; }
    const SparseCsr& adjacency() const { return adjacency_; }

    DenseMatrix apply(const DenseMatrix& x) const override {
        return spmm(adjacency_, x);
    }

    friend bool operator==(const AdjacencyOperator& a, const AdjacencyOperator& b) {
        return a.adjacency_ == b.adjacency_;
    }

private:
    SparseCsr adjacency_;
};

}  // namespace mmhcl
