#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "mmhcl/common.hpp"
#include "mmhcl/dense.hpp"

namespace mmhcl {

// CSR sparse matrix. Column indices are strictly ascending within each row
// and no explicit zeros are stored, so a given logical matrix has exactly
// one representation and equality tests double as bit-identity tests.
struct SparseCsr {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    SparseCsr() = default;
    SparseCsr(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return col_idx.size(); }

    friend bool operator==(const SparseCsr& a, const SparseCsr& b) {
        return a.rows == b.rows && a.cols == b.cols && a.row_ptr == b.row_ptr &&
               a.col_idx == b.col_idx && a.values == b.values;
    }

    // Verifies the structural invariants above. Used by deserializers and tests.
    void validate() const {
        if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 || row_ptr.back() != nnz())
            throw DataError("SparseCsr: bad row_ptr");
        if (values.size() != col_idx.size()) throw DataError("SparseCsr: values/col_idx size mismatch");
        for (std::size_t r = 0; r < rows; ++r) {
            if (row_ptr[r] > row_ptr[r + 1]) throw DataError("SparseCsr: row_ptr not monotone");
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
                if (col_idx[k] >= cols) throw DataError("SparseCsr: column index out of range");
                if (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1])
                    throw DataError("SparseCsr: columns not strictly ascending");
                if (values[k] == 0.0) throw DataError("SparseCsr: explicit zero stored");
            }
        }
    }
};

struct CooEntry {
    std::size_t row;
    std::size_t col;
    double value;
};

// Builds CSR from unordered COO triples. Zero values are dropped; duplicate
// coordinates are an error because every builder upstream dedups first.
inline SparseCsr from_coo(std::size_t rows, std::size_t cols, std::vector<CooEntry> entries) {
    for (const auto& e : entries) {
        if (e.row >= rows || e.col >= cols) throw ParamError("from_coo: coordinate out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const CooEntry& a, const CooEntry& b) {
        return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseCsr m(rows, cols);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col)
            throw DataError("from_coo: duplicate coordinate");
        if (entries[i].value == 0.0) continue;
        m.col_idx.push_back(entries[i].col);
        m.values.push_back(entries[i].value);
        ++m.row_ptr[entries[i].row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
    return m;
}

inline SparseCsr from_dense(const DenseMatrix& d) {
    SparseCsr m(d.rows(), d.cols());
    for (std::size_t r = 0; r < d.rows(); ++r) {
        for (std::size_t c = 0; c < d.cols(); ++c) {
            if (d(r, c) != 0.0) {
                m.col_idx.push_back(c);
                m.values.push_back(d(r, c));
            }
        }
        m.row_ptr[r + 1] = m.col_idx.size();
    }
    return m;
}

inline DenseMatrix to_dense(const SparseCsr& m) {
    DenseMatrix d(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) d(r, m.col_idx[k]) = m.values[k];
    return d;
}

inline SparseCsr identity(std::size_t n) {
    SparseCsr m(n, n);
    m.col_idx.resize(n);
    m.values.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        m.col_idx[i] = i;
        m.row_ptr[i + 1] = i + 1;
    }
    return m;
}

// Counting-sort transpose; output keeps canonical column order.
inline SparseCsr transpose(const SparseCsr& m) {
    SparseCsr t(m.cols, m.rows);
    t.col_idx.resize(m.nnz());
    t.values.resize(m.nnz());
    for (std::size_t k = 0; k < m.nnz(); ++k) ++t.row_ptr[m.col_idx[k] + 1];
    for (std::size_t c = 0; c < m.cols; ++c) t.row_ptr[c + 1] += t.row_ptr[c];
    std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            const std::size_t pos = next[m.col_idx[k]]++;
            t.col_idx[pos] = r;
            t.values[pos] = m.values[k];
        }
    }
    return t;
}

// Sparse-dense product S * X with a fixed accumulation order (rows outer,
// stored entries in CSR order), so results are bit-reproducible.
inline DenseMatrix spmm(const SparseCsr& s, const DenseMatrix& x) {
    if (s.cols != x.rows()) throw ShapeError("spmm: inner dimensions disagree");
    DenseMatrix out(s.rows, x.cols());
    for (std::size_t r = 0; r < s.rows; ++r) {
        auto out_row = out.row(r);
        for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
            const double v = s.values[k];
            const auto x_row = x.row(s.col_idx[k]);
            for (std::size_t c = 0; c < x.cols(); ++c) out_row[c] += v * x_row[c];
        }
    }
    return out;
}

inline std::vector<double> row_sums(const SparseCsr& m) {
    std::vector<double> s(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) s[r] += m.values[k];
    return s;
}

inline std::vector<double> col_sums(const SparseCsr& m) {
    std::vector<double> s(m.cols, 0.0);
    for (std::size_t k = 0; k < m.nnz(); ++k) s[m.col_idx[k]] += m.values[k];
    return s;
}

// Horizontal concatenation [a | b | ...]; all blocks share the row count.
inline SparseCsr hstack(const std::vector<SparseCsr>& blocks) {
    if (blocks.empty()) throw ParamError("hstack: no blocks");
    const std::size_t rows = blocks.front().rows;
    std::size_t cols = 0;
    for (const auto& b : blocks) {
        if (b.rows != rows) throw ShapeError("hstack: row counts disagree");
        cols += b.cols;
    }
    SparseCsr out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t offset = 0;
        for (const auto& b : blocks) {
            for (std::size_t k = b.row_ptr[r]; k < b.row_ptr[r + 1]; ++k) {
                out.col_idx.push_back(offset + b.col_idx[k]);
                out.values.push_back(b.values[k]);
            }
            offset += b.cols;
        }
        out.row_ptr[r + 1] = out.col_idx.size();
    }
    return out;
}

}  // namespace mmhcl
