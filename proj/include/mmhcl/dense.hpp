#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mmhcl/common.hpp"
#include "mmhcl/rng.hpp"

namespace mmhcl {

// Row-major dense matrix of doubles. Parameter tables, propagated
// embeddings, and modality features all use this one container.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        DenseMatrix m;
        m.rows_ = rows.size();
        m.cols_ = rows.size() ? rows.begin()->size() : 0;
        m.data_.reserve(m.rows_ * m.cols_);
        for (const auto& r : rows) {
            if (r.size() != m.cols_) throw ShapeError("from_rows: ragged row lengths");
            m.data_.insert(m.data_.end(), r.begin(), r.end());
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

inline DenseMatrix scale(const DenseMatrix& a, double c) {
    DenseMatrix out = a;
    for (double& x : out.data()) x *= c;
    return out;
}

inline double frobenius_sq(const DenseMatrix& a) {
    double s = 0.0;
    for (double x : a.data()) s += x * x;
    return s;
}

inline bool all_finite(const DenseMatrix& a) {
    for (double x : a.data()) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline double row_norm(const DenseMatrix& a, std::size_t i) {
    return std::sqrt(dot(a.row(i), a.row(i)));
}

// L2-normalizes each row; rows with zero norm stay zero.
inline DenseMatrix row_l2_normalize(const DenseMatrix& a) {
    DenseMatrix out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double n = row_norm(a, i);
        if (n == 0.0) continue;
        for (double& x : out.row(i)) x /= n;
    }
    return out;
}

// Uniform Xavier/Glorot init in [-b, b], b = sqrt(6 / (rows + cols)).
inline DenseMatrix xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows == 0 || cols == 0) throw ParamError("xavier_init: rows and cols must be positive");
    DenseMatrix m(rows, cols);
    Rng rng(seed);
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& x : m.data()) x = (2.0 * uniform01(rng) - 1.0) * bound;
    return m;
}

}  // namespace mmhcl
