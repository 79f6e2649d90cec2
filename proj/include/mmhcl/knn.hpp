#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "mmhcl/dense.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

// Binary K-nearest-neighbour matrix under cosine similarity, one row per
// feature row. Ties break toward the lower column index; the self column of
// a nonzero row scores exactly 1 and is therefore always selected. Zero
// feature rows carry no direction, so they keep only a self-loop.
inline SparseCsr cosine_topk(const DenseMatrix& features, std::size_t k) {
    if (k == 0) throw ParamError("cosine_topk: k must be positive");
    const std::size_t n = features.rows();
    const DenseMatrix unit = row_l2_normalize(features);
    std::vector<bool> zero_row(n);
    for (std::size_t i = 0; i < n; ++i) zero_row[i] = row_norm(features, i) == 0.0;

    SparseCsr out(n, n);
    const std::size_t keep = std::min(k, n);
    std::vector<double> sim(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (zero_row[i]) {
            out.col_idx.push_back(i);
            out.values.push_back(1.0);
            out.row_ptr[i + 1] = out.col_idx.size();
            continue;
        }
        for (std::size_t j = 0; j < n; ++j)
            sim[j] = (j == i) ? 1.0 : dot(unit.row(i), unit.row(j));
        std::iota(order.begin(), order.end(), std::size_t{0});
        const auto better = [&](std::size_t a, std::size_t b) {
            if (sim[a] != sim[b]) return sim[a] > sim[b];
            return a < b;
        };
        std::nth_element(order.begin(), order.begin() + (keep - 1), order.end(), better);
        std::sort(order.begin(), order.begin() + keep);
        for (std::size_t j = 0; j < keep; ++j) {
            out.col_idx.push_back(order[j]);
            out.values.push_back(1.0);
        }
        out.row_ptr[i + 1] = out.col_idx.size();
    }
    return out;
}

}  // namespace mmhcl
