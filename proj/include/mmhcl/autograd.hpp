#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "mmhcl/common.hpp"
#include "mmhcl/dense.hpp"
#include "mmhcl/operators.hpp"

namespace mmhcl {

using NodeId = std::size_t;

// Gradients of a scalar loss with respect to trainable leaves, keyed by the
// leaf's node id. Leaves the loss does not reach are absent.
struct Gradients {
    std::map<NodeId, DenseMatrix> by_leaf;

    bool contains(NodeId id) const { return by_leaf.count(id) != 0; }
    const DenseMatrix& at(NodeId id) const {
        auto it = by_leaf.find(id);
        if (it == by_leaf.end()) throw ParamError("Gradients: no gradient recorded for node");
        return it->second;
    }
};

namespace detail {

inline void axpy(std::span<double> y, double a, std::span<const double> x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace detail

// Eager reverse-mode tape over a fixed set of matrix primitives. Forward
// values are computed at record time; backward() replays the tape once in
// reverse with a fixed accumulation order, so gradients from identical tapes
// are bit-identical. Operator handles passed to apply_operator must outlive
// the tape.
class Tape {
    enum class OpKind {
        leaf,
        constant,
        apply_op,
        add,
        scale,
        gather_rows,
        row_normalize,
        row_mean,
        concat_rows,
        rowwise_dot,
        log_sigmoid,
        contrastive,
        sum,
        frobenius_sq,
    };

    // Saved state for the fused contrastive log-softmax node: normalized
    // inputs, their raw row norms, and the two softmax mass blocks.
    struct ContrastPayload {
        std::vector<std::size_t> anchors;
        std::vector<std::size_t> contrast;
        double tau = 1.0;
        DenseMatrix h_unit, e_unit;
        std::vector<double> h_norm, e_norm;
        DenseMatrix p_h, p_e;  // anchors x contrast
    };

    struct TapeNode {
        OpKind kind;
        std::vector<NodeId> inputs;
        DenseMatrix value;
        double factor = 0.0;                     // scale
        std::vector<std::size_t> indices;        // gather_rows
        const SymmetricMap* map = nullptr;       // apply_op
        std::vector<double> row_norms;           // row_normalize
        std::unique_ptr<ContrastPayload> cpay;   // contrastive
    };

public:
    std::size_t size() const { return nodes_.size(); }

    const DenseMatrix& value(NodeId id) const { return node(id).value; }

    double scalar_value(NodeId id) const {
        const DenseMatrix& v = value(id);
        if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar_value: node is not 1x1");
        return v(0, 0);
    }

    // Trainable input; the table is copied onto the tape.
    NodeId leaf(const DenseMatrix& table) {
        return push({OpKind::leaf, {}, table, 0.0, {}, nullptr, {}, nullptr});
    }

    // Non-trainable input. Receives no gradient entry.
    NodeId constant(DenseMatrix v) {
        return push({OpKind::constant, {}, std::move(v), 0.0, {}, nullptr, {}, nullptr});
    }

    NodeId apply_operator(const SymmetricMap& op, NodeId x) {
        if (op.node_count() != value(x).rows())
            throw ShapeError("apply_operator: operator size does not match input rows");
        return push({OpKind::apply_op, {x}, op.apply(value(x)), 0.0, {}, &op, {}, nullptr});
    }

    NodeId add(NodeId a, NodeId b) {
        return push({OpKind::add, {a, b}, mmhcl::add(value(a), value(b)), 0.0, {}, nullptr, {}, nullptr});
    }

    NodeId scale(NodeId a, double c) {
        return push({OpKind::scale, {a}, mmhcl::scale(value(a), c), c, {}, nullptr, {}, nullptr});
    }

    NodeId gather_rows(NodeId a, std::vector<std::size_t> rows) {
        const DenseMatrix& x = value(a);
        DenseMatrix out(rows.size(), x.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] >= x.rows()) throw ParamError("gather_rows: row index out of range");
            std::copy(x.row(rows[r]).begin(), x.row(rows[r]).end(), out.row(r).begin());
        }
        return push({OpKind::gather_rows, {a}, std::move(out), 0.0, std::move(rows), nullptr, {}, nullptr});
    }

    NodeId row_l2_normalize(NodeId a) {
        const DenseMatrix& x = value(a);
        std::vector<double> norms(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) norms[r] = row_norm(x, r);
        return push({OpKind::row_normalize, {a}, mmhcl::row_l2_normalize(x), 0.0, {}, nullptr,
                     std::move(norms), nullptr});
    }

    // Elementwise mean of equally shaped inputs.
    NodeId row_mean(const std::vector<NodeId>& xs) {
        if (xs.empty()) throw ParamError("row_mean: no inputs");
        DenseMatrix out = value(xs[0]);
        for (std::size_t i = 1; i < xs.size(); ++i) out = mmhcl::add(out, value(xs[i]));
        out = mmhcl::scale(out, 1.0 / static_cast<double>(xs.size()));
        return push({OpKind::row_mean, xs, std::move(out), 0.0, {}, nullptr, {}, nullptr});
    }

    NodeId concat_rows(NodeId top, NodeId bottom) {
        const DenseMatrix& t = value(top);
        const DenseMatrix& b = value(bottom);
        if (t.cols() != b.cols()) throw ShapeError("concat_rows: column counts disagree");
        DenseMatrix out(t.rows() + b.rows(), t.cols());
        std::copy(t.data().begin(), t.data().end(), out.data().begin());
        std::copy(b.data().begin(), b.data().end(), out.data().begin() + t.size());
        return push({OpKind::concat_rows, {top, bottom}, std::move(out), 0.0, {}, nullptr, {}, nullptr});
    }

    NodeId rowwise_dot(NodeId a, NodeId b) {
        const DenseMatrix& x = value(a);
        const DenseMatrix& y = value(b);
        if (!x.same_shape(y)) throw ShapeError("rowwise_dot: shape mismatch");
        DenseMatrix out(x.rows(), 1);
        for (std::size_t r = 0; r < x.rows(); ++r) out(r, 0) = dot(x.row(r), y.row(r));
        return push({OpKind::rowwise_dot, {a, b}, std::move(out), 0.0, {}, nullptr, {}, nullptr});
    }

    NodeId log_sigmoid(NodeId a) {
        DenseMatrix out = value(a);
        for (double& v : out.data()) v = stable_log_sigmoid(v);
        return push({OpKind::log_sigmoid, {a}, std::move(out), 0.0, {}, nullptr, {}, nullptr});
    }

    // Per-anchor contrastive alignment loss between two views h and e:
    //   out[a] = log( sum_{c in C} exp(s(h_c, e_a)) + exp(s(e_c, e_a)) ) - s(h_a, e_a)
    // where s is cosine similarity scaled by 1/tau and rows are compared
    // after L2 normalization (zero-norm rows contribute similarity 0). The
    // log-sum-exp is evaluated with a max shift, so large 1/tau is safe.
    NodeId contrastive_log_softmax(NodeId h, NodeId e, std::vector<std::size_t> anchors,
                                   std::vector<std::size_t> contrast, double tau) {
        const DenseMatrix& hv = value(h);
        const DenseMatrix& ev = value(e);
        if (!hv.same_shape(ev)) throw ShapeError("contrastive_log_softmax: view shapes disagree");
        if (tau <= 0.0) throw ParamError("contrastive_log_softmax: tau must be positive");
        if (anchors.empty() || contrast.empty())
            throw ParamError("contrastive_log_softmax: empty anchor or contrast set");
        for (std::size_t idx : anchors)
            if (idx >= hv.rows()) throw ParamError("contrastive_log_softmax: anchor out of range");
        for (std::size_t idx : contrast)
            if (idx >= hv.rows()) throw ParamError("contrastive_log_softmax: contrast index out of range");

        auto pay = std::make_unique<ContrastPayload>();
        pay->tau = tau;
        pay->anchors = std::move(anchors);
        pay->contrast = std::move(contrast);
        pay->h_unit = mmhcl::row_l2_normalize(hv);
        pay->e_unit = mmhcl::row_l2_normalize(ev);
        pay->h_norm.resize(hv.rows());
        pay->e_norm.resize(ev.rows());
        for (std::size_t r = 0; r < hv.rows(); ++r) {
            pay->h_norm[r] = row_norm(hv, r);
            pay->e_norm[r] = row_norm(ev, r);
        }
        const std::size_t ns = pay->anchors.size();
        const std::size_t nc = pay->contrast.size();
        pay->p_h = DenseMatrix(ns, nc);
        pay->p_e = DenseMatrix(ns, nc);
        DenseMatrix out(ns, 1);
        for (std::size_t ai = 0; ai < ns; ++ai) {
            const std::size_t a = pay->anchors[ai];
            const auto ea = pay->e_unit.row(a);
            const double aligned = dot(pay->h_unit.row(a), ea) / tau;
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t ci = 0; ci < nc; ++ci) {
                const std::size_t c = pay->contrast[ci];
                pay->p_h(ai, ci) = dot(pay->h_unit.row(c), ea) / tau;
                pay->p_e(ai, ci) = dot(pay->e_unit.row(c), ea) / tau;
                hi = std::max(hi, std::max(pay->p_h(ai, ci), pay->p_e(ai, ci)));
            }
            double z = 0.0;
            for (std::size_t ci = 0; ci < nc; ++ci) {
                pay->p_h(ai, ci) = std::exp(pay->p_h(ai, ci) - hi);
                z += pay->p_h(ai, ci);
            }
            for (std::size_t ci = 0; ci < nc; ++ci) {
                pay->p_e(ai, ci) = std::exp(pay->p_e(ai, ci) - hi);
                z += pay->p_e(ai, ci);
            }
            for (std::size_t ci = 0; ci < nc; ++ci) {
                pay->p_h(ai, ci) /= z;
                pay->p_e(ai, ci) /= z;
            }
            out(ai, 0) = hi + std::log(z) - aligned;
        }
        TapeNode n{OpKind::contrastive, {h, e}, std::move(out), 0.0, {}, nullptr, {}, std::move(pay)};
        return push(std::move(n));
    }

    NodeId sum(NodeId a) {
        double s = 0.0;
        for (double v : value(a).data()) s += v;
        DenseMatrix out(1, 1);
        out(0, 0) = s;
        return push({OpKind::sum, {a}, std::move(out), 0.0, {}, nullptr, {}, nullptr});
    }

    NodeId frobenius_sq(NodeId a) {
        DenseMatrix out(1, 1);
        out(0, 0) = mmhcl::frobenius_sq(value(a));
        return push({OpKind::frobenius_sq, {a}, std::move(out), 0.0, {}, nullptr, {}, nullptr});
    }

    // Reverse sweep from a scalar loss node. Only leaves reachable from the
    // loss appear in the result.
    Gradients backward(NodeId loss) const {
        const TapeNode& ln = node(loss);
        if (ln.value.rows() != 1 || ln.value.cols() != 1)
            throw ShapeError("backward: loss node must be 1x1");
        std::vector<DenseMatrix> grad(nodes_.size());
        std::vector<unsigned char> seen(nodes_.size(), 0);
        auto ensure = [&](NodeId id) -> DenseMatrix& {
            if (!seen[id]) {
                grad[id] = DenseMatrix(nodes_[id].value.rows(), nodes_[id].value.cols());
                seen[id] = 1;
            }
            return grad[id];
        };
        auto add_to = [&](NodeId id, const DenseMatrix& delta) {
            DenseMatrix& g = ensure(id);
            for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += delta.data()[i];
        };
        ensure(loss)(0, 0) = 1.0;

        for (NodeId id = loss + 1; id-- > 0;) {
            if (!seen[id]) continue;
            const TapeNode& n = nodes_[id];
            const DenseMatrix& g = grad[id];
            switch (n.kind) {
                case OpKind::leaf:
                case OpKind::constant:
                    break;
                case OpKind::apply_op:
                    add_to(n.inputs[0], n.map->apply(g));  // self-adjoint map
                    break;
                case OpKind::add:
                    add_to(n.inputs[0], g);
                    add_to(n.inputs[1], g);
                    break;
                case OpKind::scale:
                    add_to(n.inputs[0], mmhcl::scale(g, n.factor));
                    break;
                case OpKind::gather_rows: {
                    DenseMatrix& gin = ensure(n.inputs[0]);
                    for (std::size_t r = 0; r < n.indices.size(); ++r)
                        detail::axpy(gin.row(n.indices[r]), 1.0, g.row(r));
                    break;
                }
                case OpKind::row_normalize: {
                    DenseMatrix& gin = ensure(n.inputs[0]);
                    for (std::size_t r = 0; r < n.value.rows(); ++r) {
                        const double nr = n.row_norms[r];
                        if (nr == 0.0) continue;
                        const auto y = n.value.row(r);
                        const auto gy = g.row(r);
                        const double radial = dot(y, gy);
                        auto gi = gin.row(r);
                        for (std::size_t j = 0; j < gi.size(); ++j)
                            gi[j] += (gy[j] - y[j] * radial) / nr;
                    }
                    break;
                }
                case OpKind::row_mean: {
                    const DenseMatrix gshare =
                        mmhcl::scale(g, 1.0 / static_cast<double>(n.inputs.size()));
                    for (NodeId in : n.inputs) add_to(in, gshare);
                    break;
                }
                case OpKind::concat_rows: {
                    const std::size_t top_rows = nodes_[n.inputs[0]].value.rows();
                    DenseMatrix& gt = ensure(n.inputs[0]);
                    DenseMatrix& gb = ensure(n.inputs[1]);
                    for (std::size_t r = 0; r < top_rows; ++r) detail::axpy(gt.row(r), 1.0, g.row(r));
                    for (std::size_t r = 0; r < gb.rows(); ++r)
                        detail::axpy(gb.row(r), 1.0, g.row(top_rows + r));
                    break;
                }
                case OpKind::rowwise_dot: {
                    const DenseMatrix& a = nodes_[n.inputs[0]].value;
                    const DenseMatrix& b = nodes_[n.inputs[1]].value;
                    DenseMatrix& ga = ensure(n.inputs[0]);
                    DenseMatrix& gb = ensure(n.inputs[1]);
                    for (std::size_t r = 0; r < a.rows(); ++r) {
                        detail::axpy(ga.row(r), g(r, 0), b.row(r));
                        detail::axpy(gb.row(r), g(r, 0), a.row(r));
                    }
                    break;
                }
                case OpKind::log_sigmoid: {
                    const DenseMatrix& x = nodes_[n.inputs[0]].value;
                    DenseMatrix& gin = ensure(n.inputs[0]);
                    for (std::size_t i = 0; i < x.size(); ++i)
                        gin.data()[i] += g.data()[i] * sigmoid(-x.data()[i]);
                    break;
                }
                case OpKind::contrastive:
                    backward_contrastive(n, g, ensure);
                    break;
                case OpKind::sum: {
                    DenseMatrix& gin = ensure(n.inputs[0]);
                    const double gv = g(0, 0);
                    for (double& v : gin.data()) v += gv;
                    break;
                }
                case OpKind::frobenius_sq: {
                    const DenseMatrix& x = nodes_[n.inputs[0]].value;
                    DenseMatrix& gin = ensure(n.inputs[0]);
                    const double gv = 2.0 * g(0, 0);
                    for (std::size_t i = 0; i < x.size(); ++i) gin.data()[i] += gv * x.data()[i];
                    break;
                }
            }
        }

        Gradients out;
        for (NodeId id = 0; id < nodes_.size(); ++id)
            if (nodes_[id].kind == OpKind::leaf && seen[id]) out.by_leaf.emplace(id, std::move(grad[id]));
        return out;
    }

    static double stable_log_sigmoid(double x) {
        return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
    }

    static double sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

private:
    const TapeNode& node(NodeId id) const {
        if (id >= nodes_.size()) throw ParamError("Tape: unknown node id");
        return nodes_[id];
    }

    NodeId push(TapeNode n) {
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    template <typename Ensure>
    void backward_contrastive(const TapeNode& n, const DenseMatrix& g, Ensure&& ensure) const {
        const ContrastPayload& p = *n.cpay;
        const std::size_t rows = p.h_unit.rows();
        const std::size_t dim = p.h_unit.cols();
        const double tau = p.tau;
        DenseMatrix gh_hat(rows, dim);
        DenseMatrix ge_hat(rows, dim);
        for (std::size_t ai = 0; ai < p.anchors.size(); ++ai) {
            const std::size_t a = p.anchors[ai];
            const double w = g(ai, 0);
            if (w == 0.0) continue;
            detail::axpy(gh_hat.row(a), -w / tau, p.e_unit.row(a));
            detail::axpy(ge_hat.row(a), -w / tau, p.h_unit.row(a));
            for (std::size_t ci = 0; ci < p.contrast.size(); ++ci) {
                const std::size_t c = p.contrast[ci];
                const double wh = w * p.p_h(ai, ci) / tau;
                const double we = w * p.p_e(ai, ci) / tau;
                detail::axpy(gh_hat.row(c), wh, p.e_unit.row(a));
                detail::axpy(ge_hat.row(a), wh, p.h_unit.row(c));
                detail::axpy(ge_hat.row(c), we, p.e_unit.row(a));
                detail::axpy(ge_hat.row(a), we, p.e_unit.row(c));
            }
        }
        // Pull both accumulated cotangents through the row normalization.
        DenseMatrix& gh = ensure(n.inputs[0]);
        DenseMatrix& ge = ensure(n.inputs[1]);
        for (std::size_t r = 0; r < rows; ++r) {
            if (p.h_norm[r] > 0.0) {
                const auto y = p.h_unit.row(r);
                const auto gy = gh_hat.row(r);
                const double radial = dot(y, gy);
                auto dst = gh.row(r);
                for (std::size_t j = 0; j < dim; ++j) dst[j] += (gy[j] - y[j] * radial) / p.h_norm[r];
            }
            if (p.e_norm[r] > 0.0) {
                const auto y = p.e_unit.row(r);
                const auto gy = ge_hat.row(r);
                const double radial = dot(y, gy);
                auto dst = ge.row(r);
                for (std::size_t j = 0; j < dim; ++j) dst[j] += (gy[j] - y[j] * radial) / p.e_norm[r];
            }
        }
    }

    std::vector<TapeNode> nodes_;
};

}  // namespace mmhcl
