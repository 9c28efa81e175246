#pragma once

#include <optional>

#include "reggraph/graph.hpp"

namespace reggraph {

/// Block realization of the graph operator: rows indexed by nodes, columns by
/// edges; the incoming edge contributes its forward operator, outgoing edges
/// contribute -alpha * backward operator. The root row receives the input u
/// additively through its node functional.
class assembled_problem {
public:
    struct block {
        std::size_t node;  // row
        std::size_t edge;  // column
        bool incoming;     // true: forward op; false: -alpha * backward op
    };

    assembled_problem(reg_graph g, vec alpha) : graph_(std::move(g)), alpha_(std::move(alpha)) {
        graph_.require_valid();
        graph_.check_weights(alpha_);
        const auto& nodes = graph_.nodes();
        const auto& edges = graph_.edges();
        node_offsets_.resize(nodes.size() + 1, 0);
        for (std::size_t n = 0; n < nodes.size(); ++n)
            node_offsets_[n + 1] = node_offsets_[n] + nodes[n].node_space.dim();
        edge_offsets_.resize(edges.size() + 1, 0);
        for (std::size_t e = 0; e < edges.size(); ++e)
            edge_offsets_[e + 1] = edge_offsets_[e] + edges[e].forward_op.domain().dim();
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            for (std::size_t e = 0; e < edges.size(); ++e) {
                if (edges[e].head == nodes[n].id) blocks_.push_back({n, e, true});
                if (edges[e].tail == nodes[n].id) blocks_.push_back({n, e, false});
            }
        }
    }

    const reg_graph& graph() const { return graph_; }
    const vec& alpha() const { return alpha_; }
    const std::vector<block>& blocks() const { return blocks_; }

    long node_dim() const { return node_offsets_.back(); }
    long edge_dim() const { return edge_offsets_.back(); }
    long node_offset(std::size_t n) const { return node_offsets_[n]; }
    long edge_offset(std::size_t e) const { return edge_offsets_[e]; }

    std::size_t node_index(const std::string& id) const {
        for (std::size_t n = 0; n < graph_.nodes().size(); ++n)
            if (graph_.nodes()[n].id == id) return n;
        throw std::invalid_argument("assembled_problem: unknown node id " + id);
    }

    Eigen::Ref<const vec> edge_segment(const vec& w, std::size_t e) const {
        return w.segment(edge_offsets_[e], edge_offsets_[e + 1] - edge_offsets_[e]);
    }
    Eigen::Ref<const vec> node_segment(const vec& v, std::size_t n) const {
        return v.segment(node_offsets_[n], node_offsets_[n + 1] - node_offsets_[n]);
    }

    /// (Lambda w)_n over all node rows, stacked.
    vec apply(const vec& w) const {
        if (w.size() != edge_dim()) throw dimension_error("assembled_problem::apply: edge vector size mismatch");
        vec v = vec::Zero(node_dim());
        for (const auto& b : blocks_) {
            const auto& edge = graph_.edges()[b.edge];
            const vec ww = edge_segment(w, b.edge);
            if (b.incoming)
                v.segment(node_offsets_[b.node], edge.forward_op.codomain().dim()) += edge.forward_op.apply(ww);
            else
                v.segment(node_offsets_[b.node], edge.backward_op.codomain().dim()) -=
                    alpha_[b.edge] * edge.backward_op.apply(ww);
        }
        return v;
    }

    /// Adjoint of apply; per edge this is the dual-problem row
    /// forward^T v_head - alpha * backward^T v_tail.
    vec apply_adjoint(const vec& v) const {
        if (v.size() != node_dim()) throw dimension_error("assembled_problem::apply_adjoint: node vector size mismatch");
        vec w = vec::Zero(edge_dim());
        for (const auto& b : blocks_) {
            const auto& edge = graph_.edges()[b.edge];
            const vec vv = node_segment(v, b.node);
            if (b.incoming)
                w.segment(edge_offsets_[b.edge], edge.forward_op.domain().dim()) += edge.forward_op.apply_adjoint(vv);
            else
                w.segment(edge_offsets_[b.edge], edge.forward_op.domain().dim()) -=
                    alpha_[b.edge] * edge.backward_op.apply_adjoint(vv);
        }
        return w;
    }

    /// Values Psi_n((Lambda w)_n + [u at root]); indicator rows contribute
    /// through the residual, not the objective sum.
    struct objective_parts {
        double value = 0.0;
        double constraint_residual = 0.0;
    };

    objective_parts objective(const vec& w, const vec& u) const {
        const vec v = apply(w);
        objective_parts parts;
        const std::size_t root = node_index(graph_.root_id());
        double res2 = 0.0;
        for (std::size_t n = 0; n < graph_.nodes().size(); ++n) {
            vec vn = node_segment(v, n);
            if (n == root) vn += u;
            const auto& f = graph_.nodes()[n].node_functional;
            if (f.contributes_value()) parts.value += f.eval(vn);
            const double r = f.constraint_residual(vn);
            res2 += r * r;
        }
        parts.constraint_residual = std::sqrt(res2);
        return parts;
    }

private:
    reg_graph graph_;
    vec alpha_;
    std::vector<block> blocks_;
    std::vector<long> node_offsets_;
    std::vector<long> edge_offsets_;
};

inline assembled_problem assemble(const reg_graph& g, const vec& alpha) { return assembled_problem(g, alpha); }
inline assembled_problem assemble(const reg_graph& g) { return assembled_problem(g, g.weights()); }

/// Dual description: per-edge constraint rows of the adjoint block operator,
/// per-node conjugate functionals and the root linear term -<u, v_root>. The
/// dual value at a feasible v is <u, v_root> - sum_n conj(Psi_n)(v_n).
class dual_problem {
public:
    dual_problem(assembled_problem ap, vec u) : ap_(std::move(ap)), u_(std::move(u)) {
        if (u_.size() != ap_.graph().root_space().dim())
            throw dimension_error("dual_problem: u does not match the root space");
    }

    const assembled_problem& assembled() const { return ap_; }

    /// Constraint rows; v is dual-feasible when this vanishes.
    vec constraint(const vec& v) const { return ap_.apply_adjoint(v); }

    double value(const vec& v) const {
        const std::size_t root = ap_.node_index(ap_.graph().root_id());
        double s = u_.dot(ap_.node_segment(v, root));
        for (std::size_t n = 0; n < ap_.graph().nodes().size(); ++n)
            s -= ap_.graph().nodes()[n].node_functional.conjugate_eval(ap_.node_segment(v, n));
        return s;
    }

    /// Largest per-node dual-ball violation; dividing v by this makes every
    /// conjugate finite (infinity when impossible).
    double feasibility_factor(const vec& v) const {
        double rho = 1.0;
        for (std::size_t n = 0; n < ap_.graph().nodes().size(); ++n)
            rho = std::max(rho, ap_.graph().nodes()[n].node_functional.dual_feasibility_factor(ap_.node_segment(v, n)));
        return rho;
    }

private:
    assembled_problem ap_;
    vec u_;
};

inline dual_problem assemble_dual(const reg_graph& g, const vec& alpha, const vec& u) {
    return dual_problem(assemble(g, alpha), u);
}

/// min_x max_y sum_j <A_j x + b_j, y_j> - F_j^*(y_j) with G(x) = 0.
/// Primal blocks are edge variables (plus u for inverse problems); each dual
/// block carries one functional, its row of operators, and an offset.
struct saddle_spec {
    struct row_entry {
        std::size_t primal_block;
        linop op;
        double scale;
    };
    struct dual_block {
        functional f;
        vec offset;  // b_j
        std::vector<row_entry> entries;
        std::string label;
    };

    std::vector<long> primal_dims;
    std::vector<dual_block> duals;
    std::optional<std::size_t> u_block;  // index into primal blocks when solving for u jointly

    long primal_dim() const {
        long d = 0;
        for (long b : primal_dims) d += b;
        return d;
    }
    long dual_dim() const {
        long d = 0;
        for (const auto& blk : duals) d += blk.offset.size();
        return d;
    }
    long primal_offset(std::size_t i) const {
        long off = 0;
        for (std::size_t j = 0; j < i; ++j) off += primal_dims[j];
        return off;
    }
    long dual_offset(std::size_t j) const {
        long off = 0;
        for (std::size_t i = 0; i < j; ++i) off += duals[i].offset.size();
        return off;
    }

    /// A x, stacked over dual blocks (offsets not added).
    vec apply(const vec& x) const {
        vec y = vec::Zero(dual_dim());
        long off = 0;
        for (const auto& blk : duals) {
            const long m = blk.offset.size();
            for (const auto& en : blk.entries) {
                const long poff = primal_offset(en.primal_block);
                y.segment(off, m) += en.scale * en.op.apply(x.segment(poff, primal_dims[en.primal_block]));
            }
            off += m;
        }
        return y;
    }

    vec apply_adjoint(const vec& y) const {
        vec x = vec::Zero(primal_dim());
        long off = 0;
        for (const auto& blk : duals) {
            const long m = blk.offset.size();
            for (const auto& en : blk.entries) {
                const long poff = primal_offset(en.primal_block);
                x.segment(poff, primal_dims[en.primal_block]) +=
                    en.scale * en.op.apply_adjoint(y.segment(off, m));
            }
            off += m;
        }
        return x;
    }

    linop as_linop() const {
        auto self = std::make_shared<const saddle_spec>(*this);
        return linop::matrix_free(
            space::coeffs(static_cast<int>(primal_dim())), space::coeffs(static_cast<int>(dual_dim())),
            [self](const vec& x) { return self->apply(x); }, [self](const vec& y) { return self->apply_adjoint(y); },
            "saddle_operator");
    }

    /// Objective split at primal point x: finite functional values plus the
    /// indicator-row residual norm.
    struct objective_parts {
        double value = 0.0;
        double constraint_residual = 0.0;
    };
    objective_parts objective(const vec& x) const {
        objective_parts parts;
        const vec ax = apply(x);
        long off = 0;
        double res2 = 0.0;
        for (const auto& blk : duals) {
            const long m = blk.offset.size();
            const vec z = ax.segment(off, m) + blk.offset;
            if (blk.f.contributes_value()) parts.value += blk.f.eval(z);
            const double r = blk.f.constraint_residual(z);
            res2 += r * r;
            off += m;
        }
        parts.constraint_residual = std::sqrt(res2);
        return parts;
    }

    /// Dual objective sum_j <b_j, y_j> - F_j^*(y_j); -inf on infeasible y.
    double dual_value(const vec& y) const {
        double s = 0.0;
        long off = 0;
        for (const auto& blk : duals) {
            const long m = blk.offset.size();
            const vec yj = y.segment(off, m);
            const double conj = blk.f.conjugate_eval(yj);
            if (conj == inf) return -inf;
            s += blk.offset.dot(yj) - conj;
            off += m;
        }
        return s;
    }

    double dual_feasibility_factor(const vec& y) const {
        double rho = 1.0;
        long off = 0;
        for (const auto& blk : duals) {
            const long m = blk.offset.size();
            rho = std::max(rho, blk.f.dual_feasibility_factor(y.segment(off, m)));
            off += m;
        }
        return rho;
    }
};

/// Saddle spec for evaluating the graph functional at u: primal variables are
/// the edge variables, one dual block per node.
inline saddle_spec flatten_saddle(const assembled_problem& ap, const vec& u) {
    const auto& g = ap.graph();
    if (u.size() != g.root_space().dim()) throw dimension_error("flatten_saddle: u does not match the root space");
    saddle_spec spec;
    for (std::size_t e = 0; e < g.edges().size(); ++e)
        spec.primal_dims.push_back(g.edges()[e].forward_op.domain().dim());
    const std::size_t root = ap.node_index(g.root_id());
    for (std::size_t n = 0; n < g.nodes().size(); ++n) {
        saddle_spec::dual_block blk;
        blk.f = g.nodes()[n].node_functional;
        blk.offset = n == root ? u : vec(vec::Zero(g.nodes()[n].node_space.dim()));
        blk.label = g.nodes()[n].id;
        for (const auto& b : ap.blocks()) {
            if (b.node != n) continue;
            const auto& edge = g.edges()[b.edge];
            if (b.incoming) blk.entries.push_back({b.edge, edge.forward_op, 1.0});
            else blk.entries.push_back({b.edge, edge.backward_op, -ap.alpha()[b.edge]});
        }
        spec.duals.push_back(std::move(blk));
    }
    return spec;
}

/// Saddle spec for min_u S_f(K u) + beta * R_alpha(u) with the quadratic
/// discrepancy S_f = 0.5 || . - f ||^2: adds u as a primal block, scales the
/// node functionals by beta, and appends the data block with offset -f.
inline saddle_spec flatten_tikhonov(const assembled_problem& ap, const linop& forward, const vec& f, double beta) {
    const auto& g = ap.graph();
    if (!(beta > 0)) throw std::invalid_argument("flatten_tikhonov: beta must be positive");
    if (forward.domain().dim() != g.root_space().dim())
        throw dimension_error("flatten_tikhonov: forward operator domain != root space");
    if (f.size() != forward.codomain().dim()) throw dimension_error("flatten_tikhonov: data does not match codomain");

    saddle_spec spec;
    for (std::size_t e = 0; e < g.edges().size(); ++e)
        spec.primal_dims.push_back(g.edges()[e].forward_op.domain().dim());
    spec.primal_dims.push_back(g.root_space().dim());
    const std::size_t ublock = spec.primal_dims.size() - 1;
    spec.u_block = ublock;

    const std::size_t root = ap.node_index(g.root_id());
    for (std::size_t n = 0; n < g.nodes().size(); ++n) {
        saddle_spec::dual_block blk;
        blk.f = g.nodes()[n].node_functional.scaled(beta);
        blk.offset = vec::Zero(g.nodes()[n].node_space.dim());
        blk.label = g.nodes()[n].id;
        if (n == root) blk.entries.push_back({ublock, linop::identity(g.root_space()), 1.0});
        for (const auto& b : ap.blocks()) {
            if (b.node != n) continue;
            const auto& edge = g.edges()[b.edge];
            if (b.incoming) blk.entries.push_back({b.edge, edge.forward_op, 1.0});
            else blk.entries.push_back({b.edge, edge.backward_op, -ap.alpha()[b.edge]});
        }
        spec.duals.push_back(std::move(blk));
    }
    saddle_spec::dual_block data;
    data.f = functional::half_squared_l2(space::coeffs(static_cast<int>(f.size())), 1.0);
    data.offset = -f;
    data.entries.push_back({ublock, forward, 1.0});
    data.label = "data";
    spec.duals.push_back(std::move(data));
    return spec;
}

}  // namespace reggraph
