#pragma once

#include <map>

#include "reggraph/analysis.hpp"
#include "reggraph/graph.hpp"

namespace reggraph {

/// Invariant subspace decomposition of a weighted graph: the subspace L of the
/// root space on which the functional is translation invariant, the per-edge
/// preimage spaces M^e = forward_op^{-1}(L^head-subgraph), and the projectors
/// P^e onto M^e.
struct invariant_subspace_result {
    mat root_basis;                       // orthonormal columns spanning L
    std::map<std::size_t, mat> edge_m_basis;      // per edge index: orthonormal basis of M^e
    std::map<std::size_t, mat> edge_projector;    // per edge index: dense P^e
    std::map<std::string, mat> node_basis;        // per node: L of the subgraph rooted there
};

/// Bottom-up recursion: leaves carry L = {0}; at each node,
/// L = span of the images (over positive-weight child edges) of
/// M^e = ker(forward_op) + least-squares lifts of basis(L^child ∩ rg(forward_op)).
inline invariant_subspace_result invariant_subspace(const reg_graph& g, const vec& alpha,
                                                    double range_tol = 1e-8, double rank_tol = 1e-10) {
    g.require_valid();
    g.check_weights(alpha);
    invariant_subspace_result out;

    auto order = g.topological_order();
    // children before parents
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const std::string& id = *it;
        const auto& node = g.node(id);
        const auto child_edges = g.outgoing(id);
        if (child_edges.empty()) {
            out.node_basis[id] = mat(node.node_space.dim(), 0);
            continue;
        }
        std::vector<mat> images;
        long span_cols = 0;
        for (auto e : child_edges) {
            const auto& edge = g.edges()[e];
            const mat theta = edge.forward_op.to_dense();
            const auto an = analyze(edge.forward_op, rank_tol);
            const mat& child_l = out.node_basis.at(edge.head);

            // rg(theta) basis from the analysis (left singular vectors), via
            // the materialized matrix applied to a spanning set of ker-orthogonal
            // directions; simpler and robust: orthonormal span of theta columns.
            const mat rg_basis = orthonormal_span(theta, rank_tol);
            const mat inter = subspace_intersection(child_l, rg_basis, range_tol);

            Eigen::CompleteOrthogonalDecomposition<mat> cod(theta);
            mat lifts(theta.cols(), inter.cols());
            long kept = 0;
            for (long j = 0; j < inter.cols(); ++j) {
                const vec l = inter.col(j);
                const vec w = cod.solve(l);  // least-squares, minimum norm
                if ((theta * w - l).norm() <= range_tol * std::max(1.0, l.norm())) {
                    lifts.col(kept++) = w;
                }
            }
            lifts.conservativeResize(Eigen::NoChange, kept);

            mat m_cols(theta.cols(), an.kernel_basis.cols() + kept);
            m_cols << an.kernel_basis, lifts;
            const mat m_basis = orthonormal_span(m_cols, rank_tol);
            out.edge_m_basis[e] = m_basis;

            // P^e = theta^+ P_{rg cap L} theta + P_ker  (a projection onto M^e)
            const mat p_inter = inter * inter.transpose();
            mat proj = an.kernel_projector;
            if (inter.cols() > 0) proj += cod.pseudoInverse() * (p_inter * theta);
            out.edge_projector[e] = proj;

            if (alpha[e] > 0.0 && m_basis.cols() > 0) {
                const mat phi = edge.backward_op.to_dense();
                images.push_back(phi * m_basis);
                span_cols += m_basis.cols();
            }
        }
        mat stacked(node.node_space.dim(), span_cols);
        long off = 0;
        for (const auto& im : images) {
            stacked.middleCols(off, im.cols()) = im;
            off += im.cols();
        }
        out.node_basis[id] = orthonormal_span(stacked, rank_tol);
    }
    out.root_basis = out.node_basis.at(g.root_id());
    return out;
}

}  // namespace reggraph
