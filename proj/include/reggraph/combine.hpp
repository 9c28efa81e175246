#pragma once

#include "reggraph/graph.hpp"
#include "reggraph/operators.hpp"

namespace reggraph {

namespace detail {

inline void merge_with_prefix(const reg_graph& g, const std::string& prefix, std::vector<graph_node>& nodes,
                              std::vector<graph_edge>& edges) {
    for (const auto& n : g.nodes()) {
        graph_node copy = n;
        copy.id = prefix + n.id;
        nodes.push_back(std::move(copy));
    }
    for (const auto& e : g.edges()) {
        graph_edge copy = e;
        copy.tail = prefix + e.tail;
        copy.head = prefix + e.head;
        edges.push_back(std::move(copy));
    }
}

}  // namespace detail

/// Infimal convolution of two graphs over a joint space: new root and a
/// splitting node, identities forward, the given embeddings backward, and the
/// combination weight on the second branch. Realizes
/// R(u) = inf_v R1(u - alpha_star * v) + R2(v).
inline reg_graph infconv_combine(const reg_graph& g1, const reg_graph& g2, double alpha_star,
                                 const space& joint, const linop& embed1, const linop& embed2,
                                 const std::string& weight_name = "alpha*") {
    g1.require_valid();
    g2.require_valid();
    if (alpha_star < 0) throw std::invalid_argument("infconv_combine: weight must be nonnegative");
    if (!(embed1.domain() == g1.root_space()) || embed1.codomain().dim() != joint.dim())
        throw dimension_error("infconv_combine: embedding of the first root does not match");
    if (!(embed2.domain() == g2.root_space()) || embed2.codomain().dim() != joint.dim())
        throw dimension_error("infconv_combine: embedding of the second root does not match");

    std::vector<graph_node> nodes;
    std::vector<graph_edge> edges;
    nodes.push_back({"root", joint, functional::indicator_zero(joint)});
    nodes.push_back({"split", joint, functional::indicator_zero(joint)});
    edges.push_back({"root", "split", linop::identity(joint), linop::identity(joint), 1.0, weight_kind::trivial, ""});
    edges.push_back({"split", "a." + g1.root_id(), linop::identity(g1.root_space()), embed1, 1.0,
                     weight_kind::trivial, ""});
    edges.push_back({"split", "b." + g2.root_id(), linop::identity(g2.root_space()), embed2, alpha_star,
                     weight_kind::learnable, weight_name});
    detail::merge_with_prefix(g1, "a.", nodes, edges);
    detail::merge_with_prefix(g2, "b.", nodes, edges);
    reg_graph out(std::move(nodes), std::move(edges), "root");
    out.require_valid();
    return out;
}

/// Sum of two graphs over a joint space through a duplication node. Realizes
/// R(u) = R1(u) + R2(u / alpha_star); alpha_star must be positive.
inline reg_graph sum_combine(const reg_graph& g1, const reg_graph& g2, double alpha_star, const space& joint,
                             const linop& embed1, const linop& embed2,
                             const std::string& weight_name = "alpha*") {
    g1.require_valid();
    g2.require_valid();
    if (!(alpha_star > 0)) throw std::invalid_argument("sum_combine: weight must be positive");
    if (!(embed1.domain() == g1.root_space()) || embed1.codomain().dim() != joint.dim())
        throw dimension_error("sum_combine: embedding of the first root does not match");
    if (!(embed2.domain() == g2.root_space()) || embed2.codomain().dim() != joint.dim())
        throw dimension_error("sum_combine: embedding of the second root does not match");

    const space pair_space = space::product({joint, joint});
    std::vector<graph_node> nodes;
    std::vector<graph_edge> edges;
    nodes.push_back({"root", joint, functional::indicator_zero(joint)});
    nodes.push_back({"split", pair_space, functional::indicator_zero(pair_space)});
    edges.push_back({"root", "split", ops::duplicate(joint), linop::identity(joint), 1.0, weight_kind::trivial, ""});
    edges.push_back({"split", "a." + g1.root_id(), linop::identity(g1.root_space()),
                     linop::composite({ops::block_embed(pair_space, 0), embed1}, "embed1"), 1.0,
                     weight_kind::trivial, ""});
    edges.push_back({"split", "b." + g2.root_id(), linop::identity(g2.root_space()),
                     linop::composite({ops::block_embed(pair_space, 1), embed2}, "embed2"), alpha_star,
                     weight_kind::learnable, weight_name});
    detail::merge_with_prefix(g1, "a.", nodes, edges);
    detail::merge_with_prefix(g2, "b.", nodes, edges);
    reg_graph out(std::move(nodes), std::move(edges), "root");
    out.require_valid();
    return out;
}

}  // namespace reggraph
