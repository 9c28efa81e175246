#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reggraph/functionals.hpp"
#include "reggraph/linop.hpp"

namespace reggraph {

struct graph_node {
    std::string id;
    space node_space;
    functional node_functional;
};

enum class weight_kind { trivial, learnable };

/// Directed tree edge: forward_op maps the edge variable into the head node
/// space, backward_op maps it into the tail node space.
struct graph_edge {
    std::string tail;
    std::string head;
    linop forward_op;   // edge space -> head space
    linop backward_op;  // edge space -> tail space
    double weight = 1.0;
    weight_kind kind = weight_kind::trivial;
    std::string weight_name;  // label for nontrivial weights (reports, CLI)
};

struct graph_violation {
    std::string code;  // "cycle", "orphan", "dimension-mismatch", ...
    std::string detail;
};

/// Rooted tree of node functionals and edge operator pairs; the central
/// structure of the library. Immutable once validated.
class reg_graph {
public:
    reg_graph() = default;  // empty placeholder; fails validate()

    reg_graph(std::vector<graph_node> nodes, std::vector<graph_edge> edges, std::string root_id)
        : nodes_(std::move(nodes)), edges_(std::move(edges)), root_(std::move(root_id)) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_[nodes_[i].id] = i;
    }

    const std::vector<graph_node>& nodes() const { return nodes_; }
    const std::vector<graph_edge>& edges() const { return edges_; }
    const std::string& root_id() const { return root_; }

    const graph_node& node(const std::string& id) const {
        auto it = node_index_.find(id);
        if (it == node_index_.end()) throw std::invalid_argument("reg_graph: unknown node '" + id + "'");
        return nodes_[it->second];
    }
    bool has_node(const std::string& id) const { return node_index_.count(id) > 0; }

    const graph_node& root() const { return node(root_); }
    const space& root_space() const { return root().node_space; }

    /// Stored per-edge weights (defaults; operations may take overrides).
    vec weights() const {
        vec a(static_cast<long>(edges_.size()));
        for (std::size_t e = 0; e < edges_.size(); ++e) a[e] = edges_[e].weight;
        return a;
    }

    std::vector<std::size_t> outgoing(const std::string& id) const {
        std::vector<std::size_t> out;
        for (std::size_t e = 0; e < edges_.size(); ++e)
            if (edges_[e].tail == id) out.push_back(e);
        return out;
    }

    std::optional<std::size_t> incoming(const std::string& id) const {
        for (std::size_t e = 0; e < edges_.size(); ++e)
            if (edges_[e].head == id) return e;
        return std::nullopt;
    }

    bool is_leaf(const std::string& id) const { return outgoing(id).empty(); }

    long total_edge_dim() const {
        long d = 0;
        for (const auto& e : edges_) d += e.forward_op.domain().dim();
        return d;
    }

    /// Nodes ordered root-first (parents before children). Requires validity.
    std::vector<std::string> topological_order() const {
        std::vector<std::string> order;
        std::vector<std::string> stack = {root_};
        while (!stack.empty()) {
            std::string id = stack.back();
            stack.pop_back();
            order.push_back(id);
            auto out = outgoing(id);
            for (auto it = out.rbegin(); it != out.rend(); ++it) stack.push_back(edges_[*it].head);
        }
        return order;
    }

    std::vector<graph_violation> validate() const {
        std::vector<graph_violation> v;
        if (nodes_.empty()) {
            v.push_back({"empty", "graph has no nodes"});
            return v;
        }
        if (!node_index_.count(root_)) {
            v.push_back({"root-missing", "root id '" + root_ + "' is not a node"});
            return v;
        }
        std::set<std::string> ids;
        for (const auto& n : nodes_) {
            if (!ids.insert(n.id).second) v.push_back({"duplicate-node", n.id});
        }
        if (edges_.size() != nodes_.size() - 1)
            v.push_back({"tree-count", "|E| = " + std::to_string(edges_.size()) + " but |V| - 1 = " +
                                            std::to_string(nodes_.size() - 1)});
        std::map<std::string, int> indeg;
        for (const auto& n : nodes_) indeg[n.id] = 0;
        for (const auto& e : edges_) {
            if (!ids.count(e.tail)) v.push_back({"orphan", "edge tail '" + e.tail + "' is not a node"});
            if (!ids.count(e.head)) v.push_back({"orphan", "edge head '" + e.head + "' is not a node"});
            if (ids.count(e.head)) ++indeg[e.head];
        }
        if (indeg.count(root_) && indeg[root_] != 0) v.push_back({"root-incoming", "root has an incoming edge"});
        for (const auto& [id, d] : indeg)
            if (id != root_ && d == 0) v.push_back({"connectivity", "node '" + id + "' unreachable (no incoming edge)"});
        for (const auto& [id, d] : indeg)
            if (d > 1) v.push_back({"tree", "node '" + id + "' has " + std::to_string(d) + " incoming edges"});

        // reachability: cycles or detached components surface here
        if (v.empty()) {
            std::set<std::string> seen;
            std::vector<std::string> stack = {root_};
            while (!stack.empty()) {
                std::string id = stack.back();
                stack.pop_back();
                if (!seen.insert(id).second) {
                    v.push_back({"cycle", "node '" + id + "' revisited"});
                    break;
                }
                for (auto e : outgoing(id)) stack.push_back(edges_[e].head);
            }
            if (seen.size() != nodes_.size()) v.push_back({"connectivity", "graph is not connected from the root"});
        }

        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const auto& e = edges_[i];
            if (!ids.count(e.tail) || !ids.count(e.head)) continue;
            if (!(e.forward_op.domain() == e.backward_op.domain()))
                v.push_back({"dimension-mismatch", "edge " + std::to_string(i) + ": forward and backward domains differ"});
            if (e.forward_op.codomain().dim() != node(e.head).node_space.dim())
                v.push_back({"dimension-mismatch",
                             "edge " + std::to_string(i) + ": forward codomain != head node space"});
            if (e.backward_op.codomain().dim() != node(e.tail).node_space.dim())
                v.push_back({"dimension-mismatch",
                             "edge " + std::to_string(i) + ": backward codomain != tail node space"});
            if (e.weight < 0) v.push_back({"weight", "edge " + std::to_string(i) + ": negative weight"});
            if (e.kind == weight_kind::trivial && e.weight != 1.0)
                v.push_back({"trivial-weight", "edge " + std::to_string(i) + ": trivial weight must equal 1"});
        }
        for (const auto& n : nodes_)
            if (n.node_functional.domain().dim() != n.node_space.dim())
                v.push_back({"dimension-mismatch", "node '" + n.id + "': functional domain != node space"});
        return v;
    }

    bool is_valid() const { return validate().empty(); }

    void require_valid() const {
        const auto v = validate();
        if (!v.empty()) throw std::invalid_argument("reg_graph: invalid graph: " + v[0].code + " (" + v[0].detail + ")");
    }

    void check_weights(const vec& alpha) const {
        if (alpha.size() != static_cast<long>(edges_.size()))
            throw dimension_error("weights: expected " + std::to_string(edges_.size()) + " entries");
        for (long i = 0; i < alpha.size(); ++i)
            if (alpha[i] < 0) throw std::invalid_argument("weights must be nonnegative");
    }

private:
    std::vector<graph_node> nodes_;
    std::vector<graph_edge> edges_;
    std::string root_;
    std::map<std::string, std::size_t> node_index_;
};

/// Subtree rooted at the head of one edge, with its edge indices mapped back
/// to the parent graph's edge order.
struct subtree_view {
    reg_graph graph;
    std::vector<std::size_t> edge_map;  // subtree edge i is parent edge edge_map[i]
};

inline subtree_view subtree_at_edge(const reg_graph& g, std::size_t edge_index) {
    const std::string sub_root = g.edges().at(edge_index).head;
    std::vector<graph_node> sn;
    std::vector<graph_edge> se;
    std::vector<std::size_t> emap;
    std::vector<std::string> stack = {sub_root};
    std::set<std::string> keep;
    while (!stack.empty()) {
        std::string id = stack.back();
        stack.pop_back();
        keep.insert(id);
        for (auto e : g.outgoing(id)) stack.push_back(g.edges()[e].head);
    }
    for (const auto& n : g.nodes())
        if (keep.count(n.id)) sn.push_back(n);
    for (std::size_t e = 0; e < g.edges().size(); ++e)
        if (keep.count(g.edges()[e].tail) && keep.count(g.edges()[e].head)) {
            se.push_back(g.edges()[e]);
            emap.push_back(e);
        }
    return {reg_graph(std::move(sn), std::move(se), sub_root), std::move(emap)};
}

/// All chains (edge sets of directed paths) starting at the root, plus the
/// empty set, each as a list of edge indices.
inline std::vector<std::vector<std::size_t>> enumerate_root_chains(const reg_graph& g) {
    std::vector<std::vector<std::size_t>> chains;
    chains.push_back({});  // the empty set
    std::vector<std::pair<std::string, std::vector<std::size_t>>> stack;
    stack.push_back({g.root_id(), {}});
    while (!stack.empty()) {
        auto [id, prefix] = stack.back();
        stack.pop_back();
        for (auto e : g.outgoing(id)) {
            auto chain = prefix;
            chain.push_back(e);
            chains.push_back(chain);
            stack.push_back({g.edges()[e].head, chain});
        }
    }
    return chains;
}

/// Constant bounding R_{a1} <= C * R_{a2} for a1 >= a2 componentwise: the
/// maximum over root chains (and the empty set) of prod a2_e / a1_e, with the
/// conventions prod over the empty set = 1 and 0/0 = 0.
inline double weight_ratio_bound(const reg_graph& g, const vec& alpha1, const vec& alpha2) {
    g.check_weights(alpha1);
    g.check_weights(alpha2);
    for (long e = 0; e < alpha1.size(); ++e)
        if (alpha1[e] < alpha2[e])
            throw std::invalid_argument("weight_ratio_bound: requires alpha1 >= alpha2 componentwise");
    double best = 0.0;
    for (const auto& chain : enumerate_root_chains(g)) {
        double prod = 1.0;
        for (auto e : chain) {
            if (alpha1[e] == 0.0) {
                prod *= 0.0;  // 0/0 convention (alpha2[e] = 0 is forced here)
            } else {
                prod *= alpha2[e] / alpha1[e];
            }
        }
        best = std::max(best, prod);
    }
    return best;
}

/// Maximum over root chains (and the empty set) of the weight product.
inline double max_chain_weight_product(const reg_graph& g, const vec& alpha) {
    g.check_weights(alpha);
    double best = 0.0;
    for (const auto& chain : enumerate_root_chains(g)) {
        double prod = 1.0;
        for (auto e : chain) prod *= alpha[e];
        best = std::max(best, prod);
    }
    return best;
}

struct convergence_factor {
    double value = 1.0;
    bool at_most_one = true;
};

/// Factor gamma_k of the parameter-semicontinuity bound: the minimum over the
/// empty set and the root chains whose limit weights are all positive of
/// prod alpha_k_e / alpha_limit_e. Returned raw, with a flag for gamma <= 1.
inline convergence_factor weight_convergence_factor(const reg_graph& g, const vec& alpha_limit,
                                                    const vec& alpha_k) {
    g.check_weights(alpha_limit);
    g.check_weights(alpha_k);
    for (long e = 0; e < alpha_k.size(); ++e)
        if (alpha_k[e] <= 0) throw std::invalid_argument("weight_convergence_factor: alpha_k must be positive");
    double best = 1.0;  // the empty chain
    for (const auto& chain : enumerate_root_chains(g)) {
        bool admissible = true;
        double prod = 1.0;
        for (auto e : chain) {
            if (alpha_limit[e] <= 0) {
                admissible = false;
                break;
            }
            prod *= alpha_k[e] / alpha_limit[e];
        }
        if (admissible) best = std::min(best, prod);
    }
    return {best, best <= 1.0};
}

/// Zero-weight limit graph: zero weights are reset to 1 and the node at the
/// head of each zero-weight edge gets the zero-indicator functional.
inline std::pair<reg_graph, vec> zero_weight_limit(const reg_graph& g, const vec& alpha) {
    g.check_weights(alpha);
    std::vector<graph_node> nodes = g.nodes();
    std::vector<graph_edge> edges = g.edges();
    vec lifted = alpha;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (alpha[e] == 0.0) {
            lifted[e] = 1.0;
            for (auto& n : nodes)
                if (n.id == edges[e].head) n.node_functional = functional::indicator_zero(n.node_space);
        }
        edges[e].weight = lifted[e];
    }
    return {reg_graph(std::move(nodes), std::move(edges), g.root_id()), lifted};
}

/// Grafts g2 under the given leaf of g through the supplied edge.
inline reg_graph append_graph(const reg_graph& g, const std::string& leaf_id, const reg_graph& g2,
                              linop forward_op, linop backward_op, double weight = 1.0,
                              weight_kind kind = weight_kind::trivial, const std::string& prefix = "sub.") {
    if (!g.is_leaf(leaf_id))
        throw std::invalid_argument("append_graph: '" + leaf_id + "' is not a leaf");
    std::vector<graph_node> nodes = g.nodes();
    std::vector<graph_edge> edges = g.edges();
    for (const auto& n : g2.nodes()) {
        graph_node copy = n;
        copy.id = prefix + n.id;
        if (g.has_node(copy.id)) throw std::invalid_argument("append_graph: node id collision at '" + copy.id + "'");
        nodes.push_back(std::move(copy));
    }
    for (const auto& e : g2.edges()) {
        graph_edge copy = e;
        copy.tail = prefix + e.tail;
        copy.head = prefix + e.head;
        edges.push_back(std::move(copy));
    }
    edges.push_back({leaf_id, prefix + g2.root_id(), std::move(forward_op), std::move(backward_op), weight, kind, ""});
    reg_graph out(std::move(nodes), std::move(edges), g.root_id());
    out.require_valid();
    return out;
}

}  // namespace reggraph
