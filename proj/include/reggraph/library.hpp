#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reggraph/combine.hpp"
#include "reggraph/graph.hpp"
#include "reggraph/operators.hpp"

namespace reggraph::library {

enum class frame_kind { haar, dct, identity };

inline linop make_frame(frame_kind kind, const std::vector<int>& shape) {
    switch (kind) {
        case frame_kind::haar: return ops::haar(shape);
        case frame_kind::dct: return ops::dct(shape);
        case frame_kind::identity: {
            const space s = shape.size() == 1 ? space::scalar({shape[0]}) : space::scalar(shape);
            long n = s.dim();
            auto id = [](const vec& x) { return x; };
            return linop::matrix_free(s, space::coeffs(static_cast<int>(n)), id, id, "identity_frame")
                .with_norm_hint(1.0);
        }
    }
    throw std::invalid_argument("make_frame: unknown frame kind");
}

/// Total variation: root --(grad, identity)--> measure-norm leaf.
inline reg_graph tv(const std::vector<int>& shape) {
    const space root = space::scalar(shape);
    const linop g = ops::grad(shape);
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"tv", g.codomain(), functional::group_l1(g.codomain())}};
    std::vector<graph_edge> edges = {{"u", "tv", g, linop::identity(root), 1.0, weight_kind::trivial, ""}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// k-th order total variation: root --(grad^k, identity)--> measure-norm leaf.
inline reg_graph tvk(const std::vector<int>& shape, int k) {
    const space root = space::scalar(shape);
    const linop g = ops::grad_k(shape, k);
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"tvk", g.codomain(), functional::group_l1(g.codomain())}};
    std::vector<graph_edge> edges = {{"u", "tvk", g, linop::identity(root), 1.0, weight_kind::trivial, ""}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Infimal convolution of two derivative orders, weight on the second branch.
inline reg_graph tvk_infconv(const std::vector<int>& shape, int k1, int k2, double alpha) {
    const space root = space::scalar(shape);
    const linop g1 = ops::grad_k(shape, k1);
    const linop g2 = ops::grad_k(shape, k2);
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"d1", g1.codomain(), functional::group_l1(g1.codomain())},
                                     {"d2", g2.codomain(), functional::group_l1(g2.codomain())}};
    std::vector<graph_edge> edges = {
        {"u", "d1", g1, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"u", "d2", g2, linop::identity(root), alpha, weight_kind::learnable, "alpha"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Total generalized variation of order k: a cascade of splitting nodes, each
/// with a measure-norm leaf and a symmetrized-gradient edge (carrying the
/// level weight) to the next level. weights has k-1 entries; 2-D supports
/// k = 2. In 2-D the cascade acts on the zero-padded gradient field, so
/// affine images retain boundary terms.
inline reg_graph tgv(const std::vector<int>& shape, int k, const std::vector<double>& weights) {
    if (k < 2) throw std::invalid_argument("tgv: order must be >= 2");
    if (static_cast<int>(weights.size()) != k - 1) throw std::invalid_argument("tgv: needs k-1 weights");
    if (shape.size() == 2 && k != 2) throw std::invalid_argument("tgv: 2-D supports order 2 only");

    const space root = space::scalar(shape);
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)}};
    std::vector<graph_edge> edges;

    linop entry = ops::grad(shape);  // forward op of the edge into the current level
    double entry_weight = 1.0;
    weight_kind entry_kind = weight_kind::trivial;
    std::string entry_name;
    std::string parent = "u";

    for (int level = 1; level <= k - 1; ++level) {
        const space cur = entry.codomain();
        const std::string split = "w" + std::to_string(level);
        nodes.push_back({split, cur, functional::indicator_zero(cur)});
        edges.push_back({parent, split, entry, linop::identity(entry.domain()), entry_weight, entry_kind, entry_name});

        const std::string leaf = "m" + std::to_string(level);
        nodes.push_back({leaf, cur, functional::group_l1(cur)});
        edges.push_back({split, leaf, linop::identity(cur), linop::identity(cur), 1.0, weight_kind::trivial, ""});

        const linop next = shape.size() == 1 ? ops::grad_1d(static_cast<int>(cur.dim()))
                                             : ops::symgrad_2d(shape[0], shape[1]);
        const std::string wname = "alpha" + std::to_string(level);
        if (level == k - 1) {
            const std::string last = "m" + std::to_string(k);
            nodes.push_back({last, next.codomain(), functional::group_l1(next.codomain())});
            edges.push_back({split, last, next, linop::identity(cur), weights[level - 1], weight_kind::learnable,
                             wname});
        } else {
            entry = next;
            entry_weight = weights[level - 1];
            entry_kind = weight_kind::learnable;
            entry_name = wname;
            parent = split;
        }
    }
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

inline reg_graph tgv2(const std::vector<int>& shape, double alpha) { return tgv(shape, 2, {alpha}); }

/// Second-order TGV infimally convolved with an l1-penalized Parseval frame
/// branch (the frame stands in for a directional transform).
inline reg_graph tgv_frame_infconv(const std::vector<int>& shape, double alpha0, double alpha1,
                                   frame_kind frame = frame_kind::haar) {
    const space root = space::scalar(shape);
    const linop g = ops::grad(shape);
    const space gs = g.codomain();
    const linop sg = shape.size() == 1 ? ops::grad_1d(static_cast<int>(gs.dim())) : ops::symgrad_2d(shape[0], shape[1]);
    const linop w = make_frame(frame, shape);

    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"w1", gs, functional::indicator_zero(gs)},
                                     {"m1", gs, functional::group_l1(gs)},
                                     {"m2", sg.codomain(), functional::group_l1(sg.codomain())},
                                     {"coeffs", w.codomain(), functional::group_l1(w.codomain())}};
    std::vector<graph_edge> edges = {
        {"u", "w1", g, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"w1", "m1", linop::identity(gs), linop::identity(gs), 1.0, weight_kind::trivial, ""},
        {"w1", "m2", sg, linop::identity(gs), alpha1, weight_kind::learnable, "alpha1"},
        {"u", "coeffs", w, linop::identity(root), alpha0, weight_kind::learnable, "alpha0"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// TV infimally convolved with the q-th power penalty (power formulation).
inline reg_graph tv_lq(const std::vector<int>& shape, double q, double alpha) {
    const space root = space::scalar(shape);
    const linop g = ops::grad(shape);
    const space gs = g.codomain();
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"w", gs, functional::indicator_zero(gs)},
                                     {"m", gs, functional::group_l1(gs)},
                                     {"q", gs, functional::lq(gs, q)}};
    std::vector<graph_edge> edges = {
        {"u", "w", g, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"w", "m", linop::identity(gs), linop::identity(gs), 1.0, weight_kind::trivial, ""},
        {"w", "q", linop::identity(gs), linop::identity(gs), alpha, weight_kind::learnable, "alpha"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Infimal convolution of two anisotropically weighted TV terms on a 2-D
/// (space x time) grid.
inline reg_graph spatiotemporal(const std::vector<int>& shape, const vec& beta1, const vec& beta2, double alpha) {
    if (shape.size() != 2) throw std::invalid_argument("spatiotemporal: needs a 2-D shape");
    const space root = space::scalar(shape);
    const linop g = ops::grad(shape);
    const space gs = g.codomain();
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"d1", gs, functional::group_l1_aniso(gs, beta1)},
                                     {"d2", gs, functional::group_l1_aniso(gs, beta2)}};
    std::vector<graph_edge> edges = {
        {"u", "d1", g, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"u", "d2", g, linop::identity(root), alpha, weight_kind::learnable, "alpha"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Sum of convex gauges of the first and second derivative through a stacked
/// edge into a two-block product leaf.
inline reg_graph sum_fg(const std::vector<int>& shape, const std::function<functional(space)>& f,
                        const std::function<functional(space)>& g) {
    const space root = space::scalar(shape);
    const linop d1 = ops::grad(shape);
    const linop d2 = ops::grad_k(shape, 2);
    const linop stacked = ops::stack({d1, d2});
    const space prod = stacked.codomain();
    std::vector<graph_node> nodes = {
        {"u", root, functional::indicator_zero(root)},
        {"fg", prod, functional::composite_fg(prod, f(d1.codomain()), g(d2.codomain()))}};
    std::vector<graph_edge> edges = {{"u", "fg", stacked, linop::identity(root), 1.0, weight_kind::trivial, ""}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Derivative of a field, channel by channel (the inner operator of the
/// general second-order model).
inline linop field_gradient(const space& field) {
    if (field.shape().size() == 1) {
        const int n = field.shape()[0];
        if (field.channels() != 1) throw std::invalid_argument("field_gradient: 1-D fields have one channel");
        return ops::grad_1d(n);
    }
    if (field.shape().size() == 2 && field.channels() == 2) {
        const int nx = field.shape()[0], ny = field.shape()[1];
        const long N = static_cast<long>(nx) * ny;
        const linop g = ops::grad_2d(nx, ny);
        auto fwd = [g, N](const vec& w) {
            vec out(4 * N);
            out.head(2 * N) = g.apply(w.head(N));
            out.tail(2 * N) = g.apply(w.tail(N));
            return out;
        };
        auto adj = [g, N](const vec& y) {
            vec w(2 * N);
            w.head(N) = g.apply_adjoint(y.head(2 * N));
            w.tail(N) = g.apply_adjoint(y.tail(2 * N));
            return w;
        };
        return linop::matrix_free(field, space::vector(field.shape(), 4), fwd, adj, "field_gradient");
    }
    throw std::invalid_argument("field_gradient: unsupported field");
}

/// General second-order model: TGV-like cascade whose second edge applies a
/// pointwise matrix to the derivative of the auxiliary field. Refuses
/// coefficient matrices that lose the rank needed for coercivity.
inline reg_graph second_order_general(const std::vector<int>& shape, const mat& coeff, double alpha) {
    const space root = space::scalar(shape);
    const linop g = ops::grad(shape);
    const space gs = g.codomain();
    const linop inner = field_gradient(gs);
    if (coeff.cols() != inner.codomain().channels())
        throw dimension_error("second_order_general: matrix columns must match derivative channels");
    const linop themed = linop::composite({ops::pointwise_matrix(inner.codomain(), coeff), inner}, "coeff_grad");
    {
        const auto an = analyze(themed);
        if (an.rank == 0 || !an.poincare_constant)
            throw std::invalid_argument("second_order_general: coefficient matrix destroys coercivity (rank 0)");
    }
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"w", gs, functional::indicator_zero(gs)},
                                     {"m", gs, functional::group_l1(gs)},
                                     {"aw", themed.codomain(), functional::group_l1(themed.codomain())}};
    std::vector<graph_edge> edges = {
        {"u", "w", g, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"w", "m", linop::identity(gs), linop::identity(gs), 1.0, weight_kind::trivial, ""},
        {"w", "aw", themed, linop::identity(gs), alpha, weight_kind::learnable, "alpha"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Infimal convolution of two analysis-l1 frame penalties.
inline reg_graph tight_frames(const std::vector<int>& shape, frame_kind f1, frame_kind f2, double alpha) {
    const space root = space::scalar(shape);
    const linop w1 = make_frame(f1, shape);
    const linop w2 = make_frame(f2, shape);
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"c1", w1.codomain(), functional::group_l1(w1.codomain())},
                                     {"c2", w2.codomain(), functional::group_l1(w2.codomain())}};
    std::vector<graph_edge> edges = {
        {"u", "c1", w1, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"u", "c2", w2, linop::identity(root), alpha, weight_kind::learnable, "alpha"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// TV with a pointwise bound on the subtracted slope field.
inline reg_graph tv_pwl(const std::vector<int>& shape, const vec& gamma, double alpha) {
    const space root = space::scalar(shape);
    const linop g = ops::grad(shape);
    const space gs = g.codomain();
    std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                     {"w", gs, functional::indicator_zero(gs)},
                                     {"m", gs, functional::group_l1(gs)},
                                     {"slope", gs, functional::indicator_ball(gs, gamma)}};
    std::vector<graph_edge> edges = {
        {"u", "w", g, linop::identity(root), 1.0, weight_kind::trivial, ""},
        {"w", "m", linop::identity(gs), linop::identity(gs), 1.0, weight_kind::trivial, ""},
        {"w", "slope", linop::identity(gs), linop::identity(gs), alpha, weight_kind::learnable, "alpha"}};
    reg_graph out(std::move(nodes), std::move(edges), "u");
    out.require_valid();
    return out;
}

/// Single-node graph evaluating just the root functional.
inline reg_graph trivial(space root, functional f) {
    std::vector<graph_node> nodes = {{"u", std::move(root), std::move(f)}};
    reg_graph out(std::move(nodes), {}, "u");
    out.require_valid();
    return out;
}

struct catalog_entry {
    std::string name;
    reg_graph graph;
};

inline vec vec2(double a, double b) {
    vec v(2);
    v << a, b;
    return v;
}

/// One representative of every catalogue family at 1-D size n. Frame entries
/// require n to be a power of two; the spatio-temporal entry runs on a small
/// 2-D grid.
inline std::vector<catalog_entry> catalog(int n) {
    if (n < 6 || !ops::detail::is_pow2(n))
        throw std::invalid_argument("catalog: n must be a power of two >= 8");
    std::vector<catalog_entry> out;
    out.push_back({"tv", tv({n})});
    out.push_back({"tvk2", tvk({n}, 2)});
    out.push_back({"tvk_infconv", tvk_infconv({n}, 1, 2, 0.7)});
    out.push_back({"tgv2", tgv2({n}, 0.8)});
    out.push_back({"tgv3", tgv({n}, 3, {0.8, 0.6})});
    out.push_back({"tgv_frame_infconv", tgv_frame_infconv({n}, 0.5, 0.8)});
    out.push_back({"tv_lq", tv_lq({n}, 1.5, 0.6)});
    out.push_back({"spatiotemporal", spatiotemporal({4, 4}, vec2(1.0, 2.0), vec2(2.0, 1.0), 0.7)});
    out.push_back({"sum_fg", sum_fg({n}, [](space s) { return functional::group_l1(s); },
                                    [](space s) { return functional::lq(s, 2.0, 0.5); })});
    out.push_back({"second_order_general", second_order_general({n}, mat::Identity(1, 1), 0.9)});
    out.push_back({"tight_frames", tight_frames({n}, frame_kind::haar, frame_kind::dct, 0.75)});
    out.push_back({"tv_pwl", tv_pwl({n}, vec::Constant(n - 1, 0.5), 1.0)});
    return out;
}

}  // namespace reggraph::library
