#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "reggraph/combine.hpp"
#include "reggraph/library.hpp"
#include "reggraph/subspace.hpp"

using namespace reggraph;
using rgt::from_list;

namespace {

// root -> a -> b path graph with identity operators, for weight algebra tests
reg_graph two_edge_chain() {
    const space s = space::scalar({3});
    std::vector<graph_node> nodes = {{"r", s, functional::indicator_zero(s)},
                                     {"a", s, functional::group_l1(s)},
                                     {"b", s, functional::group_l1(s)}};
    std::vector<graph_edge> edges = {
        {"r", "a", linop::identity(s), linop::identity(s), 1.0, weight_kind::learnable, "w1"},
        {"a", "b", linop::identity(s), linop::identity(s), 1.0, weight_kind::learnable, "w2"}};
    return reg_graph(std::move(nodes), std::move(edges), "r");
}

}  // namespace

TEST_CASE("validate: library graphs pass, broken graphs name their violation") {
    CHECK(library::tv({8}).validate().empty());
    CHECK(library::tgv2({8}, 0.5).validate().empty());

    SECTION("backward operator with wrong codomain") {
        const space root = space::scalar({8});
        const space wrong = space::scalar({5});
        const linop g = ops::grad_1d(8);
        std::vector<graph_node> nodes = {{"u", root, functional::indicator_zero(root)},
                                         {"tv", g.codomain(), functional::group_l1(g.codomain())}};
        std::vector<graph_edge> edges = {
            {"u", "tv", g, linop::zero(root, wrong), 1.0, weight_kind::trivial, ""}};
        const auto v = reg_graph(nodes, edges, "u").validate();
        REQUIRE_FALSE(v.empty());
        CHECK(v[0].code == "dimension-mismatch");
    }

    SECTION("two-root forest") {
        const space s = space::scalar({3});
        std::vector<graph_node> nodes = {{"r1", s, functional::indicator_zero(s)},
                                         {"r2", s, functional::group_l1(s)},
                                         {"c", s, functional::group_l1(s)}};
        std::vector<graph_edge> edges = {
            {"r1", "c", linop::identity(s), linop::identity(s), 1.0, weight_kind::trivial, ""},
            {"c", "r1", linop::identity(s), linop::identity(s), 1.0, weight_kind::trivial, ""}};
        const auto v = reg_graph(nodes, edges, "r1").validate();
        REQUIRE_FALSE(v.empty());
        bool named = false;
        for (const auto& viol : v)
            if (viol.code == "connectivity" || viol.code == "root-incoming" || viol.code == "tree") named = true;
        CHECK(named);
    }

    SECTION("trivial tag forces weight one") {
        auto g = library::tv({4});
        std::vector<graph_edge> edges = g.edges();
        edges[0].weight = 0.5;
        const auto v = reg_graph(g.nodes(), edges, g.root_id()).validate();
        REQUIRE_FALSE(v.empty());
        CHECK(v[0].code == "trivial-weight");
    }
}

TEST_CASE("root chain enumeration") {
    CHECK(enumerate_root_chains(library::tv({6})).size() == 2);  // empty + the single edge

    const auto tgv = library::tgv2({8}, 0.7);
    const auto chains = enumerate_root_chains(tgv);
    CHECK(chains.size() == 4);  // empty, {e1}, {e1,e2}, {e1,e3}
    std::size_t max_len = 0;
    for (const auto& c : chains) max_len = std::max(max_len, c.size());
    CHECK(max_len == 2);

    const auto trivial = library::trivial(space::scalar({3}), functional::group_l1(space::scalar({3})));
    CHECK(enumerate_root_chains(trivial).size() == 1);
}

TEST_CASE("weight ratio bound is forced to one by the empty chain") {
    const auto g = two_edge_chain();
    CHECK(weight_ratio_bound(g, from_list({1.0, 0.5}), from_list({0.5, 0.25})) == Catch::Approx(1.0));
    CHECK(weight_ratio_bound(g, from_list({0.0, 1.0}), from_list({0.0, 1.0})) == Catch::Approx(1.0));
    CHECK_THROWS(weight_ratio_bound(g, from_list({0.5, 0.5}), from_list({1.0, 0.5})));
}

TEST_CASE("chain weight product") {
    const auto g = two_edge_chain();
    CHECK(max_chain_weight_product(g, from_list({2.0, 3.0})) == Catch::Approx(6.0));
    CHECK(max_chain_weight_product(g, from_list({0.5, 0.9})) == Catch::Approx(1.0));
    const auto trivial = library::trivial(space::scalar({3}), functional::group_l1(space::scalar({3})));
    CHECK(max_chain_weight_product(trivial, vec(0)) == Catch::Approx(1.0));
}

TEST_CASE("convergence factor excludes chains through vanished weights") {
    const auto g = two_edge_chain();
    const auto f1 = weight_convergence_factor(g, from_list({1.0, 0.0}), from_list({0.9, 0.1}));
    CHECK(f1.value == Catch::Approx(0.9));
    CHECK(f1.at_most_one);

    const auto f2 = weight_convergence_factor(g, from_list({0.7, 0.3}), from_list({0.7, 0.3}));
    CHECK(f2.value == Catch::Approx(1.0));

    // single-edge graph, halved weight
    const auto tv = library::tv({4});
    const auto f3 = weight_convergence_factor(tv, from_list({2.0}), from_list({1.0}));
    CHECK(f3.value == Catch::Approx(0.5));
}

TEST_CASE("zero-weight limit graph") {
    const auto g = library::tgv2({8}, 0.7);
    const vec alpha = g.weights();

    SECTION("positive weights leave the graph unchanged") {
        auto [hat, lifted] = zero_weight_limit(g, alpha);
        CHECK(lifted.isApprox(alpha));
        for (std::size_t n = 0; n < g.nodes().size(); ++n)
            CHECK(hat.nodes()[n].node_functional.kind() == g.nodes()[n].node_functional.kind());
    }

    SECTION("vanishing cascade weight: leaf becomes a constraint") {
        vec a0 = alpha;
        a0[2] = 0.0;  // the symmetrized-gradient edge
        auto [hat, lifted] = zero_weight_limit(g, a0);
        CHECK(lifted[2] == 1.0);
        CHECK(hat.node("m2").node_functional.kind() == functional_kind::indicator_zero);
        CHECK(hat.node("m1").node_functional.kind() == functional_kind::group_l1);
        CHECK(hat.validate().empty());
    }
}

TEST_CASE("invariant subspace recursion") {
    SECTION("tv: constants") {
        const auto g = library::tv({8});
        const auto sub = invariant_subspace(g, g.weights());
        REQUIRE(sub.root_basis.cols() == 1);
        const vec ones = vec::Constant(8, 1.0) / std::sqrt(8.0);
        CHECK(std::abs(std::abs(sub.root_basis.col(0).dot(ones)) - 1.0) < 1e-10);
    }

    SECTION("tgv2: affine signals") {
        const auto g = library::tgv2({8}, 1.0);
        const auto sub = invariant_subspace(g, g.weights());
        REQUIRE(sub.root_basis.cols() == 2);
        // both constants and the ramp lie in the span
        vec ramp(8);
        for (int i = 0; i < 8; ++i) ramp[i] = i;
        const mat b = sub.root_basis;
        const vec r1 = ramp - b * (b.transpose() * ramp);
        CHECK(r1.norm() < 1e-8 * ramp.norm());
        const vec ones = vec::Constant(8, 1.0);
        CHECK((ones - b * (b.transpose() * ones)).norm() < 1e-8 * ones.norm());
    }

    SECTION("tgv2 with vanished cascade weight: constants only") {
        const auto g = library::tgv2({8}, 1.0);
        vec a = g.weights();
        a[2] = 0.0;
        const auto sub = invariant_subspace(g, a);
        CHECK(sub.root_basis.cols() == 1);
    }

    SECTION("edge projectors are projections") {
        const auto g = library::tgv2({8}, 1.0);
        const auto sub = invariant_subspace(g, g.weights());
        for (const auto& [e, p] : sub.edge_projector) {
            CHECK((p * p - p).norm() < 1e-8 * (1 + p.norm()));
        }
    }

    SECTION("symgrad edge preimage holds the constants") {
        const auto g = library::tgv2({8}, 1.0);
        const auto sub = invariant_subspace(g, g.weights());
        const mat m = sub.edge_m_basis.at(2);  // the symgrad edge
        REQUIRE(m.cols() == 1);
        const vec ones = vec::Constant(m.rows(), 1.0);
        CHECK((m * (m.transpose() * ones) - ones).norm() < 1e-8 * ones.norm());
    }
}

TEST_CASE("combination units build valid graphs") {
    const auto g1 = library::tv({8});
    const auto g2 = library::tvk({8}, 2);
    const space joint = space::scalar({8});

    const auto ic = infconv_combine(g1, g2, 0.8, joint, linop::identity(joint), linop::identity(joint));
    CHECK(ic.validate().empty());
    CHECK(ic.nodes().size() == g1.nodes().size() + g2.nodes().size() + 2);
    CHECK(ic.edges().size() == g1.edges().size() + g2.edges().size() + 3);

    const auto sc = sum_combine(g1, g2, 2.0, joint, linop::identity(joint), linop::identity(joint));
    CHECK(sc.validate().empty());
    CHECK(sc.node("split").node_space.dim() == 16);
    CHECK_THROWS(sum_combine(g1, g2, 0.0, joint, linop::identity(joint), linop::identity(joint)));
}

TEST_CASE("append graph grafts under a leaf") {
    const auto tv = library::tv({8});
    // a TV unit on the gradient space mimics the second TGV level
    const space gs = tv.node("tv").node_space;
    const int m = static_cast<int>(gs.dim());
    std::vector<graph_node> nodes = {{"r", gs, functional::indicator_zero(gs)},
                                     {"d", space::scalar({m - 1}), functional::group_l1(space::scalar({m - 1}))}};
    std::vector<graph_edge> edges = {
        {"r", "d", ops::grad_1d(m), linop::identity(gs), 1.0, weight_kind::trivial, ""}};
    const reg_graph unit(nodes, edges, "r");

    const auto grown = append_graph(tv, "tv", unit, linop::identity(gs), linop::identity(gs), 0.5,
                                    weight_kind::learnable);
    CHECK(grown.validate().empty());
    CHECK(grown.nodes().size() == 4);
    CHECK(grown.edges().size() == 3);

    CHECK_THROWS(append_graph(grown, "u", unit, linop::identity(gs), linop::identity(gs)));
}

TEST_CASE("subtree extraction") {
    const auto g = library::tgv2({8}, 0.7);
    const auto sub = subtree_at_edge(g, 0);  // below the gradient edge
    CHECK(sub.graph.root_id() == "w1");
    CHECK(sub.graph.nodes().size() == 3);
    CHECK(sub.graph.validate().empty());
    CHECK(sub.edge_map.size() == 2);
}
