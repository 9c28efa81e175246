#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "reggraph/bilevel.hpp"
#include "reggraph/library.hpp"

using namespace reggraph;
using rgt::from_list;

namespace {

vec piecewise_constant_32() {
    vec v(32);
    for (int i = 0; i < 32; ++i) v[i] = i < 11 ? 1.0 : (i < 21 ? -0.4 : 0.6);
    return v;
}

vec piecewise_affine_32() {
    vec v(32);
    for (int i = 0; i < 32; ++i) v[i] = i < 16 ? 0.08 * i : 1.4 - 0.07 * (i - 16);
    return v;
}

}  // namespace

TEST_CASE("upper loss composes its three terms") {
    const auto g = library::tgv2({8}, 0.5);
    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    h1.box_upper = 1.0;
    bilevel::penalty_h2 h2;
    h2.bound = 2.0;

    const vec target = vec::Constant(8, 1.0);

    SECTION("matched reconstruction with feasible weights costs nothing") {
        CHECK(bilevel::upper_loss(target, target, g, g.weights(), 0.0, h1, h2) == 0.0);
    }
    SECTION("projected norms beyond the bound are infeasible") {
        CHECK(bilevel::upper_loss(target, target, g, g.weights(), 3.0, h1, h2) == inf);
    }
    SECTION("weights outside the box are infeasible") {
        vec a = g.weights();
        a[2] = 1.5;
        CHECK(bilevel::upper_loss(target, target, g, a, 0.0, h1, h2) == inf);
    }
    SECTION("term-by-term recomputation on a random instance") {
        rng gen(41);
        const vec u = gen.gaussian_vector(8);
        bilevel::penalty_h1 h1l = h1;
        h1l.l1_coefficient = 0.3;
        bilevel::penalty_h2 h2l;
        h2l.kind = bilevel::penalty_h2::mode::linear;
        h2l.coefficient = 0.25;
        vec a = g.weights();
        a[2] = 0.6;
        const double loss = bilevel::upper_loss(u, target, g, a, 1.2, h1l, h2l);
        CHECK(loss == Catch::Approx((u - target).norm() + 0.3 * 0.6 + 0.25 * 1.2));
    }
}

TEST_CASE("single-candidate grid returns that candidate") {
    const auto g = library::tgv2({16}, 1.0);
    const vec target = piecewise_constant_32().head(16);
    const auto id = linop::identity(space::scalar({16}));
    const vec f = target;

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;

    bilevel::bilevel_config cfg;
    cfg.grid_resolution = 1;
    cfg.beta_resolution = 1;
    cfg.beta_min = cfg.beta_max = 0.05;
    const auto res = bilevel::learn(target, f, id, g, h1, h2, cfg);
    REQUIRE(res.trace.size() == 1);
    CHECK(res.alpha_hat[2] == 0.0);
    CHECK(res.beta_hat == Catch::Approx(0.05));
    CHECK(res.loss == Catch::Approx(res.trace[0].loss));
}

TEST_CASE("grid search is its own oracle: returned loss minimizes the trace") {
    const auto g = library::tgv2({24}, 1.0);
    vec target(24);
    for (int i = 0; i < 24; ++i) target[i] = i < 8 ? 0.8 : (i < 16 ? -0.2 : 0.5);
    const auto id = linop::identity(space::scalar({24}));
    const vec f = corrupt(make_forward_identity(space::scalar({24})), target, {0.05, 77});

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;

    bilevel::bilevel_config cfg;
    cfg.grid_resolution = 4;
    cfg.beta_resolution = 3;
    cfg.beta_min = 0.01;
    cfg.beta_max = 0.3;
    const auto res = bilevel::learn(target, f, id, g, h1, h2, cfg);
    REQUIRE(res.trace.size() == 12);
    for (const auto& c : res.trace) CHECK(res.loss <= c.loss);

    SECTION("piecewise-constant targets prune the cascade weight") {
        CHECK(res.alpha_hat[2] <= 0.05 * h1.box_upper);
        CHECK((res.report == "TV"));
    }
}

TEST_CASE("piecewise-affine targets keep the cascade weight") {
    const auto g = library::tgv2({32}, 1.0);
    const vec target = piecewise_affine_32();
    const auto id = linop::identity(space::scalar({32}));
    const vec f = corrupt(make_forward_identity(space::scalar({32})), target, {0.05, 99});

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;

    bilevel::bilevel_config cfg;
    cfg.grid_resolution = 5;
    cfg.beta_resolution = 4;
    cfg.beta_min = 0.01;
    cfg.beta_max = 0.5;
    const auto res = bilevel::learn(target, f, id, g, h1, h2, cfg);

    double best_zero = inf;
    for (const auto& c : res.trace)
        if (c.alpha[2] == 0.0) best_zero = std::min(best_zero, c.loss);
    CHECK(res.loss < best_zero);
    CHECK(res.alpha_hat[2] > 0.0);
    CHECK(res.report == "TGV2");
}

TEST_CASE("parallel evaluation reproduces the serial result") {
    const auto g = library::tgv2({16}, 1.0);
    vec target(16);
    for (int i = 0; i < 16; ++i) target[i] = i < 8 ? 0.5 : -0.5;
    const auto id = linop::identity(space::scalar({16}));
    const vec f = corrupt(make_forward_identity(space::scalar({16})), target, {0.03, 5});

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;
    bilevel::bilevel_config cfg;
    cfg.grid_resolution = 3;
    cfg.beta_resolution = 2;
    cfg.beta_min = 0.02;
    cfg.beta_max = 0.2;

    const auto serial = bilevel::learn(target, f, id, g, h1, h2, cfg);
    cfg.parallel = true;
    const auto parallel = bilevel::learn(target, f, id, g, h1, h2, cfg);
    REQUIRE(serial.trace.size() == parallel.trace.size());
    for (std::size_t i = 0; i < serial.trace.size(); ++i) {
        CHECK(serial.trace[i].loss == parallel.trace[i].loss);
        CHECK(serial.trace[i].beta == parallel.trace[i].beta);
    }
    CHECK(serial.loss == parallel.loss);
}

TEST_CASE("coordinate descent refines the grid optimum") {
    const auto g = library::tgv2({16}, 1.0);
    const vec target = piecewise_affine_32().head(16);
    const auto id = linop::identity(space::scalar({16}));
    const vec f = target;

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;

    bilevel::bilevel_config grid_cfg;
    grid_cfg.grid_resolution = 3;
    grid_cfg.beta_resolution = 3;
    grid_cfg.beta_min = 0.01;
    grid_cfg.beta_max = 0.2;
    const auto coarse = bilevel::learn(target, f, id, g, h1, h2, grid_cfg);

    bilevel::bilevel_config cd_cfg = grid_cfg;
    cd_cfg.search = bilevel::bilevel_config::search_kind::coordinate_descent;
    cd_cfg.cd_passes = 2;
    const auto refined = bilevel::learn(target, f, id, g, h1, h2, cd_cfg);
    CHECK(refined.loss <= coarse.loss + 1e-12);
}

TEST_CASE("limit regularizer report covers the frame graph cases") {
    const auto g = library::tgv_frame_infconv({16}, 0.5, 0.5);
    vec a = g.weights();
    auto set_named = [&](double a0, double a1) {
        vec out = a;
        out[3] = a0;  // alpha0, the frame edge
        out[2] = a1;  // alpha1, the cascade edge
        return out;
    };
    CHECK(bilevel::limit_regularizer_report(g, set_named(0.0, 0.0), 1e-3) == "TV");
    CHECK(bilevel::limit_regularizer_report(g, set_named(0.0, 0.7), 1e-3) == "TGV2");
    CHECK(bilevel::limit_regularizer_report(g, set_named(0.3, 0.0), 1e-3) == "TV (inf-conv) frame-l1");
    CHECK(bilevel::limit_regularizer_report(g, set_named(0.3, 0.7), 1e-3) == "TGV2 (inf-conv) frame-l1");

    const auto tgv3 = library::tgv({16}, 3, {0.5, 0.5});
    vec a3 = tgv3.weights();
    a3[2] = 0.4;  // alpha1 edge
    a3[4] = 0.0;  // alpha2 edge
    CHECK(bilevel::limit_regularizer_report(tgv3, a3, 1e-3) == "TGV2");
    a3[4] = 0.2;
    CHECK(bilevel::limit_regularizer_report(tgv3, a3, 1e-3) == "TGV3");
}

TEST_CASE("pruning consistency under an active edge-variable bound") {
    const auto g = library::tgv2({24}, 1.0);
    vec target(24);
    for (int i = 0; i < 24; ++i) target[i] = i < 12 ? 0.7 : -0.7;
    const auto id = linop::identity(space::scalar({24}));

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;
    h2.bound = 50.0;  // finite bound keeps the lower level coercive over M^e

    bilevel::bilevel_config cfg;
    cfg.grid_resolution = 3;
    cfg.beta_resolution = 2;
    cfg.beta_min = 0.05;
    cfg.beta_max = 0.2;
    const auto res = bilevel::learn(target, target, id, g, h1, h2, cfg);
    REQUIRE(res.alpha_hat[2] == 0.0);  // piecewise constant target prunes the cascade

    // evaluating through the pruned (limit) graph at the returned point moves
    // the value by no more than solver tolerance
    auto [hat, lifted] = zero_weight_limit(g, res.alpha_hat);
    const double r_val = evaluate_graph(g, res.alpha_hat, res.minimizer).value;
    const double hat_val = evaluate_graph(hat, lifted, res.minimizer).value;
    CHECK(std::abs(r_val - hat_val) <= 1e-4 * (1 + std::abs(r_val)));
}

TEST_CASE("multiple training pairs enter by loss summation") {
    const auto g = library::tgv2({16}, 1.0);
    const auto id = linop::identity(space::scalar({16}));
    const vec a = piecewise_constant_32().head(16);
    const vec b = piecewise_affine_32().head(16);

    bilevel::penalty_h1 h1;
    h1.learnable = {2};
    bilevel::penalty_h2 h2;
    bilevel::bilevel_config cfg;
    cfg.grid_resolution = 2;
    cfg.beta_resolution = 2;
    cfg.beta_min = 0.02;
    cfg.beta_max = 0.1;

    const auto joint = bilevel::learn({{a, a}, {b, b}}, id, g, h1, h2, cfg);
    const auto only_a = bilevel::learn(a, a, id, g, h1, h2, cfg);
    const auto only_b = bilevel::learn(b, b, id, g, h1, h2, cfg);
    REQUIRE(joint.trace.size() == only_a.trace.size());
    for (std::size_t i = 0; i < joint.trace.size(); ++i)
        CHECK(joint.trace[i].loss ==
              Catch::Approx(only_a.trace[i].loss + only_b.trace[i].loss).margin(1e-12));
}

TEST_CASE("infeasible searches fail loudly") {
    const auto g = library::tgv2({8}, 1.0);
    bilevel::penalty_h1 h1;  // no learnable edges
    bilevel::penalty_h2 h2;
    CHECK_THROWS(bilevel::learn(vec::Zero(8), vec::Zero(8), linop::identity(space::scalar({8})), g, h1, h2));
}
