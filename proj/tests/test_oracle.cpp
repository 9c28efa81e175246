#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "reggraph/library.hpp"
#include "reggraph/oracle.hpp"

using namespace reggraph;
using rgt::from_list;

TEST_CASE("taut string: closed-form cases") {
    SECTION("constant signal is a fixed point") {
        const vec f = vec::Constant(6, 3.25);
        CHECK((oracle::taut_string_tv_denoise(f, 0.7) - f).norm() < 1e-14);
    }
    SECTION("two-point signal, partial shrink") {
        const vec u = oracle::taut_string_tv_denoise(from_list({0, 1}), 0.25);
        CHECK(u[0] == Catch::Approx(0.25).margin(1e-14));
        CHECK(u[1] == Catch::Approx(0.75).margin(1e-14));
    }
    SECTION("two-point signal, jump collapsed") {
        const vec u = oracle::taut_string_tv_denoise(from_list({0, 1}), 1.0);
        CHECK(u[0] == Catch::Approx(0.5).margin(1e-14));
        CHECK(u[1] == Catch::Approx(0.5).margin(1e-14));
    }
    SECTION("step survives small penalty") {
        const vec u = oracle::taut_string_tv_denoise(from_list({0, 0, 1, 1}), 0.1);
        CHECK(u[0] == Catch::Approx(0.05).margin(1e-12));
        CHECK(u[3] == Catch::Approx(0.95).margin(1e-12));
    }
}

TEST_CASE("taut string satisfies the denoising optimality conditions") {
    rng gen(99);
    auto tv1d = [](const vec& u) {
        double s = 0;
        for (long i = 0; i + 1 < u.size(); ++i) s += std::abs(u[i + 1] - u[i]);
        return s;
    };
    for (int trial = 0; trial < 10; ++trial) {
        const long n = 5 + 7 * trial;
        const vec f = gen.gaussian_vector(n);
        for (double lam : {0.1, 1.0}) {
            const vec u = oracle::taut_string_tv_denoise(f, lam);
            const double obj = 0.5 * (u - f).squaredNorm() + lam * tv1d(u);
            for (int k = 0; k < 60; ++k) {
                const vec z = u + gen.gaussian_vector(n) * (k % 2 ? 1e-4 : 0.3);
                CHECK(obj <= 0.5 * (z - f).squaredNorm() + lam * tv1d(z) + 1e-10);
            }
            // mean preservation, a structural identity of this problem
            CHECK(u.mean() == Catch::Approx(f.mean()).margin(1e-12));
        }
    }
}

TEST_CASE("brute_eval spot values") {
    SECTION("tv of a step") {
        const auto g = library::tv({4});
        const auto r = oracle::brute_eval(g, from_list({0, 0, 1, 1}));
        CHECK(r.converged);
        CHECK(r.value == Catch::Approx(1.0).margin(1e-4));
    }
    SECTION("tv of a constant") {
        const auto g = library::tv({5});
        const auto r = oracle::brute_eval(g, vec::Constant(5, 2.0));
        CHECK(r.value == Catch::Approx(0.0).margin(1e-6));
    }
    SECTION("tgv2 of an affine signal") {
        const auto g = library::tgv2({8}, 1.0);
        vec u(8);
        for (int i = 0; i < 8; ++i) u[i] = 0.3 * i - 1.0;
        const auto r = oracle::brute_eval(g, u);
        CHECK(r.value <= 1e-4);
    }
    SECTION("tv_pwl slope allowance") {
        const auto g = library::tv_pwl({4}, vec::Constant(3, 0.5), 1.0);
        const auto r = oracle::brute_eval(g, from_list({0, 0, 1, 1}));
        CHECK(r.value == Catch::Approx(0.5).margin(1e-4));
    }
    SECTION("edge-dimension guard") {
        const auto g = library::tv({600});
        CHECK_THROWS(oracle::brute_eval(g, vec::Zero(600)));
    }
}

TEST_CASE("zero_set_probe confirms and refutes directions") {
    const auto tv = library::tv({6});
    vec ones = vec::Constant(6, 1.0);
    vec ramp(6);
    for (int i = 0; i < 6; ++i) ramp[i] = i;

    const auto rep = oracle::zero_set_probe(tv, tv.weights(), {ones, ramp});
    REQUIRE(rep.confirmed.size() == 1);
    CHECK(rep.confirmed[0] == 0);
    REQUIRE(rep.rejected.size() == 1);
    CHECK(rep.rejected[0] == 1);

    const auto tgv = library::tgv2({6}, 1.0);
    const auto rep2 = oracle::zero_set_probe(tgv, tgv.weights(), {ramp});
    CHECK(rep2.confirmed.size() == 1);
}
