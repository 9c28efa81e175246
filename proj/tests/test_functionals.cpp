#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "reggraph/functionals.hpp"

using namespace reggraph;
using rgt::from_list;

namespace {

// All functional kinds on small spaces, for the property sweeps.
std::vector<functional> test_zoo() {
    const auto pix2 = space::vector({3}, 2);
    std::vector<functional> fs;
    fs.push_back(functional::indicator_zero(space::scalar({4})));
    fs.push_back(functional::group_l1(pix2, 1.0));
    fs.push_back(functional::group_l1(pix2, 2.5));
    fs.push_back(functional::group_l1_aniso(pix2, from_list({1.0, 3.0}), 1.5));
    fs.push_back(functional::lq(space::scalar({5}), 1.5, 0.7));
    fs.push_back(functional::lq(space::scalar({5}), 3.0, 1.2));
    fs.push_back(functional::half_squared_l2(space::scalar({4}), 2.0));
    fs.push_back(functional::indicator_ball(pix2, from_list({1.0, 0.5, 2.0})));
    fs.push_back(functional::composite_fg(space::product({space::scalar({3}), space::scalar({2})}),
                                          functional::group_l1(space::scalar({3})),
                                          functional::lq(space::scalar({2}), 2.0)));
    fs.push_back(functional::zero(space::scalar({3})));
    return fs;
}

// A point where f is finite (indicator kinds need feasible probes).
vec feasible_point(const functional& f, rng& gen, double scale = 1.0) {
    switch (f.kind()) {
        case functional_kind::indicator_zero: return vec::Zero(f.domain().dim());
        case functional_kind::indicator_ball: {
            vec v = gen.gaussian_vector(f.domain().dim());
            return f.prox(v * scale, 1.0);  // projection
        }
        default: return gen.gaussian_vector(f.domain().dim()) * scale;
    }
}

}  // namespace

TEST_CASE("eval spot values") {
    CHECK(functional::indicator_zero(space::scalar({3})).eval(vec::Zero(3)) == 0.0);
    CHECK(functional::indicator_zero(space::scalar({3})).eval(from_list({0, 1e-9, 0})) == inf);

    const auto pix = space::vector({1}, 2);
    CHECK(functional::group_l1(pix, 1.0).eval(from_list({3, 4})) == Catch::Approx(5.0));

    const auto ball = functional::indicator_ball(pix, from_list({1.0}));
    CHECK(ball.eval(from_list({0.6, 0.8})) == 0.0);
    CHECK(ball.eval(from_list({1.2, 1.6})) == inf);

    CHECK(functional::half_squared_l2(space::scalar({1})).eval(from_list({2})) == Catch::Approx(2.0));
    CHECK(functional::zero(space::scalar({2})).eval(from_list({5, 5})) == 0.0);
}

TEST_CASE("prox spot values") {
    const auto pix = space::vector({1}, 2);

    SECTION("indicator of zero maps anywhere to zero") {
        const auto f = functional::indicator_zero(space::scalar({3}));
        CHECK(f.prox(from_list({1, -2, 3}), 0.5).isZero());
    }

    SECTION("group shrinkage against scalar minimization") {
        // the magnitude solves min_m 0.5 (m - 5)^2 + tau * m over m >= 0
        double best_m = 0, best_val = inf;
        for (double m = 0; m <= 6.0; m += 1e-5) {
            const double val = 0.5 * (m - 5) * (m - 5) + m;
            if (val < best_val) {
                best_val = val;
                best_m = m;
            }
        }
        CHECK(best_m == Catch::Approx(4.0).margin(1e-4));

        const auto f = functional::group_l1(pix, 1.0);
        const vec z = f.prox(from_list({3, 4}), 1.0);
        CHECK(z[0] == Catch::Approx(2.4).margin(1e-12));
        CHECK(z[1] == Catch::Approx(3.2).margin(1e-12));
    }

    SECTION("half squared l2") {
        const auto f = functional::half_squared_l2(space::scalar({1}), 1.0);
        CHECK(f.prox(from_list({2}), 1.0)[0] == Catch::Approx(1.0));
    }

    SECTION("lq prox solves the stationarity equation") {
        const auto f = functional::lq(space::scalar({1}), 1.5, 2.0);
        const double tau = 0.7;
        const double v = -1.3;
        const double x = f.prox(from_list({v}), tau)[0];
        CHECK(x + tau * 2.0 * std::copysign(std::pow(std::abs(x), 0.5), x) == Catch::Approx(v).margin(1e-10));
    }
}

TEST_CASE("prox_conjugate spot values") {
    const auto pix = space::vector({1}, 2);

    SECTION("conjugate of the zero-indicator is free") {
        const auto f = functional::indicator_zero(space::scalar({2}));
        CHECK(f.prox_conjugate(from_list({3, -1}), 2.0).isApprox(from_list({3, -1})));
    }

    SECTION("group l1: Moreau equals the direct ball projection") {
        const auto f = functional::group_l1(pix, 1.0);
        const vec z = f.prox_conjugate(from_list({3, 4}), 1.0);
        CHECK(z[0] == Catch::Approx(0.6));
        CHECK(z[1] == Catch::Approx(0.8));
    }

    SECTION("half squared l2 closed form") {
        const auto f = functional::half_squared_l2(space::scalar({1}), 1.0);
        // prox of sigma f^*: v / (1 + sigma / w)
        CHECK(f.prox_conjugate(from_list({2}), 1.0)[0] == Catch::Approx(1.0));
    }
}

TEST_CASE("conjugate spot values") {
    const auto pix2 = space::vector({2}, 2);
    const auto f = functional::group_l1(pix2, 1.0);
    CHECK(f.conjugate_eval(from_list({0.5, 0.3, 0.4, 0.85})) == 0.0);   // magnitudes ~0.64, 0.90
    CHECK(f.conjugate_eval(from_list({1.1, 0.0, 0.0, 0.0})) == inf);

    const auto pix = space::vector({1}, 2);
    const auto ball = functional::indicator_ball(pix, from_list({1.0}));
    // support function of the unit disc at y = (0, 2): brute force over directions
    double brute = 0;
    for (int k = 0; k < 20000; ++k) {
        const double a = 2 * M_PI * k / 20000.0;
        brute = std::max(brute, 2.0 * std::sin(a));
    }
    CHECK(brute == Catch::Approx(2.0).margin(1e-6));
    CHECK(ball.conjugate_eval(from_list({0.0, 2.0})) == Catch::Approx(2.0));

    CHECK(functional::indicator_zero(space::scalar({3})).conjugate_eval(from_list({9, -2, 0})) == 0.0);
}

TEST_CASE("Moreau decomposition on random points") {
    rng gen(101);
    for (const auto& f : test_zoo()) {
        for (int k = 0; k < 20; ++k) {
            const vec v = gen.gaussian_vector(f.domain().dim()) * 2.0;
            const vec sum = f.prox(v, 1.0) + f.prox_conjugate(v, 1.0);
            INFO("kind " << static_cast<int>(f.kind()));
            CHECK((sum - v).norm() < 1e-10 * (1 + v.norm()));
        }
    }
}

TEST_CASE("prox optimality against random perturbations") {
    rng gen(202);
    for (const auto& f : test_zoo()) {
        const double tau = 0.8;
        const vec v = gen.gaussian_vector(f.domain().dim());
        const vec p = f.prox(v, tau);
        const double fp = f.eval(p);
        REQUIRE(fp < inf);
        const double obj_p = 0.5 * (p - v).squaredNorm() + tau * fp;
        for (int k = 0; k < 100; ++k) {
            vec z = p + gen.gaussian_vector(v.size()) * (k % 2 ? 0.5 : 1e-3);
            const double fz = f.eval(z);
            if (fz == inf) continue;
            const double obj_z = 0.5 * (z - v).squaredNorm() + tau * fz;
            CHECK(obj_p <= obj_z + 1e-9);
        }
    }
}

TEST_CASE("Fenchel-Young inequality and smooth equality cases") {
    rng gen(303);
    for (const auto& f : test_zoo()) {
        for (int k = 0; k < 20; ++k) {
            const vec x = feasible_point(f, gen);
            const vec y = gen.gaussian_vector(x.size());
            const double lhs = f.eval(x) + f.conjugate_eval(y);
            if (lhs == inf) continue;
            CHECK(lhs >= x.dot(y) - 1e-9);
        }
    }

    SECTION("equality at subgradients of the smooth kinds") {
        const auto h = functional::half_squared_l2(space::scalar({4}), 2.0);
        const vec x = gen.gaussian_vector(4);
        const vec y = 2.0 * x;  // gradient of (w/2)|x|^2
        CHECK(h.eval(x) + h.conjugate_eval(y) == Catch::Approx(x.dot(y)).epsilon(1e-12));

        const auto l = functional::lq(space::scalar({3}), 1.7, 0.9);
        const vec xs = from_list({0.4, -1.2, 2.0});
        vec ys(3);
        for (int i = 0; i < 3; ++i) ys[i] = 0.9 * std::copysign(std::pow(std::abs(xs[i]), 0.7), xs[i]);
        CHECK(l.eval(xs) + l.conjugate_eval(ys) == Catch::Approx(xs.dot(ys)).epsilon(1e-9));
    }
}

TEST_CASE("hypothesis-style invariants: nonnegative, zero at zero, convex, coercive") {
    rng gen(404);
    for (const auto& f : test_zoo()) {
        CHECK(f.eval(vec::Zero(f.domain().dim())) == 0.0);

        for (int k = 0; k < 30; ++k) {
            const vec a = feasible_point(f, gen, 0.7);
            const vec b = feasible_point(f, gen, 0.7);
            const double t = gen.uniform();
            const double fa = f.eval(a), fb = f.eval(b);
            CHECK(fa >= 0.0);
            const double fc = f.eval(t * a + (1 - t) * b);
            if (fa < inf && fb < inf && f.kind() != functional_kind::indicator_ball)
                CHECK(fc <= t * fa + (1 - t) * fb + 1e-9);
        }

        // coercivity surrogate |v| <= C f(v) + D along random rays
        if (f.kind() == functional_kind::zero) continue;
        double C = 0, D = 0;
        for (int k = 0; k < 20; ++k) {
            vec dir = gen.gaussian_vector(f.domain().dim());
            dir /= dir.norm();
            for (double s : {0.5, 1.0, 4.0, 16.0}) {
                vec v = s * dir;
                double fv = f.eval(v);
                if (fv == inf) {
                    // indicator kinds: infinity certainly dominates any ray
                    continue;
                }
                if (fv > 1e-12) C = std::max(C, (v.norm() - D) / fv);
                else D = std::max(D, v.norm());
            }
        }
        CHECK(std::isfinite(C));
        CHECK(std::isfinite(D));
    }
}

TEST_CASE("aniso group norm prox matches generic numerical minimization") {
    const auto sp = space::vector({1}, 2);
    const auto f = functional::group_l1_aniso(sp, from_list({1.0, 2.0}), 1.3);
    const vec v = from_list({1.1, -0.7});
    const double tau = 0.6;
    const vec p = f.prox(v, tau);

    // dense grid search oracle over the two components
    vec best(2);
    double best_val = inf;
    for (double a = -1.5; a <= 1.5; a += 2e-3)
        for (double b = -1.5; b <= 1.5; b += 2e-3) {
            const vec z = from_list({a, b});
            const double val = 0.5 * (z - v).squaredNorm() + tau * f.eval(z);
            if (val < best_val) {
                best_val = val;
                best = z;
            }
        }
    CHECK((p - best).norm() < 5e-3);
    const double val_p = 0.5 * (p - v).squaredNorm() + tau * f.eval(p);
    CHECK(val_p <= best_val + 1e-9);
}

TEST_CASE("scaled functionals") {
    const auto pix = space::vector({1}, 2);
    const auto f = functional::group_l1(pix, 1.0).scaled(2.0);
    CHECK(f.eval(from_list({3, 4})) == Catch::Approx(10.0));
    const auto b = functional::indicator_ball(pix, from_list({1.0})).scaled(5.0);
    CHECK(b.eval(from_list({0.3, 0.4})) == 0.0);
}
