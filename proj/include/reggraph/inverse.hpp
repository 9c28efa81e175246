#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reggraph/operators.hpp"
#include "reggraph/rng.hpp"
#include "reggraph/solver.hpp"
#include "reggraph/subspace.hpp"

namespace reggraph {

enum class forward_kind { identity, gaussian_blur, mask, dense };

/// Forward model of the inverse problem, a linear operator with a name.
struct forward_model {
    forward_kind kind = forward_kind::identity;
    linop op;
};

inline forward_model make_forward_identity(const space& s) { return {forward_kind::identity, linop::identity(s)}; }

inline forward_model make_forward_blur(const std::vector<int>& shape, double sigma, int width = 0) {
    return {forward_kind::gaussian_blur, ops::gaussian_blur(shape, sigma, width)};
}

inline forward_model make_forward_mask(const space& s, std::vector<long> keep) {
    return {forward_kind::mask, ops::mask(s, std::move(keep))};
}

inline forward_model make_forward_dense(space dom, space cod, mat a) {
    return {forward_kind::dense, linop::dense(std::move(dom), std::move(cod), std::move(a))};
}

struct noise_model {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// f = K u + gaussian noise; bit-reproducible per seed.
inline vec corrupt(const forward_model& fm, const vec& truth, const noise_model& noise) {
    vec f = fm.op.apply(truth);
    if (noise.sigma > 0.0) {
        rng gen(noise.seed);
        f += noise.sigma * gen.gaussian_vector(f.size());
    }
    return f;
}

struct noise_level {
    double sigma;
    double beta;
    vec alpha;  // optional per-level weights (empty: use the run's base weights)
};

/// Geometric noise schedule with the parameter rule beta_k = c * delta_k^r,
/// where delta_k = 0.5 sigma_k^2 m is the expected discrepancy at the data.
inline std::vector<noise_level> halving_schedule(double sigma0, int levels, double c, long data_dim,
                                                 double r = 0.5) {
    std::vector<noise_level> out;
    double sigma = sigma0;
    for (int k = 0; k < levels; ++k) {
        const double delta = 0.5 * sigma * sigma * static_cast<double>(data_dim);
        out.push_back({sigma, c * std::pow(delta, r)});
        sigma *= 0.5;
    }
    return out;
}

struct vanishing_noise_level {
    int k;
    double sigma;
    double delta;   // discrepancy of the noisy data at the clean data
    double beta;
    double err_l2;  // shift-corrected distance to the truth
    double r_value;
    double gap;
    long iterations;
    bool converged;
};

struct vanishing_noise_run {
    std::vector<vanishing_noise_level> levels;
    double r_limit_at_truth = 0.0;  // value of the zero-weight limit functional at the truth
    bool complete = true;           // false when any lower-level solve failed
};

/// Per-level Tikhonov solves along a vanishing-noise schedule. The reported
/// error is corrected by the best shift inside ker(K) intersected with the
/// invariant subspace whenever that intersection is nontrivial.
inline vanishing_noise_run run_vanishing_noise(const reg_graph& g, const vec& alpha, const forward_model& fm,
                                               const vec& truth, const std::vector<noise_level>& schedule,
                                               const solver_config& cfg = {}, std::uint64_t seed = 1) {
    vanishing_noise_run run;
    for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
        if (!(schedule[i + 1].sigma < schedule[i].sigma))
            throw std::invalid_argument("run_vanishing_noise: noise levels must decrease strictly");

    // limit functional value at the truth
    auto [hat_graph, hat_alpha] = zero_weight_limit(g, alpha);
    run.r_limit_at_truth = evaluate_graph(hat_graph, hat_alpha, truth, cfg).value;

    // shift space ker(K) cap L
    const mat l_basis = invariant_subspace(g, alpha).root_basis;
    mat shift_basis(truth.size(), 0);
    if (l_basis.cols() > 0) {
        const auto kern = analyze(fm.op);
        if (kern.kernel_basis.cols() > 0)
            shift_basis = subspace_intersection(kern.kernel_basis, l_basis);
    }

    const vec clean = fm.op.apply(truth);
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const vec f = corrupt(fm, truth, {schedule[k].sigma, seed + k});
        const vec level_alpha = schedule[k].alpha.size() > 0 ? schedule[k].alpha : alpha;
        vanishing_noise_level lvl;
        lvl.k = static_cast<int>(k);
        lvl.sigma = schedule[k].sigma;
        lvl.beta = schedule[k].beta;
        lvl.delta = 0.5 * (f - clean).squaredNorm();

        const auto sol = solve_tikhonov(fm.op, f, schedule[k].beta, g, level_alpha, cfg);
        lvl.converged = sol.converged;
        lvl.iterations = sol.iterations;
        lvl.gap = sol.gap;
        if (!sol.converged) run.complete = false;

        vec diff = sol.minimizer - truth;
        if (shift_basis.cols() > 0) diff -= shift_basis * (shift_basis.transpose() * diff);
        lvl.err_l2 = diff.norm();
        lvl.r_value = evaluate_graph(g, level_alpha, sol.minimizer, cfg).value;
        run.levels.push_back(lvl);
    }
    return run;
}

}  // namespace reggraph
