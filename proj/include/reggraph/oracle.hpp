#pragma once

#include <Eigen/Cholesky>

#include "reggraph/assembly.hpp"
#include "reggraph/rng.hpp"

namespace reggraph::oracle {

/// Configuration of the reference minimizer. The oracle is a deliberately
/// separate code path: dense matrices, a smoothed penalty objective and a
/// damped Newton loop; it shares only the operator layer with the solver and
/// never touches duality.
struct oracle_config {
    double penalty_max = 1e8;       // final quadratic penalty on indicator rows
    double smoothing_min = 1e-11;   // final smoothing of the nonsmooth terms
    int stages = 10;                // continuation steps
    int newton_iters = 80;          // per stage
    double grad_tol = 1e-11;
    long max_edge_dim = 512;
};

struct brute_result {
    double value = 0.0;
    double constraint_residual = 0.0;
    bool converged = true;
    double uncertainty = 0.0;
    vec edge_vars;
};

namespace detail {

struct term_eval {
    double value = 0.0;
    vec grad;
    mat hess;
};

/// Smoothed value/gradient/Hessian of one node row at z. Indicator rows enter
/// through quadratic penalties with strength mu.
inline term_eval smoothed_row(const functional& f, const vec& z, double eps, double mu) {
    term_eval out;
    out.grad = vec::Zero(z.size());
    out.hess = mat::Zero(z.size(), z.size());
    const space& sp = f.domain();

    auto group_points = [&](double lambda, auto radius_at, bool penalty) {
        const long N = sp.points();
        const int c = sp.channels();
        for (long p = 0; p < N; ++p) {
            vec zp(c);
            for (int ch = 0; ch < c; ++ch) zp[ch] = z[ch * N + p];
            const double s = std::sqrt(zp.squaredNorm() + eps * eps);
            if (!penalty) {
                out.value += lambda * s;
                const vec g = lambda / s * zp;
                const mat h = lambda * (mat::Identity(c, c) / s - zp * zp.transpose() / (s * s * s));
                for (int a = 0; a < c; ++a) {
                    out.grad[a * N + p] += g[a];
                    for (int b = 0; b < c; ++b) out.hess(a * N + p, b * N + p) += h(a, b);
                }
            } else {
                const double gamma = radius_at(p);
                const double ex = s - gamma;
                if (ex <= 0) continue;
                out.value += 0.5 * mu * ex * ex;
                const vec g = mu * ex / s * zp;
                const mat zz = zp * zp.transpose() / (s * s);
                const mat h = mu * (zz + ex / s * (mat::Identity(c, c) - zz));
                for (int a = 0; a < c; ++a) {
                    out.grad[a * N + p] += g[a];
                    for (int b = 0; b < c; ++b) out.hess(a * N + p, b * N + p) += h(a, b);
                }
            }
        }
    };

    switch (f.kind()) {
        case functional_kind::indicator_zero:
            out.value = 0.5 * mu * z.squaredNorm();
            out.grad = mu * z;
            out.hess = mu * mat::Identity(z.size(), z.size());
            break;
        case functional_kind::zero: break;
        case functional_kind::half_squared_l2:
            out.value = 0.5 * f.weight() * z.squaredNorm();
            out.grad = f.weight() * z;
            out.hess = f.weight() * mat::Identity(z.size(), z.size());
            break;
        case functional_kind::lq: {
            const double q = f.q(), w = f.weight();
            for (long i = 0; i < z.size(); ++i) {
                const double s2 = z[i] * z[i] + eps * eps;
                out.value += w / q * std::pow(s2, q / 2.0);
                out.grad[i] = w * z[i] * std::pow(s2, q / 2.0 - 1.0);
                out.hess(i, i) = w * std::pow(s2, q / 2.0 - 2.0) * (eps * eps + (q - 1.0) * z[i] * z[i]);
            }
            break;
        }
        case functional_kind::group_l1:
            group_points(f.weight(), [](long) { return 0.0; }, false);
            break;
        case functional_kind::group_l1_aniso: {
            const long N = sp.points();
            const int c = sp.channels();
            const vec& betas = f.channel_weights();
            for (long p = 0; p < N; ++p) {
                vec zp(c);
                for (int ch = 0; ch < c; ++ch) zp[ch] = betas[ch] * z[ch * N + p];
                const double s = std::sqrt(zp.squaredNorm() + eps * eps);
                out.value += f.weight() * s;
                for (int a = 0; a < c; ++a) {
                    out.grad[a * N + p] += f.weight() * betas[a] * zp[a] / s;
                    for (int b = 0; b < c; ++b) {
                        double h = -zp[a] * zp[b] / (s * s * s);
                        if (a == b) h += 1.0 / s;
                        out.hess(a * N + p, b * N + p) += f.weight() * betas[a] * betas[b] * h;
                    }
                }
            }
            break;
        }
        case functional_kind::indicator_ball:
            group_points(1.0, [&](long p) { return f.radius()[p]; }, true);
            break;
        case functional_kind::composite_fg: {
            const long n0 = f.children()[0].domain().dim();
            const auto a = smoothed_row(f.children()[0], z.head(n0), eps, mu);
            const auto b = smoothed_row(f.children()[1], z.tail(z.size() - n0), eps, mu);
            out.value = a.value + b.value;
            out.grad.head(n0) = a.grad;
            out.grad.tail(z.size() - n0) = b.grad;
            out.hess.topLeftCorner(n0, n0) = a.hess;
            out.hess.bottomRightCorner(z.size() - n0, z.size() - n0) = b.hess;
            break;
        }
    }
    return out;
}

}  // namespace detail

/// Direct minimization over the edge variables of the node-functional sum,
/// with indicator rows enforced by a quadratic penalty driven through a
/// mu-continuation and the nonsmooth terms smoothed away under an
/// eps-continuation; each stage is solved by damped Newton.
inline brute_result brute_eval(const reg_graph& g, const vec& alpha, const vec& u, const oracle_config& cfg = {}) {
    const auto ap = assemble(g, alpha);
    if (ap.edge_dim() > cfg.max_edge_dim)
        throw std::invalid_argument("brute_eval: total edge dimension exceeds the oracle limit");

    const std::size_t root = ap.node_index(g.root_id());
    const std::size_t nn = g.nodes().size();

    // dense node-row blocks of the graph operator
    std::vector<mat> rows(nn);
    {
        const long ne = ap.edge_dim();
        mat full(ap.node_dim(), ne);
        vec e = vec::Zero(ne);
        for (long j = 0; j < ne; ++j) {
            e[j] = 1.0;
            full.col(j) = ap.apply(e);
            e[j] = 0.0;
        }
        for (std::size_t n = 0; n < nn; ++n)
            rows[n] = full.middleRows(ap.node_offset(n), g.nodes()[n].node_space.dim());
    }
    auto offset_of = [&](std::size_t n) {
        return n == root ? u : vec(vec::Zero(g.nodes()[n].node_space.dim()));
    };

    vec w = vec::Zero(ap.edge_dim());
    brute_result res;

    for (int stage = 0; stage < cfg.stages; ++stage) {
        const double mu = std::min(cfg.penalty_max, std::pow(10.0, 1.0 + stage));
        const double eps = std::max(cfg.smoothing_min, std::pow(10.0, -2.0 - stage));

        auto objective = [&](const vec& x, vec* grad, mat* hess) {
            double val = 0.0;
            if (grad) grad->setZero();
            if (hess) hess->setZero();
            for (std::size_t n = 0; n < nn; ++n) {
                const vec z = rows[n] * x + offset_of(n);
                const auto t = detail::smoothed_row(g.nodes()[n].node_functional, z, eps, mu);
                val += t.value;
                if (grad) *grad += rows[n].transpose() * t.grad;
                if (hess) *hess += rows[n].transpose() * t.hess * rows[n];
            }
            return val;
        };

        vec grad(w.size());
        mat hess(w.size(), w.size());
        double val = objective(w, &grad, &hess);
        for (int it = 0; it < cfg.newton_iters; ++it) {
            if (grad.norm() <= cfg.grad_tol * (1.0 + std::abs(val)) * (1.0 + mu)) break;
            mat h = hess;
            const double damp = 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
            h.diagonal().array() += damp;
            const vec dir = -h.ldlt().solve(grad);
            const double slope = grad.dot(dir);
            if (!(slope < 0)) break;
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                const vec cand = w + step * dir;
                const double cv = objective(cand, nullptr, nullptr);
                if (cv <= val + 1e-4 * step * slope) {
                    w = cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            val = objective(w, &grad, &hess);
        }
    }

    const auto parts = ap.objective(w, u);
    res.value = parts.value;
    res.constraint_residual = parts.constraint_residual;
    res.edge_vars = w;
    res.converged = parts.constraint_residual <= 1e-5 * (1.0 + u.norm());
    res.uncertainty = 10.0 * (cfg.smoothing_min * ap.node_dim() + parts.constraint_residual);
    return res;
}

inline brute_result brute_eval(const reg_graph& g, const vec& u, const oracle_config& cfg = {}) {
    return brute_eval(g, g.weights(), u, cfg);
}

/// Exact minimizer of 0.5 ||u - f||^2 + lambda TV(u) in 1-D through the taut
/// string construction: the string runs through the +-lambda tube around the
/// running sums, pinned at both ends, and the minimizer is its slope
/// sequence. Greedy leftmost-contact walk; restarts keep it exact.
inline vec taut_string_tv_denoise(const vec& f, double lambda) {
    const long n = f.size();
    if (n <= 1 || lambda <= 0) return f;

    vec r(n + 1);
    r[0] = 0.0;
    for (long i = 0; i < n; ++i) r[i + 1] = r[i] + f[i];

    auto upper = [&](long i) { return i == n ? r[n] : r[i] + lambda; };
    auto lower = [&](long i) { return i == n ? r[n] : r[i] - lambda; };

    vec u(n);
    long anchor = 0;
    double s_anchor = 0.0;
    while (anchor < n) {
        double min_up = inf, max_lo = -inf;
        long arg_up = anchor, arg_lo = anchor;
        long touch = -1;       // index where the string touches the tube
        double slope = 0.0;
        bool touch_upper = false;
        for (long i = anchor + 1; i <= n; ++i) {
            const double su = (upper(i) - s_anchor) / static_cast<double>(i - anchor);
            const double sl = (lower(i) - s_anchor) / static_cast<double>(i - anchor);
            if (sl > min_up) {  // forced onto the upper bound at arg_up
                touch = arg_up;
                slope = min_up;
                touch_upper = true;
                break;
            }
            if (su < max_lo) {  // forced onto the lower bound at arg_lo
                touch = arg_lo;
                slope = max_lo;
                touch_upper = false;
                break;
            }
            if (su < min_up) {
                min_up = su;
                arg_up = i;
            }
            if (sl > max_lo) {
                max_lo = sl;
                arg_lo = i;
            }
            if (i == n) {  // straight segment to the pinned endpoint fits
                touch = n;
                slope = (r[n] - s_anchor) / static_cast<double>(n - anchor);
            }
        }
        for (long i = anchor; i < touch; ++i) u[i] = slope;
        s_anchor = touch == n ? r[n] : (touch_upper ? upper(touch) : lower(touch));
        anchor = touch;
    }
    return u;
}

struct probe_report {
    std::vector<long> confirmed;  // indices of confirmed invariant directions
    std::vector<long> rejected;
};

/// Confirms candidate invariant directions by probing the oracle value at
/// shifted inputs.
inline probe_report zero_set_probe(const reg_graph& g, const vec& alpha, const std::vector<vec>& candidates,
                                   double tol = 1e-3, std::uint64_t seed = 2024) {
    rng gen(seed);
    const vec u0 = gen.gaussian_vector(g.root_space().dim());
    const double base = brute_eval(g, alpha, u0).value;
    probe_report rep;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        bool ok = true;
        for (double t : {1.0, -1.0, 10.0, -10.0}) {
            const double shifted = brute_eval(g, alpha, u0 + t * candidates[j]).value;
            if (std::abs(shifted - base) > tol * (1.0 + std::abs(base))) {
                ok = false;
                break;
            }
        }
        (ok ? rep.confirmed : rep.rejected).push_back(static_cast<long>(j));
    }
    return rep;
}

}  // namespace reggraph::oracle
