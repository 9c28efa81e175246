#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <thread>

#include "reggraph/inverse.hpp"
#include "reggraph/solver.hpp"
#include "reggraph/subspace.hpp"

namespace reggraph::bilevel {

/// Weight penalty: learnable edges live in the box [0, c] with an optional l1
/// term; all other edges stay pinned to the graph's stored weights.
struct penalty_h1 {
    std::vector<std::size_t> learnable;
    double box_upper = 1.0;
    double l1_coefficient = 0.0;

    double eval(const reg_graph& g, const vec& alpha) const {
        double s = 0.0;
        for (std::size_t e = 0; e < g.edges().size(); ++e) {
            const bool is_learnable = std::find(learnable.begin(), learnable.end(), e) != learnable.end();
            if (is_learnable) {
                if (alpha[e] < 0.0 || alpha[e] > box_upper) return inf;
                s += l1_coefficient * alpha[e];
            } else if (alpha[e] != g.edges()[e].weight) {
                return inf;
            }
        }
        return s;
    }
};

/// Edge-variable penalty on the summed norms of the projections P^e w_e,
/// either a hard bound (indicator of [0, d]) or a linear penalty.
struct penalty_h2 {
    enum class mode { indicator, linear };
    mode kind = mode::indicator;
    double bound = inf;
    double coefficient = 0.0;

    double eval(double projected_norm_sum) const {
        if (kind == mode::indicator) return projected_norm_sum <= bound ? 0.0 : inf;
        return coefficient * projected_norm_sum;
    }
};

inline double upper_loss(const vec& u, const vec& target, const reg_graph& g, const vec& alpha,
                         double projected_norm_sum, const penalty_h1& h1, const penalty_h2& h2) {
    return (u - target).norm() + h1.eval(g, alpha) + h2.eval(projected_norm_sum);
}

struct bilevel_config {
    enum class search_kind { grid, coordinate_descent, nelder_mead };
    search_kind search = search_kind::grid;
    int grid_resolution = 5;  // per learnable weight
    int beta_resolution = 5;
    double beta_min = 1e-3;
    double beta_max = 1.0;  // beta grid is log-spaced inside (0, inf)
    int cd_passes = 2;
    double cd_shrink = 0.5;
    int nm_budget = 60;
    solver_config lower;
    bool parallel = false;
    bool cache = true;
    double prune_tol_factor = 1e-3;  // prune tolerance = factor * box_upper

    bilevel_config() {
        if (!(beta_min > 0)) throw std::invalid_argument("bilevel: beta range must be positive");
    }
};

struct candidate_record {
    long id;
    vec alpha;
    double beta;
    double loss;
    double gap;
    long iterations;
};

struct bilevel_result {
    vec alpha_hat;
    double beta_hat = 0.0;
    double loss = inf;
    vec minimizer;
    std::vector<candidate_record> trace;
    std::vector<std::size_t> pruned_edges;
    std::string report;
    bool beta_at_boundary = false;
};

/// Names the effective regularizer after pruning weights at prune_tol,
/// pattern-matched on the catalogue families; unknown shapes come back as
/// "custom".
inline std::string limit_regularizer_report(const reg_graph& g, const vec& alpha_hat, double prune_tol) {
    std::map<std::string, double> named;
    for (std::size_t e = 0; e < g.edges().size(); ++e)
        if (!g.edges()[e].weight_name.empty()) named[g.edges()[e].weight_name] = alpha_hat[e];

    if (named.count("alpha0") && named.count("alpha1")) {  // tgv-frame infimal convolution
        const bool frame_on = named["alpha0"] > prune_tol;
        const bool cascade_on = named["alpha1"] > prune_tol;
        if (!frame_on && !cascade_on) return "TV";
        if (!frame_on && cascade_on) return "TGV2";
        if (frame_on && !cascade_on) return "TV (inf-conv) frame-l1";
        return "TGV2 (inf-conv) frame-l1";
    }
    if (named.count("alpha1") && !named.count("alpha0")) {  // tgv cascade
        int order = 1;
        for (int level = 1;; ++level) {
            auto it = named.find("alpha" + std::to_string(level));
            if (it == named.end() || it->second <= prune_tol) break;
            order = level + 1;
        }
        return order == 1 ? "TV" : "TGV" + std::to_string(order);
    }
    if (named.size() == 1 && named.count("alpha")) {
        return named["alpha"] > prune_tol ? "two-branch combination" : "single-branch limit";
    }
    return "custom";
}

/// One supervised example: the ground truth and its measured data.
struct training_pair {
    vec target;
    vec data;
};

namespace detail {

struct candidate_point {
    vec alpha;  // full weight vector
    double beta;
};

struct lower_level_eval {
    double loss = inf;
    double gap = 0.0;
    long iterations = 0;
    vec minimizer;
};

struct evaluator {
    const reg_graph& g;
    const linop& forward;
    const std::vector<training_pair>& pairs;
    const penalty_h1& h1;
    const penalty_h2& h2;
    const std::map<std::size_t, mat>& projectors;
    const solver_config& lower;

    lower_level_eval operator()(const candidate_point& c) const {
        lower_level_eval out;
        const double h1val = h1.eval(g, c.alpha);
        if (h1val == inf) return out;
        const auto ap = assemble(g, c.alpha);
        double loss = h1val;
        out.gap = 0.0;
        for (const auto& pair : pairs) {
            const auto sol = solve_tikhonov(forward, pair.data, c.beta, g, c.alpha, lower);
            double pnorm = 0.0;
            for (const auto& [e, p] : projectors)
                pnorm += (p * ap.edge_segment(sol.edge_vars, e)).norm();
            loss += (sol.minimizer - pair.target).norm() + h2.eval(pnorm);
            out.gap = std::max(out.gap, sol.gap);
            out.iterations += sol.iterations;
            if (out.minimizer.size() == 0) out.minimizer = sol.minimizer;
        }
        out.loss = loss;
        return out;
    }
};

inline std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out;
    if (count == 1) {
        out.push_back(lo);
        return out;
    }
    for (int i = 0; i < count; ++i)
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return out;
}

}  // namespace detail

/// Derivative-free search for the weights and the regularization strength:
/// every candidate's lower-level problems are solved to the configured
/// tolerance; candidates evaluate independently (optionally in parallel) and
/// reduce deterministically by candidate index. Multiple training pairs enter
/// by loss summation.
inline bilevel_result learn(const std::vector<training_pair>& pairs, const linop& forward, const reg_graph& g,
                            const penalty_h1& h1, const penalty_h2& h2, const bilevel_config& cfg = {}) {
    g.require_valid();
    if (pairs.empty()) throw std::invalid_argument("bilevel::learn: no training pairs");
    if (h1.learnable.empty()) throw std::invalid_argument("bilevel::learn: no learnable edges");
    for (auto e : h1.learnable)
        if (e >= g.edges().size()) throw std::invalid_argument("bilevel::learn: learnable edge out of range");

    // P^e projectors from the stored support (the problem data, fixed over the search)
    const auto sub = invariant_subspace(g, g.weights());
    std::map<std::size_t, mat> projectors;
    for (auto e : h1.learnable) projectors.insert({e, sub.edge_projector.at(e)});

    detail::evaluator eval{g, forward, pairs, h1, h2, projectors, cfg.lower};

    const vec base = g.weights();
    auto make_candidate = [&](const std::vector<double>& learn_vals, double beta) {
        detail::candidate_point c{base, beta};
        for (std::size_t i = 0; i < h1.learnable.size(); ++i) c.alpha[h1.learnable[i]] = learn_vals[i];
        return c;
    };

    std::map<std::vector<long>, detail::lower_level_eval> cache;
    auto cache_key = [&](const detail::candidate_point& c) {
        std::vector<long> key;
        for (long i = 0; i < c.alpha.size(); ++i) key.push_back(std::llround(c.alpha[i] * 1e12));
        key.push_back(std::llround(std::log(c.beta) * 1e9));
        return key;
    };

    bilevel_result result;
    long next_id = 0;
    auto run_batch = [&](const std::vector<detail::candidate_point>& batch) {
        std::vector<detail::lower_level_eval> evals(batch.size());
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (cfg.cache) {
                auto it = cache.find(cache_key(batch[i]));
                if (it != cache.end()) {
                    evals[i] = it->second;
                    continue;
                }
            }
            pending.push_back(i);
        }
        if (cfg.parallel && pending.size() > 1) {
            const unsigned workers = std::max(2u, std::thread::hardware_concurrency());
            std::vector<std::future<detail::lower_level_eval>> futs(pending.size());
            std::size_t launched = 0, done = 0;
            while (done < pending.size()) {
                while (launched < pending.size() && launched - done < workers) {
                    futs[launched] = std::async(std::launch::async, eval, batch[pending[launched]]);
                    ++launched;
                }
                evals[pending[done]] = futs[done].get();
                ++done;
            }
        } else {
            for (auto i : pending) evals[i] = eval(batch[i]);
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (cfg.cache) cache[cache_key(batch[i])] = evals[i];
            const long id = next_id++;
            result.trace.push_back({id, batch[i].alpha, batch[i].beta, evals[i].loss, evals[i].gap,
                                    evals[i].iterations});
            if (evals[i].loss < result.loss) {
                result.loss = evals[i].loss;
                result.alpha_hat = batch[i].alpha;
                result.beta_hat = batch[i].beta;
                result.minimizer = evals[i].minimizer;
            }
        }
    };

    const auto betas = detail::log_spaced(cfg.beta_min, cfg.beta_max, cfg.beta_resolution);

    // full grid over the learnable box times the beta ladder
    std::vector<detail::candidate_point> grid;
    std::vector<double> vals(h1.learnable.size(), 0.0);
    std::function<void(std::size_t)> expand = [&](std::size_t d) {
        if (d == vals.size()) {
            for (double b : betas) grid.push_back(make_candidate(vals, b));
            return;
        }
        for (int i = 0; i < cfg.grid_resolution; ++i) {
            vals[d] = cfg.grid_resolution == 1 ? 0.0
                                               : h1.box_upper * static_cast<double>(i) / (cfg.grid_resolution - 1);
            expand(d + 1);
        }
    };
    expand(0);
    run_batch(grid);

    if (cfg.search == bilevel_config::search_kind::coordinate_descent) {
        double radius = h1.box_upper * cfg.cd_shrink;
        double beta_radius = cfg.cd_shrink;
        for (int pass = 0; pass < cfg.cd_passes; ++pass) {
            for (std::size_t d = 0; d < h1.learnable.size(); ++d) {
                std::vector<detail::candidate_point> batch;
                const double center = result.alpha_hat[h1.learnable[d]];
                for (int i = -2; i <= 2; ++i) {
                    double v = std::clamp(center + radius * i / 2.0, 0.0, h1.box_upper);
                    detail::candidate_point c{result.alpha_hat, result.beta_hat};
                    c.alpha[h1.learnable[d]] = v;
                    batch.push_back(c);
                }
                run_batch(batch);
            }
            {
                std::vector<detail::candidate_point> batch;
                for (int i = -2; i <= 2; ++i) {
                    const double b = std::clamp(result.beta_hat * std::pow(1.0 + beta_radius, i / 2.0),
                                                cfg.beta_min, cfg.beta_max);
                    batch.push_back({result.alpha_hat, b});
                }
                run_batch(batch);
            }
            radius *= cfg.cd_shrink;
            beta_radius *= cfg.cd_shrink;
        }
    } else if (cfg.search == bilevel_config::search_kind::nelder_mead) {
        // simplex over (learnable weights..., log beta), clamped to the box
        const std::size_t dim = h1.learnable.size() + 1;
        auto to_point = [&](const vec& x) {
            detail::candidate_point c{result.alpha_hat, 0.0};
            for (std::size_t i = 0; i + 1 < dim; ++i)
                c.alpha[h1.learnable[i]] = std::clamp(x[i], 0.0, h1.box_upper);
            c.beta = std::clamp(std::exp(x[dim - 1]), cfg.beta_min, cfg.beta_max);
            return c;
        };
        auto loss_of = [&](const vec& x) {
            std::vector<detail::candidate_point> batch = {to_point(x)};
            const double before = result.loss;
            run_batch(batch);
            (void)before;
            return result.trace.back().loss;
        };
        std::vector<std::pair<double, vec>> simplex;
        vec x0(dim);
        for (std::size_t i = 0; i + 1 < dim; ++i) x0[i] = result.alpha_hat[h1.learnable[i]];
        x0[dim - 1] = std::log(result.beta_hat);
        simplex.push_back({loss_of(x0), x0});
        for (std::size_t i = 0; i < dim; ++i) {
            vec xi = x0;
            xi[i] += i + 1 == dim ? 0.5 : 0.25 * h1.box_upper;
            simplex.push_back({loss_of(xi), xi});
        }
        for (int it = 0; it < cfg.nm_budget; ++it) {
            std::sort(simplex.begin(), simplex.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            vec centroid = vec::Zero(dim);
            for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i].second;
            centroid /= static_cast<double>(simplex.size() - 1);
            const vec reflected = centroid + (centroid - simplex.back().second);
            const double fr = loss_of(reflected);
            if (fr < simplex.front().first) {
                const vec expanded = centroid + 2.0 * (centroid - simplex.back().second);
                const double fe = loss_of(expanded);
                simplex.back() = fe < fr ? std::make_pair(fe, expanded) : std::make_pair(fr, reflected);
            } else if (fr < simplex[simplex.size() - 2].first) {
                simplex.back() = {fr, reflected};
            } else {
                const vec contracted = centroid + 0.5 * (simplex.back().second - centroid);
                const double fc = loss_of(contracted);
                if (fc < simplex.back().first) {
                    simplex.back() = {fc, contracted};
                } else {
                    for (std::size_t i = 1; i < simplex.size(); ++i) {
                        simplex[i].second = simplex.front().second + 0.5 * (simplex[i].second - simplex.front().second);
                        simplex[i].first = loss_of(simplex[i].second);
                    }
                }
            }
        }
    }

    if (!std::isfinite(result.loss)) throw std::runtime_error("bilevel::learn: every candidate was infeasible");

    const double prune_tol = cfg.prune_tol_factor * h1.box_upper;
    for (auto e : h1.learnable)
        if (result.alpha_hat[e] <= prune_tol) result.pruned_edges.push_back(e);
    result.report = limit_regularizer_report(g, result.alpha_hat, prune_tol);
    result.beta_at_boundary = result.beta_hat <= cfg.beta_min * (1 + 1e-12) ||
                              result.beta_hat >= cfg.beta_max * (1 - 1e-12);
    return result;
}

inline bilevel_result learn(const vec& target, const vec& data, const linop& forward, const reg_graph& g,
                            const penalty_h1& h1, const penalty_h2& h2, const bilevel_config& cfg = {}) {
    return learn(std::vector<training_pair>{{target, data}}, forward, g, h1, h2, cfg);
}

}  // namespace reggraph::bilevel
