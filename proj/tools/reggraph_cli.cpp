// Command-line front end: evaluate regularization graph functionals, solve
// regularized inverse problems, run vanishing-noise studies and bilevel weight
// learning, all driven by a JSON configuration. Exit codes: 0 success,
// 2 solver non-convergence, 3 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "reggraph/config.hpp"
#include "reggraph/oracle.hpp"

namespace fs = std::filesystem;
using namespace reggraph;
using config::json;

namespace {

vec load_input(const json& cfg_json, const std::string& key, const reg_graph& g) {
    if (!cfg_json.contains(key)) throw config::config_error("config." + key + ": required");
    const auto& j = cfg_json.at(key);
    vec v;
    if (j.is_string()) {
        const std::string path = j.get<std::string>();
        if (path.size() > 4 && path.substr(path.size() - 4) == ".pgm") {
            v = io::read_pgm(path).data;
        } else {
            v = io::read_signal_csv(path);
        }
    } else {
        v = config::make_signal(j, "config." + key);
    }
    if (v.size() != g.root_space().dim())
        throw config::config_error("config." + key + ": size " + std::to_string(v.size()) +
                                   " does not match the root space (dim " +
                                   std::to_string(g.root_space().dim()) + ")");
    return v;
}

void write_result_vector(const std::string& dir, const std::string& stem, const vec& v, const space& s) {
    if (s.shape().size() == 2) {
        io::write_pgm(dir + "/" + stem + ".pgm", v, s.shape()[0], s.shape()[1]);
    }
    io::write_signal_csv(dir + "/" + stem + ".csv", v);
}

void write_trace(const std::string& path, const std::vector<trace_row>& trace) {
    std::vector<std::vector<double>> rows;
    for (const auto& t : trace)
        rows.push_back({static_cast<double>(t.iteration), t.primal_residual, t.dual_residual, t.gap});
    io::write_csv(path, "iteration,primal_residual,dual_residual,gap", rows);
}

forward_model parse_forward(const json& j, const reg_graph& g) {
    config::detail::reject_unknown_keys(j, {"kind", "sigma", "width", "keep", "matrix"}, "config.problem.forward");
    const std::string kind = j.value("kind", "identity");
    if (kind == "identity") return make_forward_identity(g.root_space());
    if (kind == "blur") {
        std::vector<int> shape = g.root_space().shape();
        return make_forward_blur(shape, j.at("sigma").get<double>(), j.value("width", 0));
    }
    if (kind == "mask") {
        std::vector<long> keep;
        for (const auto& v : j.at("keep")) keep.push_back(v.get<long>());
        return make_forward_mask(g.root_space(), keep);
    }
    if (kind == "dense") {
        const auto& rows = j.at("matrix");
        mat a(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c) a(r, c) = rows[r][c].get<double>();
        return make_forward_dense(g.root_space(), space::coeffs(static_cast<int>(a.rows())), a);
    }
    throw config::config_error("config.problem.forward: unknown kind '" + kind + "'");
}

int cmd_eval(const config::run_config& cfg) {
    const vec u = load_input(cfg.raw, "input", cfg.graph);
    const auto r = evaluate_graph(cfg.graph, cfg.weights, u, cfg.solver);
    io::write_csv(cfg.output_dir + "/value.csv", "value,dual_value,gap,constraint_residual,iterations,converged",
                  {{r.value, r.dual_value, r.gap, r.constraint_residual, static_cast<double>(r.iterations),
                    r.converged ? 1.0 : 0.0}});
    write_trace(cfg.output_dir + "/trace.csv", r.trace);
    io::write_signal_csv(cfg.output_dir + "/edge_vars.csv", r.edge_vars);
    std::cout << "value " << std::setprecision(12) << r.value << " gap " << r.gap << " iterations " << r.iterations
              << (r.converged ? "" : " (not converged)") << "\n";
    return r.converged ? 0 : 2;
}

int cmd_solve(const config::run_config& cfg) {
    const auto& pj = cfg.raw.at("problem");
    config::detail::reject_unknown_keys(pj, {"forward", "noise", "beta", "data"}, "config.problem");
    const auto fm = parse_forward(pj.value("forward", json{{"kind", "identity"}}), cfg.graph);
    const double beta = pj.at("beta").get<double>();
    vec f;
    if (pj.contains("data")) {
        f = io::read_signal_csv(pj.at("data").get<std::string>());
    } else {
        const vec truth = load_input(cfg.raw, "input", cfg.graph);
        noise_model noise;
        if (pj.contains("noise")) {
            config::detail::reject_unknown_keys(pj.at("noise"), {"sigma", "seed"}, "config.problem.noise");
            noise.sigma = pj.at("noise").value("sigma", 0.0);
            noise.seed = pj.at("noise").value("seed", cfg.seed);
        }
        f = corrupt(fm, truth, noise);
        io::write_signal_csv(cfg.output_dir + "/data.csv", f);
    }
    if (f.size() != fm.op.codomain().dim())
        throw config::config_error("config.problem.data: size does not match the forward model");
    const auto r = solve_tikhonov(fm.op, f, beta, cfg.graph, cfg.weights, cfg.solver);
    write_result_vector(cfg.output_dir, "u", r.minimizer, cfg.graph.root_space());
    write_trace(cfg.output_dir + "/trace.csv", r.trace);
    io::write_csv(cfg.output_dir + "/summary.csv", "objective,dual_value,gap,iterations,converged",
                  {{r.value, r.dual_value, r.gap, static_cast<double>(r.iterations), r.converged ? 1.0 : 0.0}});
    std::cout << "objective " << std::setprecision(12) << r.value << " gap " << r.gap << " iterations "
              << r.iterations << (r.converged ? "" : " (not converged)") << "\n";
    return r.converged ? 0 : 2;
}

int cmd_vanishing_noise(const config::run_config& cfg) {
    const auto& pj = cfg.raw.value("problem", json::object());
    if (!pj.empty())
        config::detail::reject_unknown_keys(pj, {"forward"}, "config.problem");
    const auto fm = parse_forward(pj.value("forward", json{{"kind", "identity"}}), cfg.graph);
    const vec truth = load_input(cfg.raw, "input", cfg.graph);

    const auto& sj = cfg.raw.at("schedule");
    config::detail::reject_unknown_keys(sj, {"sigma0", "levels", "c", "r", "betas", "sigmas"}, "config.schedule");
    std::vector<noise_level> schedule;
    if (sj.contains("sigmas")) {
        const auto& sig = sj.at("sigmas");
        const auto& bet = sj.at("betas");
        if (sig.size() != bet.size()) throw config::config_error("config.schedule: sigmas and betas sizes differ");
        for (std::size_t i = 0; i < sig.size(); ++i)
            schedule.push_back({sig[i].get<double>(), bet[i].get<double>()});
    } else {
        schedule = halving_schedule(sj.value("sigma0", 0.2), sj.value("levels", 5), sj.value("c", 0.5),
                                    fm.op.codomain().dim(), sj.value("r", 0.5));
    }

    const auto run = run_vanishing_noise(cfg.graph, cfg.weights, fm, truth, schedule, cfg.solver, cfg.seed);
    std::vector<std::vector<double>> rows;
    for (const auto& l : run.levels)
        rows.push_back({static_cast<double>(l.k), l.sigma, l.delta, l.beta, l.err_l2, l.r_value, l.gap,
                        static_cast<double>(l.iterations)});
    io::write_csv(cfg.output_dir + "/levels.csv", "k,sigma,delta_k,beta_k,err_l2,R_value,gap,iters", rows);
    std::cout << "levels " << run.levels.size() << " final_err " << run.levels.back().err_l2
              << " R_limit_at_truth " << run.r_limit_at_truth << (run.complete ? "" : " (partial)") << "\n";
    return run.complete ? 0 : 2;
}

int cmd_bilevel(const config::run_config& cfg) {
    const auto& bj = cfg.raw.at("bilevel");
    config::detail::reject_unknown_keys(bj,
                                        {"search", "grid_resolution", "beta_resolution", "beta_min", "beta_max",
                                         "cd_passes", "cd_shrink", "nm_budget", "parallel", "cache", "box_upper",
                                         "l1_coefficient", "learnable", "h2", "target", "prune_tol_factor"},
                                        "config.bilevel");
    bilevel::bilevel_config bcfg;
    const std::string search = bj.value("search", "grid");
    if (search == "grid") bcfg.search = bilevel::bilevel_config::search_kind::grid;
    else if (search == "coordinate_descent") bcfg.search = bilevel::bilevel_config::search_kind::coordinate_descent;
    else if (search == "nelder_mead") bcfg.search = bilevel::bilevel_config::search_kind::nelder_mead;
    else throw config::config_error("config.bilevel.search: unknown search '" + search + "'");
    bcfg.grid_resolution = bj.value("grid_resolution", bcfg.grid_resolution);
    bcfg.beta_resolution = bj.value("beta_resolution", bcfg.beta_resolution);
    bcfg.beta_min = bj.value("beta_min", bcfg.beta_min);
    bcfg.beta_max = bj.value("beta_max", bcfg.beta_max);
    if (!(bcfg.beta_min > 0)) throw config::config_error("config.bilevel.beta_min: must be positive");
    bcfg.cd_passes = bj.value("cd_passes", bcfg.cd_passes);
    bcfg.cd_shrink = bj.value("cd_shrink", bcfg.cd_shrink);
    bcfg.nm_budget = bj.value("nm_budget", bcfg.nm_budget);
    bcfg.parallel = bj.value("parallel", false);
    bcfg.cache = bj.value("cache", true);
    bcfg.prune_tol_factor = bj.value("prune_tol_factor", bcfg.prune_tol_factor);
    bcfg.lower = cfg.solver;

    bilevel::penalty_h1 h1;
    h1.box_upper = bj.value("box_upper", 1.0);
    h1.l1_coefficient = bj.value("l1_coefficient", 0.0);
    if (bj.contains("learnable")) {
        for (const auto& nm : bj.at("learnable")) {
            const std::string name = nm.get<std::string>();
            bool found = false;
            for (std::size_t e = 0; e < cfg.graph.edges().size(); ++e)
                if (cfg.graph.edges()[e].weight_name == name) {
                    h1.learnable.push_back(e);
                    found = true;
                }
            if (!found) throw config::config_error("config.bilevel.learnable: no edge named '" + name + "'");
        }
    } else {
        for (std::size_t e = 0; e < cfg.graph.edges().size(); ++e)
            if (cfg.graph.edges()[e].kind == weight_kind::learnable) h1.learnable.push_back(e);
    }

    bilevel::penalty_h2 h2;
    if (bj.contains("h2")) {
        config::detail::reject_unknown_keys(bj.at("h2"), {"mode", "bound", "coefficient"}, "config.bilevel.h2");
        const std::string mode = bj.at("h2").value("mode", "indicator");
        h2.kind = mode == "linear" ? bilevel::penalty_h2::mode::linear : bilevel::penalty_h2::mode::indicator;
        h2.bound = bj.at("h2").value("bound", h2.bound);
        h2.coefficient = bj.at("h2").value("coefficient", h2.coefficient);
    }

    vec target;
    if (bj.contains("target") && bj.at("target").is_string()) {
        target = io::read_signal_csv(bj.at("target").get<std::string>());
    } else if (bj.contains("target")) {
        target = config::make_signal(bj.at("target"), "config.bilevel.target");
    } else {
        target = load_input(cfg.raw, "input", cfg.graph);
    }

    const auto& pj = cfg.raw.at("problem");
    config::detail::reject_unknown_keys(pj, {"forward", "noise", "data"}, "config.problem");
    const auto fm = parse_forward(pj.value("forward", json{{"kind", "identity"}}), cfg.graph);
    vec f;
    if (pj.contains("data")) {
        f = io::read_signal_csv(pj.at("data").get<std::string>());
    } else {
        noise_model noise;
        if (pj.contains("noise")) {
            noise.sigma = pj.at("noise").value("sigma", 0.0);
            noise.seed = pj.at("noise").value("seed", cfg.seed);
        }
        f = corrupt(fm, target, noise);
    }

    const auto res = bilevel::learn(target, f, fm.op, cfg.graph, h1, h2, bcfg);

    std::vector<std::vector<double>> rows;
    for (const auto& c : res.trace) {
        std::vector<double> row = {static_cast<double>(c.id)};
        for (auto e : h1.learnable) row.push_back(c.alpha[e]);
        row.push_back(c.beta);
        row.push_back(c.loss);
        row.push_back(c.gap);
        row.push_back(static_cast<double>(c.iterations));
        rows.push_back(std::move(row));
    }
    std::string header = "candidate_id";
    for (auto e : h1.learnable)
        header += "," + (cfg.graph.edges()[e].weight_name.empty() ? "alpha_edge" + std::to_string(e)
                                                                  : cfg.graph.edges()[e].weight_name);
    header += ",beta,loss,gap,iters";
    io::write_csv(cfg.output_dir + "/bilevel_trace.csv", header, rows);
    write_result_vector(cfg.output_dir, "u_best", res.minimizer, cfg.graph.root_space());

    std::ostringstream report;
    report << "selected weights:";
    for (auto e : h1.learnable)
        report << " " << (cfg.graph.edges()[e].weight_name.empty() ? "edge" + std::to_string(e)
                                                                   : cfg.graph.edges()[e].weight_name)
               << "=" << res.alpha_hat[e];
    report << "\nbeta: " << res.beta_hat << (res.beta_at_boundary ? " (at the search boundary)" : "");
    report << "\nloss: " << res.loss;
    report << "\npruned edges:";
    for (auto e : res.pruned_edges) report << " " << e;
    report << "\neffective regularizer: " << res.report << "\n";
    std::ofstream(cfg.output_dir + "/report.txt") << report.str();
    std::cout << report.str();
    return 0;
}

int cmd_graph_info(const config::run_config& cfg) {
    const json info = config::graph_info(cfg);
    std::ofstream(cfg.output_dir + "/graph_info.json") << info.dump(2) << "\n";
    std::cout << info.dump(2) << "\n";
    return 0;
}

int check(bool ok, const std::string& name, int& failures) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
    return failures;
}

/// Compact re-run of the per-module invariants.
int cmd_verify() {
    int failures = 0;
    rng gen(7);

    {  // operator adjoints
        bool ok = true;
        for (const auto& op : {ops::grad_1d(9), ops::grad_2d(4, 5), ops::symgrad_2d(4, 4), ops::haar({8}),
                               ops::dct({6}), ops::gaussian_blur({7}, 1.0)}) {
            for (int t = 0; t < 25; ++t) {
                const vec x = gen.gaussian_vector(op.domain().dim());
                const vec y = gen.gaussian_vector(op.codomain().dim());
                const double defect = std::abs(op.apply(x).dot(y) - x.dot(op.apply_adjoint(y)));
                ok = ok && defect <= 1e-10 * (1 + x.norm() * y.norm()) * std::max(1.0, operator_norm_value(op));
            }
        }
        check(ok, "operator adjoint identities", failures);
    }
    {  // kernels
        bool ok = analyze(ops::grad_1d(8)).kernel_basis.cols() == 1;
        ok = ok && analyze(ops::grad_2d(5, 4)).kernel_basis.cols() == 1;
        ok = ok && analyze(ops::symgrad_2d(5, 5)).kernel_basis.cols() == 3;
        check(ok, "difference-operator kernels", failures);
    }
    {  // functional identities
        bool ok = true;
        const auto sp = space::vector({3}, 2);
        for (const auto& f : {functional::group_l1(sp), functional::half_squared_l2(sp, 2.0),
                              functional::lq(sp, 1.5, 0.7)}) {
            for (int t = 0; t < 20; ++t) {
                const vec v = gen.gaussian_vector(6);
                ok = ok && (f.prox(v, 1.0) + f.prox_conjugate(v, 1.0) - v).norm() <= 1e-10 * (1 + v.norm());
            }
        }
        check(ok, "Moreau decomposition", failures);
    }
    {  // graph scaling inequality and oracle agreement
        bool ok = true;
        const auto g = library::tgv2({8}, 0.8);
        const auto tight = solver_config{}.with_tol(1e-9);
        for (int t = 0; t < 3; ++t) {
            const vec u = gen.gaussian_vector(8);
            const double full = evaluate_graph(g, g.weights(), u, tight).value;
            for (double lam : {0.1, 0.5}) {
                const double scaled = evaluate_graph(g, g.weights(), vec(lam * u), tight).value;
                ok = ok && scaled <= lam * full + 1e-6;
            }
            ok = ok && std::abs(full - oracle::brute_eval(g, u).value) <= std::max(1e-4, 1e-3 * full);
        }
        check(ok, "graph scaling inequality and oracle agreement", failures);
    }
    {  // zero-weight limit domination at the same weights
        bool ok = true;
        const auto g = library::tgv2({8}, 0.8);
        vec a = g.weights();
        a[2] = 0.0;
        auto [hat, lifted] = zero_weight_limit(g, a);
        for (int t = 0; t < 3; ++t) {
            const vec u = gen.gaussian_vector(8);
            ok = ok && evaluate_graph(hat, lifted, u).value <= evaluate_graph(g, a, u).value + 1e-5;
        }
        check(ok, "zero-weight limit domination", failures);
    }
    {  // taut string vs solver
        bool ok = true;
        const auto g = library::tv({24});
        const auto id = linop::identity(space::scalar({24}));
        for (int t = 0; t < 3; ++t) {
            const vec f = gen.gaussian_vector(24);
            solver_config cfg;
            cfg.gap_tol = 1e-12;
            const auto r = solve_tikhonov(id, f, 0.4, g, g.weights(), cfg);
            ok = ok && (r.minimizer - oracle::taut_string_tv_denoise(f, 0.4)).lpNorm<Eigen::Infinity>() <= 1e-4;
        }
        check(ok, "tv denoising against the taut string", failures);
    }
    std::cout << (failures == 0 ? "verify: all checks passed\n" : "verify: FAILURES present\n");
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regularization-graph toolbox"};
    std::string config_path;
    std::string output_override;
    app.add_option("config", config_path, "JSON run configuration (omit for 'verify')");
    app.add_option("--output-dir", output_override, "override the configured output directory");
    bool verify_flag = false;
    app.add_flag("--verify", verify_flag, "run the built-in verification suite");
    CLI11_PARSE(app, argc, argv);

    try {
        if (verify_flag || config_path.empty()) {
            if (verify_flag) return cmd_verify();
            std::cerr << "usage: reggraph_cli <config.json> | reggraph_cli --verify\n";
            return 3;
        }
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot open config: " << config_path << "\n";
            return 3;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        auto cfg = config::parse_config(buf.str());
        if (!output_override.empty()) cfg.output_dir = output_override;
        fs::create_directories(cfg.output_dir);

        if (cfg.command == "verify") return cmd_verify();
        if (cfg.command == "eval") return cmd_eval(cfg);
        if (cfg.command == "solve") return cmd_solve(cfg);
        if (cfg.command == "vanishing-noise") return cmd_vanishing_noise(cfg);
        if (cfg.command == "bilevel") return cmd_bilevel(cfg);
        if (cfg.command == "graph-info") return cmd_graph_info(cfg);
        std::cerr << "unhandled command\n";
        return 3;
    } catch (const config::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
