#pragma once

#include <json.hpp>

#include <optional>
#include <set>
#include <string>

#include "reggraph/bilevel.hpp"
#include "reggraph/inverse.hpp"
#include "reggraph/io.hpp"
#include "reggraph/library.hpp"

namespace reggraph::config {

using json = nlohmann::json;

/// Configuration errors carry the key path of the offending entry.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    if (!obj.is_object()) throw config_error(path + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw config_error(path + ": unknown key '" + it.key() + "'");
}

inline std::vector<int> parse_shape(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw config_error(path + ": shape must be a nonempty array");
    std::vector<int> shape;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<int>() <= 0) throw config_error(path + ": shape entries must be positive integers");
        shape.push_back(v.get<int>());
    }
    return shape;
}

inline vec parse_vector(const json& j, const std::string& path) {
    if (j.is_number()) {
        vec v(1);
        v[0] = j.get<double>();
        return v;
    }
    if (!j.is_array()) throw config_error(path + ": expected a number or an array");
    vec v(static_cast<long>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

}  // namespace detail

inline space parse_space(const json& j, const std::string& path = "space") {
    detail::reject_unknown_keys(j, {"kind", "shape", "channels", "order", "length", "parts"}, path);
    const std::string kind = j.value("kind", "scalar");
    if (kind == "scalar") return space::scalar(detail::parse_shape(j.at("shape"), path));
    if (kind == "vector") return space::vector(detail::parse_shape(j.at("shape"), path), j.at("channels").get<int>());
    if (kind == "sym_tensor") return space::sym_tensor(detail::parse_shape(j.at("shape"), path), j.at("order").get<int>());
    if (kind == "coeffs") return space::coeffs(j.at("length").get<int>());
    if (kind == "product") {
        std::vector<space> parts;
        for (std::size_t i = 0; i < j.at("parts").size(); ++i)
            parts.push_back(parse_space(j.at("parts")[i], path + ".parts[" + std::to_string(i) + "]"));
        return space::product(std::move(parts));
    }
    throw config_error(path + ": unknown space kind '" + kind + "'");
}

inline functional parse_functional(const json& j, const space& domain, const std::string& path = "functional") {
    detail::reject_unknown_keys(j, {"kind", "weight", "q", "channel_weights", "radius", "f", "g"}, path);
    const std::string kind = j.value("kind", "");
    if (kind == "indicator_zero") return functional::indicator_zero(domain);
    if (kind == "zero") return functional::zero(domain);
    if (kind == "group_l1") return functional::group_l1(domain, j.value("weight", 1.0));
    if (kind == "group_l1_aniso")
        return functional::group_l1_aniso(domain, detail::parse_vector(j.at("channel_weights"), path),
                                          j.value("weight", 1.0));
    if (kind == "lq") return functional::lq(domain, j.at("q").get<double>(), j.value("weight", 1.0));
    if (kind == "half_squared_l2") return functional::half_squared_l2(domain, j.value("weight", 1.0));
    if (kind == "indicator_ball") return functional::indicator_ball(domain, detail::parse_vector(j.at("radius"), path));
    if (kind == "composite_fg") {
        if (domain.kind() != space_kind::product || domain.parts().size() != 2)
            throw config_error(path + ": composite_fg needs a two-part product space");
        return functional::composite_fg(domain, parse_functional(j.at("f"), domain.parts()[0], path + ".f"),
                                        parse_functional(j.at("g"), domain.parts()[1], path + ".g"));
    }
    throw config_error(path + ": unknown functional kind '" + kind + "'");
}

inline linop parse_operator(const json& j, const std::string& path = "operator") {
    detail::reject_unknown_keys(j, {"kind", "shape", "k", "sigma", "width", "scale", "dim", "keep", "kernel", "order"},
                                path);
    const std::string kind = j.value("kind", "");
    if (kind == "identity") {
        if (j.contains("dim")) return linop::identity(space::coeffs(j.at("dim").get<int>()));
        return linop::identity(space::scalar(detail::parse_shape(j.at("shape"), path)));
    }
    if (kind == "scaled_identity") {
        const auto s = j.contains("dim") ? space::coeffs(j.at("dim").get<int>())
                                         : space::scalar(detail::parse_shape(j.at("shape"), path));
        return linop::scaled_identity(s, j.at("scale").get<double>());
    }
    if (kind == "grad") return ops::grad(detail::parse_shape(j.at("shape"), path));
    if (kind == "grad_k") return ops::grad_k(detail::parse_shape(j.at("shape"), path), j.at("k").get<int>());
    if (kind == "symgrad") return ops::symgrad(detail::parse_shape(j.at("shape"), path));
    if (kind == "haar") return ops::haar(detail::parse_shape(j.at("shape"), path));
    if (kind == "dct") return ops::dct(detail::parse_shape(j.at("shape"), path));
    if (kind == "blur")
        return ops::gaussian_blur(detail::parse_shape(j.at("shape"), path), j.at("sigma").get<double>(),
                                  j.value("width", 0));
    if (kind == "conv") {
        const auto shape = detail::parse_shape(j.at("shape"), path);
        std::vector<double> kernel;
        for (const auto& v : j.at("kernel")) kernel.push_back(v.get<double>());
        if (shape.size() == 1) return ops::conv_1d(shape[0], kernel);
        return ops::conv_2d(shape[0], shape[1], kernel);
    }
    if (kind == "mask") {
        std::vector<long> keep;
        for (const auto& v : j.at("keep")) keep.push_back(v.get<long>());
        return ops::mask(space::scalar(detail::parse_shape(j.at("shape"), path)), keep);
    }
    throw config_error(path + ": unknown operator kind '" + kind + "'");
}

inline library::frame_kind parse_frame(const std::string& name, const std::string& path) {
    if (name == "haar") return library::frame_kind::haar;
    if (name == "dct") return library::frame_kind::dct;
    if (name == "identity") return library::frame_kind::identity;
    throw config_error(path + ": unknown frame '" + name + "'");
}

/// Builds a graph either from a catalogue name with parameters or from an
/// explicit node/edge listing.
inline reg_graph parse_graph(const json& j, const std::string& path = "graph") {
    if (j.contains("name")) {
        detail::reject_unknown_keys(j,
                                    {"name", "shape", "k", "k1", "k2", "alpha", "alpha0", "alpha1", "weights", "q",
                                     "beta1", "beta2", "frame", "frame1", "frame2", "gamma", "coeff", "f", "g"},
                                    path);
        const std::string name = j.at("name").get<std::string>();
        const auto shape = detail::parse_shape(j.at("shape"), path);
        if (name == "tv") return library::tv(shape);
        if (name == "tvk") return library::tvk(shape, j.at("k").get<int>());
        if (name == "tvk_infconv")
            return library::tvk_infconv(shape, j.at("k1").get<int>(), j.at("k2").get<int>(), j.value("alpha", 1.0));
        if (name == "tgv") {
            const int k = j.value("k", 2);
            std::vector<double> w;
            if (j.contains("weights"))
                for (const auto& v : j.at("weights")) w.push_back(v.get<double>());
            else w.assign(k - 1, j.value("alpha", 1.0));
            return library::tgv(shape, k, w);
        }
        if (name == "tgv_frame_infconv")
            return library::tgv_frame_infconv(shape, j.value("alpha0", 1.0), j.value("alpha1", 1.0),
                                              parse_frame(j.value("frame", "haar"), path));
        if (name == "tv_lq") return library::tv_lq(shape, j.at("q").get<double>(), j.value("alpha", 1.0));
        if (name == "spatiotemporal")
            return library::spatiotemporal(shape, detail::parse_vector(j.at("beta1"), path),
                                           detail::parse_vector(j.at("beta2"), path), j.value("alpha", 1.0));
        if (name == "sum_fg") {
            json fj = j.value("f", json{{"kind", "group_l1"}});
            json gj = j.value("g", json{{"kind", "group_l1"}});
            return library::sum_fg(
                shape, [&](space s) { return parse_functional(fj, s, path + ".f"); },
                [&](space s) { return parse_functional(gj, s, path + ".g"); });
        }
        if (name == "second_order_general") {
            mat coeff = mat::Identity(1, 1);
            if (j.contains("coeff")) {
                const auto& rows = j.at("coeff");
                coeff = mat(rows.size(), rows[0].size());
                for (std::size_t r = 0; r < rows.size(); ++r)
                    for (std::size_t c = 0; c < rows[r].size(); ++c) coeff(r, c) = rows[r][c].get<double>();
            }
            return library::second_order_general(shape, coeff, j.value("alpha", 1.0));
        }
        if (name == "tight_frames")
            return library::tight_frames(shape, parse_frame(j.value("frame1", "haar"), path),
                                         parse_frame(j.value("frame2", "dct"), path), j.value("alpha", 1.0));
        if (name == "tv_pwl") {
            vec gamma = detail::parse_vector(j.at("gamma"), path);
            const auto g = ops::grad(shape);
            if (gamma.size() == 1) gamma = vec::Constant(g.codomain().points(), gamma[0]);
            return library::tv_pwl(shape, gamma, j.value("alpha", 1.0));
        }
        throw config_error(path + ": unknown graph name '" + name + "'");
    }

    detail::reject_unknown_keys(j, {"nodes", "edges", "root"}, path);
    std::vector<graph_node> nodes;
    for (std::size_t i = 0; i < j.at("nodes").size(); ++i) {
        const auto& nj = j.at("nodes")[i];
        const std::string np = path + ".nodes[" + std::to_string(i) + "]";
        detail::reject_unknown_keys(nj, {"id", "space", "functional"}, np);
        const space s = parse_space(nj.at("space"), np + ".space");
        nodes.push_back({nj.at("id").get<std::string>(), s, parse_functional(nj.at("functional"), s, np + ".functional")});
    }
    std::vector<graph_edge> edges;
    for (std::size_t i = 0; i < j.at("edges").size(); ++i) {
        const auto& ej = j.at("edges")[i];
        const std::string ep = path + ".edges[" + std::to_string(i) + "]";
        detail::reject_unknown_keys(ej, {"tail", "head", "forward", "backward", "weight", "learnable", "name"}, ep);
        graph_edge e;
        e.tail = ej.at("tail").get<std::string>();
        e.head = ej.at("head").get<std::string>();
        e.forward_op = parse_operator(ej.at("forward"), ep + ".forward");
        e.backward_op = parse_operator(ej.at("backward"), ep + ".backward");
        e.weight = ej.value("weight", 1.0);
        e.kind = ej.value("learnable", false) ? weight_kind::learnable : weight_kind::trivial;
        e.weight_name = ej.value("name", "");
        edges.push_back(std::move(e));
    }
    reg_graph g(std::move(nodes), std::move(edges), j.at("root").get<std::string>());
    const auto violations = g.validate();
    if (!violations.empty())
        throw config_error(path + ": invalid graph: " + violations[0].code + " (" + violations[0].detail + ")");
    return g;
}

/// Deterministic synthetic inputs for experiments.
inline vec make_signal(const json& j, const std::string& path = "input") {
    detail::reject_unknown_keys(j, {"kind", "n", "shape", "seed", "value", "pieces"}, path);
    const std::string kind = j.value("kind", "random");
    long n = 0;
    if (j.contains("n")) n = j.at("n").get<long>();
    else if (j.contains("shape")) {
        n = 1;
        for (int s : detail::parse_shape(j.at("shape"), path)) n *= s;
    } else {
        throw config_error(path + ": needs n or shape");
    }
    const auto seed = j.value("seed", 0ULL);
    if (kind == "constant") return vec::Constant(n, j.value("value", 1.0));
    if (kind == "step") {
        vec v = vec::Zero(n);
        v.tail(n - n / 2).setConstant(1.0);
        return v;
    }
    if (kind == "random") {
        rng gen(seed);
        return gen.gaussian_vector(n);
    }
    if (kind == "piecewise_constant") {
        rng gen(seed);
        const int pieces = j.value("pieces", 4);
        vec v(n);
        long at = 0;
        for (int p = 0; p < pieces; ++p) {
            const long end = p + 1 == pieces ? n : std::min<long>(n, at + 1 + static_cast<long>(gen.uniform() * (2.0 * n / pieces)));
            const double level = 2.0 * gen.uniform() - 1.0;
            for (long i = at; i < end; ++i) v[i] = level;
            at = end;
            if (at >= n) break;
        }
        return v;
    }
    if (kind == "piecewise_affine") {
        rng gen(seed);
        const int pieces = j.value("pieces", 3);
        vec v(n);
        long at = 0;
        double level = 0.0;
        for (int p = 0; p < pieces; ++p) {
            const long end = p + 1 == pieces ? n : std::min<long>(n, at + n / pieces);
            const double slope = (2.0 * gen.uniform() - 1.0) * 4.0 / n;
            const double jump = p == 0 ? 0.0 : (2.0 * gen.uniform() - 1.0);
            level += jump;
            for (long i = at; i < end; ++i) v[i] = level + slope * (i - at);
            if (end > at) level = v[end - 1];
            at = end;
            if (at >= n) break;
        }
        return v;
    }
    throw config_error(path + ": unknown signal kind '" + kind + "'");
}

struct run_config {
    std::string command;
    json raw;
    reg_graph graph;
    vec weights;           // resolved per-edge weights
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    solver_config solver;
    json graph_json;       // as given (canonical echo for graph-info)
};

inline solver_config parse_solver(const json& j, const std::string& path = "solver") {
    detail::reject_unknown_keys(
        j, {"max_iters", "gap_tol", "residual_tol", "step_safety", "over_relaxation", "seed", "log_stride"}, path);
    solver_config cfg;
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.gap_tol = j.value("gap_tol", cfg.gap_tol);
    cfg.residual_tol = j.value("residual_tol", cfg.residual_tol);
    cfg.step_safety = j.value("step_safety", cfg.step_safety);
    cfg.over_relaxation = j.value("over_relaxation", cfg.over_relaxation);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.log_stride = j.value("log_stride", cfg.log_stride);
    if (cfg.step_safety <= 0 || cfg.step_safety > 1.0) throw config_error(path + ": step_safety must be in (0, 1]");
    return cfg;
}

inline run_config parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("parse error: ") + e.what());
    }
    detail::reject_unknown_keys(
        j, {"command", "graph", "weights", "input", "problem", "solver", "schedule", "bilevel", "output_dir", "seed"},
        "config");
    run_config cfg;
    cfg.raw = j;
    cfg.command = j.at("command").get<std::string>();
    const std::set<std::string> commands = {"eval", "solve", "vanishing-noise", "bilevel", "verify", "graph-info"};
    if (!commands.count(cfg.command)) throw config_error("config.command: unknown command '" + cfg.command + "'");
    cfg.output_dir = j.value("output_dir", ".");
    cfg.seed = j.value("seed", 0ULL);
    if (j.contains("solver")) cfg.solver = parse_solver(j.at("solver"));
    if (cfg.command != "verify") {
        if (!j.contains("graph")) throw config_error("config.graph: required for command '" + cfg.command + "'");
        cfg.graph_json = j.at("graph");
        cfg.graph = parse_graph(j.at("graph"));
        cfg.weights = cfg.graph.weights();
        if (j.contains("weights")) {
            const vec w = detail::parse_vector(j.at("weights"), "config.weights");
            if (w.size() != cfg.weights.size())
                throw config_error("config.weights: expected " + std::to_string(cfg.weights.size()) + " entries");
            cfg.weights = w;
        }
    }
    return cfg;
}

/// Canonical configuration echo: the graph spec plus the resolved weights and
/// structural summary; re-parses to an isomorphic graph.
inline json graph_info(const run_config& cfg) {
    json out;
    out["graph"] = cfg.graph_json;
    out["weights"] = std::vector<double>(cfg.weights.data(), cfg.weights.data() + cfg.weights.size());
    json nodes = json::array();
    for (const auto& n : cfg.graph.nodes()) {
        nodes.push_back({{"id", n.id},
                         {"dim", n.node_space.dim()},
                         {"functional", static_cast<int>(n.node_functional.kind())}});
    }
    json edges = json::array();
    for (const auto& e : cfg.graph.edges()) {
        edges.push_back({{"tail", e.tail},
                         {"head", e.head},
                         {"edge_dim", e.forward_op.domain().dim()},
                         {"weight", e.weight},
                         {"learnable", e.kind == weight_kind::learnable},
                         {"name", e.weight_name}});
    }
    out["structure"] = {{"root", cfg.graph.root_id()}, {"nodes", nodes}, {"edges", edges}};
    return out;
}

}  // namespace reggraph::config
