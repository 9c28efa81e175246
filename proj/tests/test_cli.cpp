#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "reggraph/config.hpp"

using namespace reggraph;
using config::json;
namespace fs = std::filesystem;

namespace {

bool isomorphic(const reg_graph& a, const reg_graph& b) {
    if (a.nodes().size() != b.nodes().size() || a.edges().size() != b.edges().size()) return false;
    // compare sorted structural signatures of nodes and edges
    auto node_sig = [](const reg_graph& g) {
        std::vector<std::pair<long, int>> sig;
        for (const auto& n : g.nodes()) sig.push_back({n.node_space.dim(), static_cast<int>(n.node_functional.kind())});
        std::sort(sig.begin(), sig.end());
        return sig;
    };
    auto edge_sig = [](const reg_graph& g) {
        std::vector<std::tuple<long, long, long, double>> sig;
        for (const auto& e : g.edges())
            sig.push_back({e.forward_op.domain().dim(), e.forward_op.codomain().dim(),
                           e.backward_op.codomain().dim(), e.weight});
        std::sort(sig.begin(), sig.end());
        return sig;
    };
    return node_sig(a) == node_sig(b) && edge_sig(a) == edge_sig(b);
}

int run_cli(const std::string& config_path) {
#ifdef REGGRAPH_CLI_PATH
    const std::string cmd = std::string(REGGRAPH_CLI_PATH) + " " + config_path + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
#else
    (void)config_path;
    return -1;
#endif
}

}  // namespace

TEST_CASE("parse_config: valid run configurations") {
    const auto cfg = config::parse_config(R"({"command":"eval","graph":{"name":"tv","shape":[16]},
                                             "input":{"kind":"step","n":16}})");
    CHECK(cfg.command == "eval");
    CHECK(cfg.graph.nodes().size() == 2);
    CHECK(cfg.weights.size() == 1);
}

TEST_CASE("parse_config: errors carry key paths") {
    SECTION("syntax error") {
        CHECK_THROWS_AS(config::parse_config("{not json"), config::config_error);
    }
    SECTION("misspelled functional kind names the key") {
        const std::string text = R"({"command":"eval","graph":{"nodes":[
            {"id":"u","space":{"kind":"scalar","shape":[4]},"functional":{"kind":"indicator_zeroo"}}],
            "edges":[],"root":"u"},"input":{"kind":"step","n":4}})";
        try {
            config::parse_config(text);
            FAIL("expected a config error");
        } catch (const config::config_error& e) {
            CHECK(std::string(e.what()).find("functional") != std::string::npos);
            CHECK(std::string(e.what()).find("indicator_zeroo") != std::string::npos);
        }
    }
    SECTION("unknown top-level keys are rejected") {
        CHECK_THROWS_AS(config::parse_config(R"({"command":"eval","graph":{"name":"tv","shape":[8]},
                                                "input":{"kind":"step","n":8},"extra":1})"),
                        config::config_error);
    }
    SECTION("unknown command") {
        CHECK_THROWS_AS(config::parse_config(R"({"command":"evaluate","graph":{"name":"tv","shape":[8]}})"),
                        config::config_error);
    }
}

TEST_CASE("explicit tgv2 listing is isomorphic to the catalogue graph") {
    const std::string text = R"({"command":"graph-info","graph":{
        "nodes":[
          {"id":"u","space":{"kind":"scalar","shape":[8]},"functional":{"kind":"indicator_zero"}},
          {"id":"w1","space":{"kind":"scalar","shape":[7]},"functional":{"kind":"indicator_zero"}},
          {"id":"m1","space":{"kind":"scalar","shape":[7]},"functional":{"kind":"group_l1"}},
          {"id":"m2","space":{"kind":"scalar","shape":[6]},"functional":{"kind":"group_l1"}}],
        "edges":[
          {"tail":"u","head":"w1","forward":{"kind":"grad","shape":[8]},"backward":{"kind":"identity","shape":[8]}},
          {"tail":"w1","head":"m1","forward":{"kind":"identity","shape":[7]},"backward":{"kind":"identity","shape":[7]}},
          {"tail":"w1","head":"m2","forward":{"kind":"grad","shape":[7]},"backward":{"kind":"identity","shape":[7]},
           "weight":0.5,"learnable":true,"name":"alpha1"}],
        "root":"u"}})";
    const auto cfg = config::parse_config(text);
    const auto lib = library::tgv2({8}, 0.5);
    CHECK(isomorphic(cfg.graph, lib));

    // and both evaluate identically
    rng gen(51);
    const vec u = gen.gaussian_vector(8);
    const double va = evaluate_graph(cfg.graph, u).value;
    const double vb = evaluate_graph(lib, u).value;
    CHECK(va == Catch::Approx(vb).margin(1e-6));
}

TEST_CASE("graph-info round trip re-parses to an isomorphic graph") {
    const auto cfg = config::parse_config(R"({"command":"graph-info",
        "graph":{"name":"tgv_frame_infconv","shape":[16],"alpha0":0.4,"alpha1":0.7}})");
    const json info = config::graph_info(cfg);
    json again;
    again["command"] = "graph-info";
    again["graph"] = info.at("graph");
    again["weights"] = info.at("weights");
    const auto cfg2 = config::parse_config(again.dump());
    CHECK(isomorphic(cfg.graph, cfg2.graph));
    CHECK((cfg.weights - cfg2.weights).norm() == 0.0);
}

TEST_CASE("weight overrides must match the edge count") {
    CHECK_THROWS_AS(config::parse_config(R"({"command":"eval","graph":{"name":"tv","shape":[8]},
                                            "weights":[1.0,2.0]})"),
                    config::config_error);
}

TEST_CASE("synthetic signals are deterministic") {
    const json j = {{"kind", "piecewise_constant"}, {"n", 32}, {"seed", 9}};
    const vec a = config::make_signal(j);
    const vec b = config::make_signal(j);
    CHECK((a - b).norm() == 0.0);
    const vec step = config::make_signal({{"kind", "step"}, {"n", 6}});
    CHECK(step.isApprox(rgt::from_list({0, 0, 0, 1, 1, 1})));
}

#ifdef REGGRAPH_CLI_PATH
TEST_CASE("cli end-to-end: artifacts and exit codes") {
    const fs::path dir = fs::temp_directory_path() / "reggraph_cli_test";
    fs::create_directories(dir);

    SECTION("eval writes value and trace artifacts, reproducibly") {
        const fs::path cfg_path = dir / "eval.json";
        json j = {{"command", "eval"},
                  {"graph", {{"name", "tv"}, {"shape", {16}}}},
                  {"input", {{"kind", "step"}, {"n", 16}}},
                  {"output_dir", (dir / "out1").string()}};
        std::ofstream(cfg_path) << j.dump();
        CHECK(run_cli(cfg_path.string()) == 0);
        REQUIRE(fs::exists(dir / "out1" / "value.csv"));
        REQUIRE(fs::exists(dir / "out1" / "trace.csv"));
        std::ifstream val(dir / "out1" / "value.csv");
        std::string header, row;
        std::getline(val, header);
        std::getline(val, row);
        CHECK(row.substr(0, 2) == "1,");  // value 1.0000 on the step

        // bit-exact reproducibility of artifacts
        j["output_dir"] = (dir / "out2").string();
        std::ofstream(cfg_path) << j.dump();
        CHECK(run_cli(cfg_path.string()) == 0);
        std::ifstream a(dir / "out1" / "trace.csv"), b(dir / "out2" / "trace.csv");
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        CHECK(sa.str() == sb.str());
    }

    SECTION("non-convergent solve exits with code 2") {
        const fs::path cfg_path = dir / "hard.json";
        const json j = {{"command", "eval"},
                        {"graph", {{"name", "tgv"}, {"shape", {16}}, {"k", 2}, {"alpha", 0.8}}},
                        {"input", {{"kind", "random"}, {"n", 16}, {"seed", 3}}},
                        {"solver", {{"max_iters", 20}, {"log_stride", 10}}},
                        {"output_dir", (dir / "out3").string()}};
        std::ofstream(cfg_path) << j.dump();
        CHECK(run_cli(cfg_path.string()) == 2);
    }

    SECTION("config errors exit with code 3") {
        const fs::path cfg_path = dir / "bad.json";
        std::ofstream(cfg_path) << R"({"command":"eval","graph":{"name":"unknown_graph","shape":[8]}})";
        CHECK(run_cli(cfg_path.string()) == 3);
    }

    SECTION("bilevel end to end writes a trace and a family report") {
        const fs::path cfg_path = dir / "bilevel.json";
        const json j = {{"command", "bilevel"},
                        {"graph", {{"name", "tgv"}, {"shape", {16}}, {"k", 2}, {"alpha", 0.5}}},
                        {"input", {{"kind", "piecewise_affine"}, {"n", 16}, {"seed", 2}}},
                        {"problem", {{"forward", {{"kind", "identity"}}}, {"noise", {{"sigma", 0.02}, {"seed", 6}}}}},
                        {"bilevel",
                         {{"grid_resolution", 3},
                          {"beta_resolution", 3},
                          {"beta_min", 0.005},
                          {"beta_max", 0.1}}},
                        {"output_dir", (dir / "out_bl").string()}};
        std::ofstream(cfg_path) << j.dump();
        CHECK(run_cli(cfg_path.string()) == 0);
        REQUIRE(fs::exists(dir / "out_bl" / "bilevel_trace.csv"));
        REQUIRE(fs::exists(dir / "out_bl" / "report.txt"));
        std::ifstream rep(dir / "out_bl" / "report.txt");
        std::stringstream ss;
        ss << rep.rdbuf();
        CHECK(ss.str().find("effective regularizer: TGV2") != std::string::npos);
        std::ifstream tr(dir / "out_bl" / "bilevel_trace.csv");
        std::string header;
        std::getline(tr, header);
        CHECK(header == "candidate_id,alpha1,beta,loss,gap,iters");
    }

    fs::remove_all(dir);
}
#endif
