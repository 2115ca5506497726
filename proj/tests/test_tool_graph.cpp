#include <doctest.h>

#include <algorithm>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "grtf/errors.hpp"
#include "grtf/tool_graph.hpp"
#include "test_support.hpp"

using namespace grtf;
using test::make_edge;
using test::make_graph;
using test::make_tool;

namespace {

constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();

const char* kMinimalDoc = R"({
  "tools": [
    {"name": "A", "description": "core util", "type": "core", "parameters": [], "dependencies": []},
    {"name": "B", "description": "uses A", "type": "regular",
     "parameters": [{"name": "x", "description": "", "type": "string", "required": true}],
     "dependencies": [{"target": "A", "relation": "tool_directly_depends_on", "reason": "needs A"}]}
  ]
})";

// independent BFS oracle for reachability
std::set<std::string> bfs_reachable(const ToolKnowledgeGraph& g, const std::string& root) {
    std::set<std::string> seen{root};
    std::deque<std::string> queue{root};
    while (!queue.empty()) {
        auto id = queue.front();
        queue.pop_front();
        for (const auto& e : g.out_edges(id))
            if (seen.insert(e.target).second) queue.push_back(e.target);
    }
    seen.erase(root);
    return seen;
}

}  // namespace

TEST_CASE("load_graph parses the minimal two-tool document") {
    std::istringstream in(kMinimalDoc);
    auto g = load_graph(in);
    CHECK(g.node_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(g.at("A").kind == ToolKind::core);
    CHECK(g.at("B").kind == ToolKind::regular);
    REQUIRE(g.out_edges("B").size() == 1);
    CHECK(g.out_edges("B")[0].target == "A");
    CHECK(g.out_edges("B")[0].relation == Relation::tool_direct);
}

TEST_CASE("load_graph rejects dangling edge targets") {
    std::istringstream in(R"({"tools": [
        {"name": "A", "type": "regular",
         "dependencies": [{"target": "X", "relation": "tool_directly_depends_on"}]}]})");
    CHECK_THROWS_WITH_AS(load_graph(in), doctest::Contains("unknown target X"), ValidationError);
}

TEST_CASE("load_graph rejects duplicate tool ids and malformed documents") {
    std::istringstream dup(R"({"tools": [{"name": "A"}, {"name": "A"}]})");
    CHECK_THROWS_AS(load_graph(dup), ValidationError);
    std::istringstream bad("{not json");
    CHECK_THROWS_AS(load_graph(bad), ParseError);
    std::istringstream notools(R"({"other": 1})");
    CHECK_THROWS_AS(load_graph(notools), ParseError);
    std::istringstream badrel(R"({"tools": [
        {"name": "A", "dependencies": [{"target": "A", "relation": "bogus"}]}]})");
    CHECK_THROWS_AS(load_graph(badrel), ParseError);
}

TEST_CASE("load/save round-trip preserves nodes, edges, and edge order") {
    std::mt19937 rng(11);
    for (int iter = 0; iter < 20; ++iter) {
        ToolKnowledgeGraph g;
        int n = 2 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            auto t = make_tool("t" + std::to_string(i),
                               rng() % 2 ? ToolKind::core : ToolKind::regular,
                               "desc " + std::to_string(rng() % 100));
            ToolParameter p{"p" + std::to_string(i), "a param", "string", true};
            t.parameters.push_back(p);
            g.add_node(std::move(t));
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < static_cast<int>(rng() % 4); ++j) {
                auto e = make_edge("t" + std::to_string(i),
                                   "t" + std::to_string(rng() % n));
                if (rng() % 3 == 0) {
                    e.relation = Relation::param_direct;
                    e.parameter_name = "p" + std::to_string(i);
                }
                e.reason = "r" + std::to_string(rng() % 10);
                g.add_edge(std::move(e));
            }

        std::stringstream buf;
        save_graph(g, buf);
        auto g2 = load_graph(buf);
        REQUIRE(g2.node_count() == g.node_count());
        CHECK(g2.node_order() == g.node_order());
        for (const auto& id : g.node_order()) {
            const auto& a = g.out_edges(id);
            const auto& b = g2.out_edges(id);
            REQUIRE(a.size() == b.size());
            for (std::size_t k = 0; k < a.size(); ++k) {
                CHECK(a[k].target == b[k].target);
                CHECK(a[k].relation == b[k].relation);
                CHECK(a[k].reason == b[k].reason);
                CHECK(a[k].parameter_name == b[k].parameter_name);
            }
            CHECK(g.at(id).kind == g2.at(id).kind);
            CHECK(g.at(id).description == g2.at(id).description);
        }
    }
}

TEST_CASE("validate_graph: clean graph yields an empty report") {
    std::istringstream in(kMinimalDoc);
    auto g = load_graph(in);
    CHECK(validate_graph(g).ok());
}

TEST_CASE("validate_graph flags param edges without parameter_name") {
    auto g = make_graph("A->B");
    auto e = make_edge("A", "B", Relation::param_direct);  // missing parameter_name
    ToolKnowledgeGraph g2;
    g2.add_node(make_tool("A"));
    g2.add_node(make_tool("B"));
    g2.add_edge(std::move(e));
    auto report = validate_graph(g2);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("requires parameter_name") != std::string::npos);
}

TEST_CASE("validate_graph flags parameter_name not declared on the source tool") {
    ToolKnowledgeGraph g;
    auto a = make_tool("A");
    a.parameters.push_back({"real_param", "", "string", false});
    g.add_node(std::move(a));
    g.add_node(make_tool("B"));
    auto e = make_edge("A", "B", Relation::param_direct);
    e.parameter_name = "ghost";
    g.add_edge(std::move(e));
    auto report = validate_graph(g);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].find("ghost") != std::string::npos);
}

TEST_CASE("validate_graph agrees with a brute-force invariant re-check") {
    std::mt19937 rng(23);
    for (int iter = 0; iter < 50; ++iter) {
        ToolKnowledgeGraph g;
        int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            auto t = make_tool("t" + std::to_string(i));
            if (rng() % 2) t.parameters.push_back({"p", "", "string", false});
            g.add_node(std::move(t));
        }
        bool expect_clean = true;
        for (int i = 0; i < n; ++i) {
            if (rng() % 2 == 0) continue;
            auto e = make_edge("t" + std::to_string(static_cast<int>(rng() % static_cast<unsigned>(n))),
                               "t" + std::to_string(static_cast<int>(rng() % static_cast<unsigned>(n))));
            switch (rng() % 4) {
                case 0: break;  // fine
                case 1:
                    e.relation = Relation::param_direct;
                    e.parameter_name = "p";
                    if (!g.at(e.source).parameters.size()) expect_clean = false;
                    break;
                case 2:
                    e.relation = Relation::param_indirect;  // missing name
                    expect_clean = false;
                    break;
                case 3:
                    e.parameter_name = "p";  // name on a tool_* relation
                    expect_clean = false;
                    break;
            }
            g.add_edge(std::move(e));
        }
        CHECK(validate_graph(g).ok() == expect_clean);
    }
}

TEST_CASE("dependencies_dfs: pre-order with truncation and cycle handling") {
    auto g = make_graph("A->B,C; B->D");
    CHECK(dependencies_dfs(g, "A", 10) == std::vector<std::string>{"B", "D", "C"});
    CHECK(dependencies_dfs(g, "A", 2) == std::vector<std::string>{"B", "D"});
    CHECK(dependencies_dfs(g, "A", 0).empty());

    auto cyc = make_graph("A->B; B->A");
    CHECK(dependencies_dfs(cyc, "A", 10) == std::vector<std::string>{"B"});

    CHECK_THROWS_AS(dependencies_dfs(g, "nope", 3), LookupError);
}

TEST_CASE("dependencies_dfs properties: no root, no duplicates, at most d_limit") {
    std::mt19937 rng(37);
    for (int iter = 0; iter < 100; ++iter) {
        ToolKnowledgeGraph g;
        int n = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < n; ++i) g.add_node(make_tool("t" + std::to_string(i)));
        int edges = static_cast<int>(rng() % (3 * n));
        for (int i = 0; i < edges; ++i)
            g.add_edge(make_edge("t" + std::to_string(static_cast<int>(rng() % static_cast<unsigned>(n))),
                                 "t" + std::to_string(static_cast<int>(rng() % static_cast<unsigned>(n)))));
        std::string root = "t" + std::to_string(static_cast<int>(rng() % static_cast<unsigned>(n)));
        std::size_t d_limit = rng() % 8;
        auto out = dependencies_dfs(g, root, d_limit);
        CHECK(out.size() <= d_limit);
        CHECK(std::find(out.begin(), out.end(), root) == out.end());
        std::set<std::string> uniq(out.begin(), out.end());
        CHECK(uniq.size() == out.size());

        // unlimited traversal equals the BFS reachable set
        auto full = dependencies_dfs(g, root, kNoLimit);
        std::set<std::string> full_set(full.begin(), full.end());
        CHECK(full_set == bfs_reachable(g, root));
    }
}

TEST_CASE("graph_stats counts kinds and mean out-degree") {
    ToolKnowledgeGraph g;
    g.add_node(make_tool("A", ToolKind::core));
    g.add_node(make_tool("B"));
    g.add_edge(make_edge("B", "A"));
    auto s = graph_stats(g);
    CHECK(s.total_tools == 2);
    CHECK(s.core_count == 1);
    CHECK(s.regular_count == 1);
    CHECK(s.avg_dependencies == doctest::Approx(0.5));

    ToolKnowledgeGraph empty;
    auto es = graph_stats(empty);
    CHECK(es.total_tools == 0);
    CHECK(es.avg_dependencies == 0.0);
}
