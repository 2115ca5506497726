#pragma once
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace grtf {

enum class ToolKind { core, regular };

enum class Relation { tool_direct, tool_indirect, param_direct, param_indirect };

const char* to_string(ToolKind k);
const char* to_string(Relation r);

struct ToolParameter {
    std::string name;
    std::string description;
    std::string value_kind;  // free-text type label ("string", "number", ...)
    bool required = false;
};

struct ToolNode {
    std::string id;  // equals name for documents keyed by name
    std::string name;
    std::string description;
    ToolKind kind = ToolKind::regular;
    std::vector<ToolParameter> parameters;
};

struct DependencyEdge {
    std::string source;
    std::string target;
    Relation relation = Relation::tool_direct;
    std::string reason;
    std::optional<std::string> parameter_name;  // present iff param_* relation
};

/// Immutable after load; reads are safe concurrently. Edge declaration order
/// is preserved per node and drives DFS child order.
class ToolKnowledgeGraph {
public:
    void add_node(ToolNode node);                 // throws ValidationError on duplicate id
    void add_edge(DependencyEdge edge);           // endpoints checked at validate/load time
    const ToolNode* find(const std::string& id) const;
    const ToolNode& at(const std::string& id) const;  // throws LookupError
    const std::vector<DependencyEdge>& out_edges(const std::string& id) const;
    const std::vector<std::string>& node_order() const { return order_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const;

private:
    std::unordered_map<std::string, ToolNode> nodes_;
    std::unordered_map<std::string, std::vector<DependencyEdge>> edges_;
    std::vector<std::string> order_;  // insertion order, for deterministic output
    static const std::vector<DependencyEdge> no_edges_;
};

struct GraphStats {
    std::size_t total_tools = 0;
    std::size_t core_count = 0;
    std::size_t regular_count = 0;
    double avg_dependencies = 0.0;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Parse the canonical KG JSON document (top-level "tools" array). Also
/// accepts the public ToolLinkOS field spellings for the same schema.
/// Throws ParseError / ValidationError.
ToolKnowledgeGraph load_graph(std::istream& in);
ToolKnowledgeGraph load_graph_file(const std::string& path);

void save_graph(const ToolKnowledgeGraph& g, std::ostream& out);

ValidationReport validate_graph(const ToolKnowledgeGraph& g);

/// Pre-order DFS from root via out-edges, root excluded, cycles broken by a
/// visited set, truncated after d_limit entries. Child order = edge
/// declaration order; no relation-type priority.
std::vector<std::string> dependencies_dfs(const ToolKnowledgeGraph& g,
                                          const std::string& root,
                                          std::size_t d_limit);

GraphStats graph_stats(const ToolKnowledgeGraph& g);

}  // namespace grtf
