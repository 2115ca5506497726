#include "grtf/tool_graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "grtf/errors.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

namespace grtf {

const std::vector<DependencyEdge> ToolKnowledgeGraph::no_edges_{};

const char* to_string(ToolKind k) {
    return k == ToolKind::core ? "core" : "regular";
}

const char* to_string(Relation r) {
    switch (r) {
        case Relation::tool_direct: return "tool_directly_depends_on";
        case Relation::tool_indirect: return "tool_indirectly_depends_on";
        case Relation::param_direct: return "parameter_directly_depends_on";
        case Relation::param_indirect: return "parameter_indirectly_depends_on";
    }
    return "?";
}

void ToolKnowledgeGraph::add_node(ToolNode node) {
    if (node.id.empty()) throw ValidationError("tool id must be non-empty");
    auto [it, inserted] = nodes_.emplace(node.id, std::move(node));
    if (!inserted) throw ValidationError("duplicate tool id '" + it->first + "'");
    order_.push_back(it->first);
}

void ToolKnowledgeGraph::add_edge(DependencyEdge edge) {
    edges_[edge.source].push_back(std::move(edge));
}

const ToolNode* ToolKnowledgeGraph::find(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

const ToolNode& ToolKnowledgeGraph::at(const std::string& id) const {
    const ToolNode* n = find(id);
    if (!n) throw LookupError("unknown tool id '" + id + "'");
    return *n;
}

const std::vector<DependencyEdge>& ToolKnowledgeGraph::out_edges(const std::string& id) const {
    auto it = edges_.find(id);
    return it == edges_.end() ? no_edges_ : it->second;
}

std::size_t ToolKnowledgeGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& [id, es] : edges_) n += es.size();
    return n;
}

namespace {

Relation parse_relation(const std::string& s, const std::string& tool) {
    if (s == "tool_directly_depends_on" || s == "tool_direct") return Relation::tool_direct;
    if (s == "tool_indirectly_depends_on" || s == "tool_indirect") return Relation::tool_indirect;
    if (s == "parameter_directly_depends_on" || s == "param_direct") return Relation::param_direct;
    if (s == "parameter_indirectly_depends_on" || s == "param_indirect")
        return Relation::param_indirect;
    throw ParseError("tool '" + tool + "': unknown relation '" + s + "'");
}

// Field access tolerant of the public ToolLinkOS spellings.
const json* pick(const json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        auto it = obj.find(k);
        if (it != obj.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

std::string require_string(const json& obj, std::initializer_list<const char*> keys,
                           const std::string& ctx) {
    const json* v = pick(obj, keys);
    if (!v || !v->is_string())
        throw ParseError(ctx + ": missing required string field '" +
                         std::string(*keys.begin()) + "'");
    return v->get<std::string>();
}

}  // namespace

ToolKnowledgeGraph load_graph(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("KG document: ") + e.what());
    }

    const json* tools = nullptr;
    if (doc.is_object())
        tools = pick(doc, {"tools"});
    else if (doc.is_array())
        tools = &doc;  // bare array of tool objects
    if (!tools || !tools->is_array())
        throw ParseError("KG document: expected top-level 'tools' array");

    ToolKnowledgeGraph g;
    struct PendingEdge {
        DependencyEdge edge;
        std::size_t index;  // position in the source tool entry, for messages
    };
    std::vector<PendingEdge> pending;

    std::size_t i = 0;
    for (const json& t : *tools) {
        std::string ctx = "tools[" + std::to_string(i) + "]";
        if (!t.is_object()) throw ParseError(ctx + ": expected object");
        ToolNode node;
        node.name = require_string(t, {"name", "tool_name"}, ctx);
        node.id = node.name;
        if (const json* d = pick(t, {"description", "tool_description"}))
            node.description = d->get<std::string>();
        std::string kind = "regular";
        if (const json* k = pick(t, {"type", "tool_type", "kind"})) kind = k->get<std::string>();
        if (kind == "core")
            node.kind = ToolKind::core;
        else if (kind == "regular")
            node.kind = ToolKind::regular;
        else
            throw ParseError(ctx + ": type must be 'core' or 'regular', got '" + kind + "'");

        if (const json* params = pick(t, {"parameters"})) {
            if (!params->is_array()) throw ParseError(ctx + ".parameters: expected array");
            for (const json& p : *params) {
                ToolParameter tp;
                tp.name = require_string(p, {"name", "parameter_name"}, ctx + ".parameters[]");
                if (const json* d = pick(p, {"description"})) tp.description = d->get<std::string>();
                if (const json* vk = pick(p, {"type", "value_kind"}))
                    tp.value_kind = vk->get<std::string>();
                if (const json* r = pick(p, {"required"})) tp.required = r->get<bool>();
                node.parameters.push_back(std::move(tp));
            }
        }

        if (const json* deps = pick(t, {"dependencies"})) {
            if (!deps->is_array()) throw ParseError(ctx + ".dependencies: expected array");
            std::size_t j = 0;
            for (const json& d : *deps) {
                DependencyEdge e;
                e.source = node.id;
                e.target = require_string(d, {"target", "target_tool", "dependency_name"},
                                          ctx + ".dependencies[" + std::to_string(j) + "]");
                e.relation = parse_relation(
                    require_string(d, {"relation", "relationship", "dependency_type"},
                                   ctx + ".dependencies[" + std::to_string(j) + "]"),
                    node.id);
                if (const json* r = pick(d, {"reason"})) e.reason = r->get<std::string>();
                if (const json* pn = pick(d, {"parameter_name"}))
                    e.parameter_name = pn->get<std::string>();
                pending.push_back({std::move(e), j});
                ++j;
            }
        }

        g.add_node(std::move(node));
        ++i;
    }

    for (auto& pe : pending) {
        if (!g.find(pe.edge.target))
            throw ValidationError("edge from '" + pe.edge.source + "': unknown target " +
                                  pe.edge.target);
        g.add_edge(std::move(pe.edge));
    }
    return g;
}

ToolKnowledgeGraph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open KG document '" + path + "'");
    return load_graph(in);
}

void save_graph(const ToolKnowledgeGraph& g, std::ostream& out) {
    ordered_json tools = ordered_json::array();
    for (const std::string& id : g.node_order()) {
        const ToolNode& n = g.at(id);
        ordered_json t;
        t["name"] = n.name;
        t["description"] = n.description;
        t["type"] = to_string(n.kind);
        ordered_json params = ordered_json::array();
        for (const ToolParameter& p : n.parameters) {
            ordered_json pj;
            pj["name"] = p.name;
            pj["description"] = p.description;
            pj["type"] = p.value_kind;
            pj["required"] = p.required;
            params.push_back(std::move(pj));
        }
        t["parameters"] = std::move(params);
        ordered_json deps = ordered_json::array();
        for (const DependencyEdge& e : g.out_edges(id)) {
            ordered_json dj;
            dj["target"] = e.target;
            dj["relation"] = to_string(e.relation);
            dj["reason"] = e.reason;
            if (e.parameter_name) dj["parameter_name"] = *e.parameter_name;
            deps.push_back(std::move(dj));
        }
        t["dependencies"] = std::move(deps);
        tools.push_back(std::move(t));
    }
    ordered_json doc;
    doc["tools"] = std::move(tools);
    out << doc.dump(2) << '\n';
}

ValidationReport validate_graph(const ToolKnowledgeGraph& g) {
    ValidationReport report;
    auto add = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

    for (const std::string& id : g.node_order()) {
        const ToolNode& n = g.at(id);
        if (n.id.empty()) add("tool with empty id");
        std::unordered_set<std::string> seen_params;
        for (const ToolParameter& p : n.parameters) {
            if (p.name.empty()) add("tool '" + id + "': parameter with empty name");
            if (!seen_params.insert(p.name).second)
                add("tool '" + id + "': duplicate parameter '" + p.name + "'");
        }
        for (const DependencyEdge& e : g.out_edges(id)) {
            if (!g.find(e.target))
                add("edge " + e.source + " -> " + e.target + ": unknown target");
            bool param_rel =
                e.relation == Relation::param_direct || e.relation == Relation::param_indirect;
            if (param_rel && !e.parameter_name)
                add("edge " + e.source + " -> " + e.target + ": " + to_string(e.relation) +
                    " requires parameter_name");
            if (!param_rel && e.parameter_name)
                add("edge " + e.source + " -> " + e.target + ": parameter_name given for " +
                    std::string(to_string(e.relation)));
            if (e.parameter_name) {
                bool found = std::any_of(n.parameters.begin(), n.parameters.end(),
                                         [&](const ToolParameter& p) {
                                             return p.name == *e.parameter_name;
                                         });
                if (!found)
                    add("edge " + e.source + " -> " + e.target + ": parameter_name '" +
                        *e.parameter_name + "' is not a parameter of '" + e.source + "'");
            }
        }
    }
    return report;
}

std::vector<std::string> dependencies_dfs(const ToolKnowledgeGraph& g, const std::string& root,
                                          std::size_t d_limit) {
    g.at(root);  // throws LookupError for unknown root
    std::vector<std::string> out;
    if (d_limit == 0) return out;
    std::unordered_set<std::string> visited{root};
    // explicit stack, children pushed in reverse so declaration order pops first
    std::vector<std::string> stack;
    auto push_children = [&](const std::string& id) {
        const auto& edges = g.out_edges(id);
        for (auto it = edges.rbegin(); it != edges.rend(); ++it) stack.push_back(it->target);
    };
    push_children(root);
    while (!stack.empty() && out.size() < d_limit) {
        std::string id = std::move(stack.back());
        stack.pop_back();
        if (!visited.insert(id).second) continue;
        out.push_back(id);
        push_children(out.back());
    }
    return out;
}

GraphStats graph_stats(const ToolKnowledgeGraph& g) {
    GraphStats s;
    s.total_tools = g.node_count();
    for (const std::string& id : g.node_order()) {
        if (g.at(id).kind == ToolKind::core)
            ++s.core_count;
        else
            ++s.regular_count;
    }
    s.avg_dependencies =
        s.total_tools == 0 ? 0.0 : static_cast<double>(g.edge_count()) / s.total_tools;
    return s;
}

}  // namespace grtf
