#include "grtf/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "grtf/errors.hpp"

using nlohmann::json;

namespace grtf {

RetrievalMode parse_retrieval_mode(const std::string& s) {
    if (s == "lexical") return RetrievalMode::lexical;
    if (s == "vector") return RetrievalMode::vector;
    if (s == "hybrid") return RetrievalMode::hybrid;
    if (s == "graph_fusion") return RetrievalMode::graph_fusion;
    throw ConfigError("unknown retrieval mode '" + s + "'");
}

const char* to_string(RetrievalMode m) {
    switch (m) {
        case RetrievalMode::lexical: return "lexical";
        case RetrievalMode::vector: return "vector";
        case RetrievalMode::hybrid: return "hybrid";
        case RetrievalMode::graph_fusion: return "graph_fusion";
    }
    return "?";
}

void RetrievalConfig::check() const {
    if (final_top_K < 1) throw ConfigError("final_top_K must be >= 1");
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    if (rerank_top_k && *rerank_top_k > top_k)
        throw ConfigError("rerank_top_k must not exceed top_k");
    if (query_transform != "identity")
        throw ConfigError("unknown query transform '" + query_transform + "'");
}

bool RankedToolList::contains(const std::string& id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const RankedEntry& e) { return e.tool_id == id; });
}

namespace {

void sort_scored(std::vector<ScoredDoc>& v) {
    std::sort(v.begin(), v.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

}  // namespace

std::vector<ScoredDoc> hybrid_search(const LexicalIndex& lex, const VectorIndex& vec,
                                     const std::string& query, const EmbeddingVector& qvec,
                                     std::size_t k, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    if (k < 1) throw ConfigError("k must be >= 1");
    std::size_t pool = 4 * k;
    auto lex_hits = lex.search(query, pool);
    auto vec_hits = vec.search(qvec, pool);

    std::unordered_map<std::string, double> lex_raw, vec_raw;
    std::vector<std::string> candidates;
    auto note = [&](const std::string& id) {
        if (!lex_raw.count(id) && !vec_raw.count(id)) candidates.push_back(id);
    };
    for (const auto& h : lex_hits) {
        note(h.doc_id);
        lex_raw[h.doc_id] = h.score;
    }
    for (const auto& h : vec_hits) {
        note(h.doc_id);
        vec_raw[h.doc_id] = h.score;
    }
    if (candidates.empty()) return {};

    auto normalize = [&](const std::unordered_map<std::string, double>& raw) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (const std::string& id : candidates) {
            auto it = raw.find(id);
            double s = it == raw.end() ? 0.0 : it->second;
            if (first) {
                lo = hi = s;
                first = false;
            } else {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
        std::unordered_map<std::string, double> norm;
        for (const std::string& id : candidates) {
            auto it = raw.find(id);
            double s = it == raw.end() ? 0.0 : it->second;
            norm[id] = hi > lo ? (s - lo) / (hi - lo) : (hi > 0.0 ? 1.0 : 0.0);
        }
        return norm;
    };
    auto lex_norm = normalize(lex_raw);
    auto vec_norm = normalize(vec_raw);

    std::vector<ScoredDoc> fused;
    fused.reserve(candidates.size());
    for (const std::string& id : candidates)
        fused.push_back({id, alpha * vec_norm[id] + (1.0 - alpha) * lex_norm[id]});
    sort_scored(fused);
    if (fused.size() > k) fused.resize(k);
    return fused;
}

std::string build_reranker_prompt(const std::string& query,
                                  const std::vector<const ToolNode*>& candidates) {
    std::string prompt =
        "You are reranking candidate tools retrieved for a user request.\n\n"
        "User query: " + json(query).dump() + "\n\nCandidate tools:\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        prompt += std::to_string(i + 1) + ". name: " + json(candidates[i]->name).dump() + "\n";
        prompt += "   description: " + json(candidates[i]->description).dump() + "\n";
    }
    prompt +=
        "\nReturn a JSON array of the candidate tool names, reordered from most to "
        "least relevant to the user query. Use each name exactly once and use only "
        "names from the candidate list.\n";
    return prompt;
}

std::vector<std::string> parse_reranker_response(const std::string& body) {
    auto from_json = [](const json& j, auto&& self) -> std::vector<std::string> {
        if (j.is_array()) {
            std::vector<std::string> names;
            for (const auto& v : j)
                if (v.is_string()) names.push_back(v.get<std::string>());
            return names;
        }
        if (j.is_object()) {
            if (j.contains("tools")) return self(j["tools"], self);
            if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
                const auto& msg = j["choices"][0];
                if (msg.contains("message") && msg["message"].contains("content")) {
                    try {
                        return self(json::parse(msg["message"]["content"].get<std::string>()),
                                    self);
                    } catch (const json::parse_error&) {
                        return {};
                    }
                }
            }
        }
        return {};
    };
    try {
        return from_json(json::parse(body), from_json);
    } catch (const json::parse_error&) {
    }
    // plain text fallback, one name per line
    std::vector<std::string> names;
    std::string line;
    for (char c : body + "\n") {
        if (c == '\n') {
            auto b = line.find_first_not_of(" \t\r");
            auto e = line.find_last_not_of(" \t\r");
            if (b != std::string::npos) names.push_back(line.substr(b, e - b + 1));
            line.clear();
        } else {
            line.push_back(c);
        }
    }
    return names;
}

namespace {

class IdentityReranker : public Reranker {
public:
    std::vector<ScoredDoc> rerank(const std::string&, const std::vector<ScoredDoc>& candidates,
                                  const ToolKnowledgeGraph&, bool&) override {
        return candidates;
    }
};

class OracleReranker : public Reranker {
public:
    explicit OracleReranker(std::unordered_set<std::string> golden) : golden_(std::move(golden)) {}
    std::vector<ScoredDoc> rerank(const std::string&, const std::vector<ScoredDoc>& candidates,
                                  const ToolKnowledgeGraph&, bool&) override {
        std::vector<ScoredDoc> out(candidates);
        std::stable_partition(out.begin(), out.end(),
                              [&](const ScoredDoc& c) { return golden_.count(c.doc_id) != 0; });
        return out;
    }

private:
    std::unordered_set<std::string> golden_;
};

class RemoteReranker : public Reranker {
public:
    RemoteReranker(std::unique_ptr<EmbeddingTransport> transport, std::string model)
        : transport_(std::move(transport)), model_(std::move(model)) {}

    std::vector<ScoredDoc> rerank(const std::string& query,
                                  const std::vector<ScoredDoc>& candidates,
                                  const ToolKnowledgeGraph& graph, bool& degraded) override {
        std::vector<const ToolNode*> nodes;
        for (const auto& c : candidates) nodes.push_back(&graph.at(c.doc_id));
        json req;
        req["model"] = model_;
        req["messages"] = json::array({json{{"role", "user"},
                                            {"content", build_reranker_prompt(query, nodes)}}});
        std::vector<std::string> names;
        try {
            auto res = transport_->post(req.dump());
            if (res.status < 200 || res.status >= 300)
                throw TransportError("reranker status " + std::to_string(res.status), res.status,
                                     res.retry_after_seconds);
            names = parse_reranker_response(res.body);
        } catch (const TransportError&) {
            degraded = true;
            return candidates;
        }
        // keep only known candidate names, in response order, then append omissions
        std::unordered_map<std::string, const ScoredDoc*> by_id;
        for (const auto& c : candidates) by_id[c.doc_id] = &c;
        std::vector<ScoredDoc> out;
        std::unordered_set<std::string> used;
        for (const std::string& name : names) {
            auto it = by_id.find(name);
            if (it != by_id.end() && used.insert(name).second) out.push_back(*it->second);
        }
        for (const auto& c : candidates)
            if (!used.count(c.doc_id)) out.push_back(c);
        return out;
    }

private:
    std::unique_ptr<EmbeddingTransport> transport_;
    std::string model_;
};

}  // namespace

std::unique_ptr<Reranker> make_identity_reranker() {
    return std::make_unique<IdentityReranker>();
}

std::unique_ptr<Reranker> make_oracle_reranker(std::unordered_set<std::string> golden) {
    return std::make_unique<OracleReranker>(std::move(golden));
}

std::unique_ptr<Reranker> make_remote_reranker(std::unique_ptr<EmbeddingTransport> transport,
                                               std::string model) {
    return std::make_unique<RemoteReranker>(std::move(transport), std::move(model));
}

std::vector<ScoredDoc> rerank(const std::string& query, const std::vector<ScoredDoc>& candidates,
                              Reranker& hook, std::size_t rerank_top_k,
                              const ToolKnowledgeGraph& graph, bool& degraded) {
    std::size_t m = std::min(rerank_top_k, candidates.size());
    std::vector<ScoredDoc> head(candidates.begin(), candidates.begin() + m);
    std::vector<ScoredDoc> permuted = hook.rerank(query, head, graph, degraded);
    // guard against hooks that add or drop members
    std::unordered_map<std::string, const ScoredDoc*> by_id;
    for (const auto& c : head) by_id[c.doc_id] = &c;
    std::vector<ScoredDoc> out;
    std::unordered_set<std::string> used;
    for (const auto& c : permuted) {
        auto it = by_id.find(c.doc_id);
        if (it != by_id.end() && used.insert(c.doc_id).second) out.push_back(*it->second);
    }
    for (const auto& c : head)
        if (!used.count(c.doc_id)) out.push_back(c);
    out.insert(out.end(), candidates.begin() + m, candidates.end());
    return out;
}

std::vector<ScoredDoc> RetrievalEngine::first_pass(const std::string& query, RetrievalMode mode,
                                                   std::size_t k, double alpha) const {
    switch (mode) {
        case RetrievalMode::lexical:
            return idx_.lexical->search(query, k);
        case RetrievalMode::vector:
            return idx_.vector->search(idx_.embedder->embed(query), k);
        case RetrievalMode::hybrid:
        case RetrievalMode::graph_fusion:
            return hybrid_search(*idx_.lexical, *idx_.vector, query,
                                 idx_.embedder->embed(query), k, alpha);
    }
    return {};
}

RetrievalResult RetrievalEngine::retrieve(const std::string& query, const RetrievalConfig& cfg,
                                          Reranker* reranker) const {
    cfg.check();
    RetrievalResult result;
    if (idx_.vector && idx_.vector->size() == 0 && cfg.mode != RetrievalMode::lexical) return result;

    if (cfg.mode != RetrievalMode::graph_fusion) {
        // baseline: plain first-pass ranking truncated to final_top_K
        auto hits = first_pass(query, cfg.mode, cfg.final_top_K, cfg.alpha);
        result.first_pass = hits;
        for (const auto& h : hits)
            result.list.entries.push_back({h.doc_id, Provenance::vector_seed, h.doc_id});
        return result;
    }

    auto seeds = first_pass(query, cfg.mode, cfg.top_k, cfg.alpha);

    std::unique_ptr<Reranker> owned;
    Reranker* hook = reranker;
    if (!hook && !cfg.reranker.empty()) {
        if (cfg.reranker == "identity")
            owned = make_identity_reranker(), hook = owned.get();
        else
            throw ConfigError("unknown reranker hook '" + cfg.reranker + "'");
    }
    if (hook)
        seeds = rerank(query, seeds, *hook, cfg.rerank_top_k.value_or(cfg.top_k), *graph_,
                       result.rerank_degraded);
    result.first_pass = seeds;

    std::unordered_set<std::string> seen;
    std::vector<RankedEntry> assembled;
    for (const auto& seed : seeds) {
        if (seen.insert(seed.doc_id).second)
            assembled.push_back({seed.doc_id, Provenance::vector_seed, seed.doc_id});
        for (const std::string& dep : dependencies_dfs(*graph_, seed.doc_id, cfg.d_limit))
            if (seen.insert(dep).second)
                assembled.push_back({dep, Provenance::dependency, seed.doc_id});
    }
    if (assembled.size() > cfg.final_top_K) {
        assembled.resize(cfg.final_top_K);
        result.list.truncated = true;
    }
    result.list.entries = std::move(assembled);
    return result;
}

double fit_fraction(std::size_t K, std::size_t N) {
    if (N == 0) throw ConfigError("N must be >= 1");
    return std::min(1.0, static_cast<double>(K) / static_cast<double>(N));
}

ExpectedAccuracy expected_accuracy(const AccuracyModel& m) {
    if (m.N == 0) throw ConfigError("N must be >= 1");
    if (m.vector_accuracy < 0.0 || m.vector_accuracy > 1.0)
        throw ConfigError("vector_accuracy must be in [0, 1]");
    if (m.dependency_gain < 0.0 || m.dependency_gain > 1.0)
        throw ConfigError("dependency_gain must be in [0, 1]");
    double raw = m.vector_accuracy + m.dependency_gain * fit_fraction(m.K, m.N);
    ExpectedAccuracy out;
    out.value = std::clamp(raw, 0.0, 1.0);
    out.clamped = raw != out.value;
    return out;
}

}  // namespace grtf
