#pragma once
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "grtf/embedding.hpp"
#include "grtf/lexical_index.hpp"
#include "grtf/tool_graph.hpp"
#include "grtf/vector_index.hpp"

namespace grtf {

enum class RetrievalMode { lexical, vector, hybrid, graph_fusion };

RetrievalMode parse_retrieval_mode(const std::string& s);
const char* to_string(RetrievalMode m);

struct RetrievalConfig {
    RetrievalMode mode = RetrievalMode::graph_fusion;
    std::size_t top_k = 3;                  // initial first-pass size (graph_fusion seeds)
    std::optional<std::size_t> rerank_top_k;
    std::size_t final_top_K = 30;
    std::size_t d_limit = 10;
    double alpha = 0.8;                     // hybrid weight on the vector side
    std::string query_transform = "identity";
    std::string reranker;                   // empty = no rerank

    void check() const;  // throws ConfigError
};

enum class Provenance { vector_seed, dependency };

struct RankedEntry {
    std::string tool_id;
    Provenance provenance = Provenance::vector_seed;
    std::string seed_id;  // originating seed (= tool_id for seeds)
};

struct RankedToolList {
    std::vector<RankedEntry> entries;
    bool truncated = false;
    bool contains(const std::string& id) const;
};

/// Full per-query result: final list plus the first-pass trace needed by the
/// error taxonomy, and a flag set when a remote reranker degraded to identity.
struct RetrievalResult {
    RankedToolList list;
    std::vector<ScoredDoc> first_pass;  // post-rerank order, pre-expansion
    bool rerank_degraded = false;
};

/// Min-max normalized convex fusion over the union of each side's top-(4k)
/// candidates; missing-side raw score is 0 before normalization.
std::vector<ScoredDoc> hybrid_search(const LexicalIndex& lex, const VectorIndex& vec,
                                     const std::string& query, const EmbeddingVector& qvec,
                                     std::size_t k, double alpha);

std::string build_reranker_prompt(const std::string& query,
                                  const std::vector<const ToolNode*>& candidates);

/// Parse a reranker response: a JSON array of tool names, or {"tools": [...]}.
/// Falls back to one-name-per-line plain text.
std::vector<std::string> parse_reranker_response(const std::string& body);

class Reranker {
public:
    virtual ~Reranker() = default;
    /// Permute candidates; never add or drop members. degraded is set when a
    /// remote failure forced identity order.
    virtual std::vector<ScoredDoc> rerank(const std::string& query,
                                          const std::vector<ScoredDoc>& candidates,
                                          const ToolKnowledgeGraph& graph, bool& degraded) = 0;
};

std::unique_ptr<Reranker> make_identity_reranker();
/// Test-only: moves candidates in the golden set to the front, preserving
/// relative order within each group.
std::unique_ptr<Reranker> make_oracle_reranker(std::unordered_set<std::string> golden);
/// Chat-completions-style remote reranker; transport failures degrade to
/// identity order with the degraded flag set.
std::unique_ptr<Reranker> make_remote_reranker(std::unique_ptr<EmbeddingTransport> transport,
                                               std::string model);

/// Apply the reranker to the first rerank_top_k candidates, repairing remote
/// responses that name unknown tools or omit candidates.
std::vector<ScoredDoc> rerank(const std::string& query, const std::vector<ScoredDoc>& candidates,
                              Reranker& hook, std::size_t rerank_top_k,
                              const ToolKnowledgeGraph& graph, bool& degraded);

struct RetrievalIndexes {
    const LexicalIndex* lexical = nullptr;
    const VectorIndex* vector = nullptr;
    EmbeddingProvider* embedder = nullptr;
};

class RetrievalEngine {
public:
    RetrievalEngine(RetrievalIndexes indexes, const ToolKnowledgeGraph& graph)
        : idx_(indexes), graph_(&graph) {}

    /// One query through the configured pipeline. graph_fusion runs the full
    /// seed + DFS-dependency assembly; lexical/vector/hybrid are the plain
    /// baselines truncated to final_top_K.
    RetrievalResult retrieve(const std::string& query, const RetrievalConfig& cfg,
                             Reranker* reranker = nullptr) const;

private:
    std::vector<ScoredDoc> first_pass(const std::string& query, RetrievalMode mode,
                                      std::size_t k, double alpha) const;
    RetrievalIndexes idx_;
    const ToolKnowledgeGraph* graph_;
};

struct AccuracyModel {
    std::size_t k = 3;
    std::size_t d = 10;
    std::size_t K = 30;
    std::size_t N = 1;          // total tools discovered incl. dependencies
    double vector_accuracy = 0.0;   // E[Retrieval_vector(k)]
    double dependency_gain = 0.0;   // E[KG_dep(k, d)]
};

/// min(1, K/N); the truncation factor of the accuracy model.
double fit_fraction(std::size_t K, std::size_t N);

struct ExpectedAccuracy {
    double value = 0.0;
    bool clamped = false;  // additive form exceeded [0, 1]
};

ExpectedAccuracy expected_accuracy(const AccuracyModel& m);

}  // namespace grtf
