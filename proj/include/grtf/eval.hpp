#pragma once
#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "grtf/retrieval.hpp"
#include "grtf/tool_graph.hpp"

namespace grtf {

struct EvalInstance {
    std::string id;
    std::string query;
    std::unordered_set<std::string> golden_tools;  // seed tool plus required deps
};

/// One JSON record per line: {"id": ..., "query": ..., "golden_tools": [...]}.
/// Throws ParseError with the line number; unknown tool names and empty
/// golden sets are ValidationErrors when a graph is supplied.
std::vector<EvalInstance> load_instances(std::istream& in,
                                         const ToolKnowledgeGraph* corpus = nullptr);
void save_instances(const std::vector<EvalInstance>& instances, std::ostream& out);

double average_precision(const std::vector<std::string>& ranked,
                         const std::unordered_set<std::string>& golden, std::size_t n);
double recall_at(const std::vector<std::string>& ranked,
                 const std::unordered_set<std::string>& golden, std::size_t n);
double ndcg_at(const std::vector<std::string>& ranked,
               const std::unordered_set<std::string>& golden, std::size_t n);

enum class ErrorCategory {
    retrieved_correctly,
    seed_not_in_top_k,            // category 1: missing from the first-pass top-k
    in_top_k_not_top_1_truncated, // category 2
    top_1_but_truncated,          // category 3
};

struct ErrorBreakdown {
    std::size_t retrieved_correctly = 0;
    std::size_t seed_not_in_top_k = 0;
    std::size_t in_top_k_not_top_1_truncated = 0;
    std::size_t top_1_but_truncated = 0;
    std::size_t total() const {
        return retrieved_correctly + seed_not_in_top_k + in_top_k_not_top_1_truncated +
               top_1_but_truncated;
    }
    void add(ErrorCategory c);
};

/// Classify one instance from the retrieval trace. The seed is the
/// best-ranked golden tool in the first pass.
ErrorCategory classify_errors(const EvalInstance& instance, const RetrievalResult& result,
                              const RetrievalConfig& cfg);

inline constexpr std::array<std::size_t, 3> kMetricCutoffs{10, 20, 30};

struct MetricsReport {
    struct Row {
        std::string label;
        // [cutoff index] per kMetricCutoffs
        std::array<double, 3> map{}, ndcg{}, recall{};
    };
    std::vector<Row> rows;
    std::size_t instance_count = 0;
    std::size_t failed_instances = 0;  // excluded with a warning, never silent
    std::map<std::string, ErrorBreakdown> errors;  // per retriever label

    const Row& row(const std::string& label) const;
    std::string to_tsv() const;
    std::string to_table() const;
};

struct CorpusBundle {
    const ToolKnowledgeGraph* graph = nullptr;
    const LexicalIndex* lexical = nullptr;
    const VectorIndex* vector = nullptr;
    EmbeddingProvider* embedder = nullptr;
};

/// Runs every (label, config) over every instance with final_top_K = 30 and
/// aggregates unweighted means at cutoffs 10/20/30. Instances run in
/// parallel (OpenMP, capped by jobs); aggregation order is fixed, so output
/// is deterministic given a deterministic provider. A reranker named
/// "oracle" uses the instance's golden set.
MetricsReport run_benchmark(const CorpusBundle& corpus, const std::vector<EvalInstance>& instances,
                            const std::vector<std::pair<std::string, RetrievalConfig>>& configs,
                            int jobs = 0);

struct SyntheticBenchmark {
    ToolKnowledgeGraph graph;
    std::vector<EvalInstance> instances;
    std::vector<std::pair<std::string, std::string>> documents;  // (tool id, embedding text)
};

struct SyntheticParams {
    std::uint64_t seed = 1;
    std::size_t tool_count = 200;
    double avg_deps = 4.0;
    std::size_t instance_count = 300;
    /// Fraction of instances whose query mixes in a distractor tool's
    /// vocabulary, pushing the seed below rank 1 in the first pass.
    double query_noise = 0.0;
};

/// Deterministic generator: queries share vocabulary with their seed tool but
/// not with its dependencies; golden set = {seed} ∪ dfs(seed, ∞).
SyntheticBenchmark generate_synthetic(const SyntheticParams& params);

}  // namespace grtf
