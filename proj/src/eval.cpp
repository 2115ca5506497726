#include "grtf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "grtf/errors.hpp"

using nlohmann::json;

namespace grtf {

std::vector<EvalInstance> load_instances(std::istream& in, const ToolKnowledgeGraph* corpus) {
    std::vector<EvalInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("instances line " + std::to_string(lineno) + ": " + e.what());
        }
        EvalInstance inst;
        if (!rec.contains("id") || !rec.contains("query") || !rec.contains("golden_tools"))
            throw ParseError("instances line " + std::to_string(lineno) +
                             ": need id, query, golden_tools");
        inst.id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
        inst.query = rec["query"].get<std::string>();
        for (const auto& t : rec["golden_tools"]) inst.golden_tools.insert(t.get<std::string>());
        if (inst.golden_tools.empty())
            throw ValidationError("instance '" + inst.id + "': empty golden set");
        if (corpus)
            for (const auto& t : inst.golden_tools)
                if (!corpus->find(t))
                    throw ValidationError("instance '" + inst.id + "': unknown golden tool '" + t +
                                          "'");
        out.push_back(std::move(inst));
    }
    return out;
}

void save_instances(const std::vector<EvalInstance>& instances, std::ostream& out) {
    for (const EvalInstance& inst : instances) {
        std::vector<std::string> golden(inst.golden_tools.begin(), inst.golden_tools.end());
        std::sort(golden.begin(), golden.end());
        json rec;
        rec["id"] = inst.id;
        rec["query"] = inst.query;
        rec["golden_tools"] = golden;
        out << rec.dump() << '\n';
    }
}

double average_precision(const std::vector<std::string>& ranked,
                         const std::unordered_set<std::string>& golden, std::size_t n) {
    if (golden.empty()) return 0.0;
    std::size_t limit = std::min(n, ranked.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < limit; ++i) {
        if (golden.count(ranked[i])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    double denom = static_cast<double>(std::min(golden.size(), n));
    return sum / denom;
}

double recall_at(const std::vector<std::string>& ranked,
                 const std::unordered_set<std::string>& golden, std::size_t n) {
    if (golden.empty()) return 0.0;
    std::size_t limit = std::min(n, ranked.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < limit; ++i)
        if (golden.count(ranked[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(golden.size());
}

double ndcg_at(const std::vector<std::string>& ranked,
               const std::unordered_set<std::string>& golden, std::size_t n) {
    if (golden.empty()) return 0.0;
    std::size_t limit = std::min(n, ranked.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < limit; ++i)
        if (golden.count(ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    double idcg = 0.0;
    std::size_t ideal = std::min(golden.size(), n);
    for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

void ErrorBreakdown::add(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::retrieved_correctly: ++retrieved_correctly; break;
        case ErrorCategory::seed_not_in_top_k: ++seed_not_in_top_k; break;
        case ErrorCategory::in_top_k_not_top_1_truncated: ++in_top_k_not_top_1_truncated; break;
        case ErrorCategory::top_1_but_truncated: ++top_1_but_truncated; break;
    }
}

ErrorCategory classify_errors(const EvalInstance& instance, const RetrievalResult& result,
                              const RetrievalConfig&) {
    bool all_retrieved = std::all_of(instance.golden_tools.begin(), instance.golden_tools.end(),
                                     [&](const std::string& t) { return result.list.contains(t); });
    if (all_retrieved) return ErrorCategory::retrieved_correctly;

    // seed = best-ranked golden tool in the first-pass top-k
    std::size_t best_rank = 0;  // 1-based, 0 = absent
    for (std::size_t i = 0; i < result.first_pass.size(); ++i) {
        if (instance.golden_tools.count(result.first_pass[i].doc_id)) {
            best_rank = i + 1;
            break;
        }
    }
    if (best_rank == 0) return ErrorCategory::seed_not_in_top_k;
    if (best_rank == 1) return ErrorCategory::top_1_but_truncated;
    return ErrorCategory::in_top_k_not_top_1_truncated;
}

const MetricsReport::Row& MetricsReport::row(const std::string& label) const {
    for (const Row& r : rows)
        if (r.label == label) return r;
    throw LookupError("no report row for '" + label + "'");
}

std::string MetricsReport::to_tsv() const {
    std::ostringstream out;
    out << "retriever";
    for (const char* m : {"mAP", "nDCG", "recall"})
        for (std::size_t c : kMetricCutoffs) out << '\t' << m << '@' << c;
    out << '\n';
    out.precision(4);
    out << std::fixed;
    for (const Row& r : rows) {
        out << r.label;
        for (const auto* vals : {&r.map, &r.ndcg, &r.recall})
            for (double v : *vals) out << '\t' << v;
        out << '\n';
    }
    return out.str();
}

std::string MetricsReport::to_table() const {
    std::size_t width = 9;
    for (const Row& r : rows) width = std::max(width, r.label.size());
    std::ostringstream out;
    out << std::left;
    out.width(static_cast<std::streamsize>(width + 2));
    out << "Retriever";
    char buf[32];
    for (const char* m : {"mAP", "nDCG", "recall"})
        for (std::size_t c : kMetricCutoffs) {
            std::snprintf(buf, sizeof buf, "%9s@%zu", m, c);
            out << buf;
        }
    out << '\n';
    for (const Row& r : rows) {
        out << std::left;
        out.width(static_cast<std::streamsize>(width + 2));
        out << r.label;
        for (const auto* vals : {&r.map, &r.ndcg, &r.recall})
            for (double v : *vals) {
                std::snprintf(buf, sizeof buf, "%12.4f", v);
                out << buf;
            }
        out << '\n';
    }
    out << "instances: " << instance_count;
    if (failed_instances) out << "  (WARNING: " << failed_instances << " failed and excluded)";
    out << '\n';
    return out.str();
}

MetricsReport run_benchmark(const CorpusBundle& corpus, const std::vector<EvalInstance>& instances,
                            const std::vector<std::pair<std::string, RetrievalConfig>>& configs,
                            int jobs) {
    MetricsReport report;
    report.instance_count = instances.size();
    RetrievalIndexes idx{corpus.lexical, corpus.vector, corpus.embedder};
    RetrievalEngine engine(idx, *corpus.graph);

    for (const auto& [label, base_cfg] : configs) {
        RetrievalConfig cfg = base_cfg;
        cfg.final_top_K = *std::max_element(kMetricCutoffs.begin(), kMetricCutoffs.end());
        cfg.check();
        bool oracle = cfg.reranker == "oracle";
        bool identity = cfg.reranker == "identity";
        if (!cfg.reranker.empty() && !oracle && !identity)
            throw ConfigError("unknown reranker hook '" + cfg.reranker + "'");
        RetrievalConfig run_cfg = cfg;
        if (oracle) run_cfg.reranker.clear();  // hook passed explicitly below

        struct PerInstance {
            std::array<double, 3> map{}, ndcg{}, recall{};
            ErrorCategory category = ErrorCategory::retrieved_correctly;
            bool failed = false;
        };
        std::vector<PerInstance> results(instances.size());

        const long n = static_cast<long>(instances.size());
#ifdef _OPENMP
        int threads = jobs > 0 ? jobs : omp_get_max_threads();
#else
        int threads = 1;
        (void)jobs;
#endif
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (long i = 0; i < n; ++i) {
            const EvalInstance& inst = instances[static_cast<std::size_t>(i)];
            PerInstance& r = results[static_cast<std::size_t>(i)];
            try {
                std::unique_ptr<Reranker> hook;
                if (oracle) hook = make_oracle_reranker(inst.golden_tools);
                auto res = engine.retrieve(inst.query, run_cfg, hook.get());
                std::vector<std::string> ranked;
                ranked.reserve(res.list.entries.size());
                for (const auto& e : res.list.entries) ranked.push_back(e.tool_id);
                for (std::size_t c = 0; c < kMetricCutoffs.size(); ++c) {
                    r.map[c] = average_precision(ranked, inst.golden_tools, kMetricCutoffs[c]);
                    r.ndcg[c] = ndcg_at(ranked, inst.golden_tools, kMetricCutoffs[c]);
                    r.recall[c] = recall_at(ranked, inst.golden_tools, kMetricCutoffs[c]);
                }
                r.category = classify_errors(inst, res, run_cfg);
            } catch (const std::exception&) {
                r.failed = true;
            }
        }

        MetricsReport::Row row;
        row.label = label;
        ErrorBreakdown breakdown;
        std::size_t ok = 0, failed = 0;
        for (const PerInstance& r : results) {
            if (r.failed) {
                ++failed;
                continue;
            }
            ++ok;
            for (std::size_t c = 0; c < kMetricCutoffs.size(); ++c) {
                row.map[c] += r.map[c];
                row.ndcg[c] += r.ndcg[c];
                row.recall[c] += r.recall[c];
            }
            breakdown.add(r.category);
        }
        if (ok > 0)
            for (std::size_t c = 0; c < kMetricCutoffs.size(); ++c) {
                row.map[c] /= static_cast<double>(ok);
                row.ndcg[c] /= static_cast<double>(ok);
                row.recall[c] /= static_cast<double>(ok);
            }
        report.failed_instances += failed;
        report.errors[label] = breakdown;
        report.rows.push_back(row);
    }
    return report;
}

namespace {

std::string random_word(std::mt19937_64& rng, std::unordered_set<std::string>& used) {
    std::uniform_int_distribution<int> len(5, 8);
    std::uniform_int_distribution<int> ch(0, 25);
    for (;;) {
        std::string w;
        int l = len(rng);
        for (int i = 0; i < l; ++i) w.push_back(static_cast<char>('a' + ch(rng)));
        if (used.insert(w).second) return w;
    }
}

}  // namespace

SyntheticBenchmark generate_synthetic(const SyntheticParams& params) {
    if (params.tool_count < static_cast<std::size_t>(params.avg_deps) + 1)
        throw ConfigError("tool_count must exceed avg_deps");
    if (params.avg_deps < 0.0 || params.query_noise < 0.0 || params.query_noise > 1.0)
        throw ConfigError("infeasible synthetic parameters");
    std::mt19937_64 rng(params.seed);
    std::unordered_set<std::string> used_words;

    SyntheticBenchmark bench;
    std::size_t core_count = std::max<std::size_t>(1, params.tool_count / 10);
    struct Vocab {
        std::vector<std::string> words;
    };
    std::vector<Vocab> vocab(params.tool_count);
    std::vector<std::string> ids(params.tool_count);

    for (std::size_t i = 0; i < params.tool_count; ++i) {
        for (int j = 0; j < 6; ++j) vocab[i].words.push_back(random_word(rng, used_words));
        ToolNode node;
        node.kind = i < core_count ? ToolKind::core : ToolKind::regular;
        node.name = vocab[i].words[0] + "_" + vocab[i].words[1];
        node.id = node.name;
        node.description = "Performs " + vocab[i].words[2] + " " + vocab[i].words[3] +
                           " over " + vocab[i].words[4] + " " + vocab[i].words[5] + ".";
        ToolParameter p;
        p.name = vocab[i].words[4];
        p.description = "the " + vocab[i].words[4] + " to use";
        p.value_kind = "string";
        p.required = true;
        node.parameters.push_back(p);
        ids[i] = node.id;
        bench.graph.add_node(std::move(node));
    }

    // total edges sized so the whole-graph mean out-degree hits avg_deps;
    // core tools are leaves, regular tools carry the edges
    std::size_t total_edges =
        static_cast<std::size_t>(std::llround(params.avg_deps * params.tool_count));
    std::size_t regular_count = params.tool_count - core_count;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> core_pick(0, core_count - 1);
    std::uniform_int_distribution<std::size_t> regular_pick(core_count, params.tool_count - 1);

    std::size_t placed = 0;
    for (std::size_t i = core_count; i < params.tool_count && placed < total_edges; ++i) {
        std::size_t remaining_tools = params.tool_count - i;
        std::size_t quota = (total_edges - placed + remaining_tools - 1) / remaining_tools;
        quota = std::min(quota, total_edges - placed);
        std::unordered_set<std::size_t> targets;
        while (targets.size() < quota) {
            // mostly core dependencies, occasionally a chain through a regular tool
            std::size_t t = unit(rng) < 0.8 ? core_pick(rng) : regular_pick(rng);
            if (t == i) continue;
            if (!targets.insert(t).second) continue;
            DependencyEdge e;
            e.source = ids[i];
            e.target = ids[t];
            if (unit(rng) < 0.3) {
                e.relation = Relation::param_direct;
                e.parameter_name = bench.graph.at(ids[i]).parameters[0].name;
                e.reason = "supplies the " + *e.parameter_name + " parameter";
            } else {
                e.relation = unit(rng) < 0.7 ? Relation::tool_direct : Relation::tool_indirect;
                e.reason = "required before calling " + ids[i];
            }
            bench.graph.add_edge(std::move(e));
            ++placed;
        }
    }

    (void)regular_count;
    std::uniform_int_distribution<std::size_t> seed_pick(core_count, params.tool_count - 1);
    for (std::size_t q = 0; q < params.instance_count; ++q) {
        std::size_t s = seed_pick(rng);
        EvalInstance inst;
        inst.id = "inst_" + std::to_string(q);
        const auto& w = vocab[s].words;
        bool noisy = unit(rng) < params.query_noise;
        if (noisy) {
            std::size_t d = seed_pick(rng);
            if (d == s) d = core_count + (d - core_count + 1) % (params.tool_count - core_count);
            const auto& dw = vocab[d].words;
            // distractor vocabulary dominates so the seed lands below rank 1
            inst.query = "How do I " + dw[2] + " " + dw[3] + " " + dw[4] + " and also " + w[0] +
                         " " + w[2] + "?";
        } else {
            inst.query = "I need to " + w[0] + " " + w[2] + " " + w[3] + " for my " + w[4] + ".";
        }
        inst.golden_tools.insert(ids[s]);
        for (const std::string& dep :
             dependencies_dfs(bench.graph, ids[s], std::numeric_limits<std::size_t>::max()))
            inst.golden_tools.insert(dep);
        bench.instances.push_back(std::move(inst));
    }

    for (const std::string& id : bench.graph.node_order()) {
        auto doc = render_tool_document(bench.graph.at(id));
        bench.documents.emplace_back(doc.tool_id, doc.text);
    }
    return bench;
}

}  // namespace grtf
