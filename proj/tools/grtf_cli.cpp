#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "grtf/embedding.hpp"
#include "grtf/errors.hpp"
#include "grtf/eval.hpp"
#include "grtf/retrieval.hpp"
#include "grtf/tool_graph.hpp"

namespace {

struct ProviderOpts {
    std::string provider = "deterministic";  // deterministic | cache | remote
    std::size_t dim = 256;
    std::string cache_path;
};

void add_provider_flags(CLI::App* cmd, ProviderOpts& opts) {
    cmd->add_option("--provider", opts.provider, "Embedding provider: deterministic|cache|remote")
        ->check(CLI::IsMember({"deterministic", "cache", "remote"}));
    cmd->add_option("--dim", opts.dim, "Embedding dimension");
    cmd->add_option("--cache", opts.cache_path, "Embedding cache file");
}

std::string env_or(const char* name, const std::string& fallback = "") {
    const char* v = std::getenv(name);
    return v ? v : fallback;
}

std::unique_ptr<grtf::EmbeddingProvider> make_provider(const ProviderOpts& opts) {
    if (opts.provider == "deterministic")
        return std::make_unique<grtf::DeterministicEmbedder>(opts.dim);
    auto cache = opts.cache_path.empty()
                     ? nullptr
                     : std::make_shared<grtf::EmbeddingCache>(opts.cache_path);
    std::string model = env_or("GRTF_EMBED_MODEL", "default");
    if (opts.provider == "cache") {
        if (!cache) throw grtf::ConfigError("--provider cache requires --cache");
        return std::make_unique<grtf::CachedRemoteEmbedder>(cache, nullptr, model, opts.dim);
    }
    std::string endpoint = env_or("GRTF_EMBED_ENDPOINT");
    if (endpoint.empty())
        throw grtf::ConfigError("--provider remote requires GRTF_EMBED_ENDPOINT");
    auto transport =
        grtf::make_http_embedding_transport(endpoint, env_or("GRTF_EMBED_API_KEY"));
    return std::make_unique<grtf::CachedRemoteEmbedder>(cache, std::move(transport), model,
                                                        opts.dim);
}

struct BuiltIndexes {
    grtf::LexicalIndex lexical;
    grtf::VectorIndex vector;
};

BuiltIndexes build_indexes(const grtf::ToolKnowledgeGraph& graph,
                           grtf::EmbeddingProvider& provider) {
    BuiltIndexes idx;
    std::vector<std::pair<std::string, std::string>> docs;
    std::vector<std::pair<std::string, grtf::EmbeddingVector>> vectors;
    for (const std::string& id : graph.node_order()) {
        auto doc = grtf::render_tool_document(graph.at(id));
        vectors.emplace_back(doc.tool_id, provider.embed(doc.text));
        docs.emplace_back(doc.tool_id, std::move(doc.text));
    }
    idx.lexical.build(docs);
    idx.vector.build(std::move(vectors));
    return idx;
}

std::unique_ptr<grtf::Reranker> make_reranker_hook(const std::string& name) {
    if (name.empty() || name == "identity") return nullptr;  // engine handles identity
    if (name == "remote") {
        std::string endpoint = env_or("GRTF_RERANK_ENDPOINT");
        if (endpoint.empty())
            throw grtf::ConfigError("--reranker remote requires GRTF_RERANK_ENDPOINT");
        return grtf::make_remote_reranker(
            grtf::make_http_embedding_transport(endpoint, env_or("GRTF_RERANK_API_KEY")),
            env_or("GRTF_RERANK_MODEL", "default"));
    }
    throw grtf::ConfigError("unknown reranker '" + name + "'");
}

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        std::ofstream out(out_path);
        if (!out) throw grtf::ConfigError("cannot write '" + out_path + "'");
        out << content;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph RAG-Tool Fusion: tool retrieval over a dependency knowledge graph"};
    app.require_subcommand(1);

    std::string graph_path, instances_path, out_path, query;
    grtf::RetrievalConfig rcfg;
    std::string mode_str = "graph_fusion", reranker;
    ProviderOpts provider_opts;
    int jobs = 0;

    auto add_retrieval_flags = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode_str, "lexical|vector|hybrid|graph_fusion");
        cmd->add_option("--top-k", rcfg.top_k, "Initial first-pass size (default 3)");
        cmd->add_option("--rerank-top-k", rcfg.rerank_top_k, "Rerank window");
        cmd->add_option("--final-top-K", rcfg.final_top_K, "Final list cap (default 30)");
        cmd->add_option("--d-limit", rcfg.d_limit, "Dependency limit per seed (default 10)");
        cmd->add_option("--alpha", rcfg.alpha, "Hybrid weight on vector score (default 0.8)");
        cmd->add_option("--reranker", reranker, "identity|remote");
        add_provider_flags(cmd, provider_opts);
    };

    auto* validate = app.add_subcommand("validate", "Validate a KG document");
    validate->add_option("--graph", graph_path)->required();

    auto* stats = app.add_subcommand("stats", "Print corpus statistics");
    stats->add_option("--graph", graph_path)->required();

    auto* index = app.add_subcommand("index", "Embed all tool documents into a cache file");
    index->add_option("--graph", graph_path)->required();
    add_provider_flags(index, provider_opts);

    auto* retrieve = app.add_subcommand("retrieve", "Run one query");
    retrieve->add_option("--graph", graph_path)->required();
    retrieve->add_option("--query", query)->required();
    add_retrieval_flags(retrieve);

    auto* eval = app.add_subcommand("eval", "Run the benchmark over an instances file");
    eval->add_option("--graph", graph_path)->required();
    eval->add_option("--instances", instances_path)->required();
    eval->add_option("--out", out_path, "Write TSV report here (table goes to stdout)");
    eval->add_option("--jobs", jobs, "Parallel instance evaluation cap (0 = all cores)");
    add_retrieval_flags(eval);

    auto* errors_cmd = app.add_subcommand("errors", "Retrieval error taxonomy for one config");
    errors_cmd->add_option("--graph", graph_path)->required();
    errors_cmd->add_option("--instances", instances_path)->required();
    add_retrieval_flags(errors_cmd);

    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic benchmark");
    grtf::SyntheticParams sp;
    std::string out_graph, out_instances, out_fixture;
    synth->add_option("--seed", sp.seed);
    synth->add_option("--tools", sp.tool_count);
    synth->add_option("--avg-deps", sp.avg_deps);
    synth->add_option("--instances", sp.instance_count);
    synth->add_option("--query-noise", sp.query_noise);
    synth->add_option("--dim", provider_opts.dim);
    synth->add_option("--out-graph", out_graph)->required();
    synth->add_option("--out-instances", out_instances)->required();
    synth->add_option("--out-fixture", out_fixture)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        rcfg.mode = grtf::parse_retrieval_mode(mode_str);
        rcfg.reranker = reranker;

        if (validate->parsed()) {
            auto g = grtf::load_graph_file(graph_path);
            auto report = grtf::validate_graph(g);
            for (const auto& v : report.violations) std::cout << v << '\n';
            std::cout << report.violations.size() << " violations\n";
            return report.ok() ? 0 : 1;
        }

        if (stats->parsed()) {
            auto g = grtf::load_graph_file(graph_path);
            auto s = grtf::graph_stats(g);
            std::cout << "tools: " << s.total_tools << "\ncore: " << s.core_count
                      << "\nregular: " << s.regular_count << "\navg dependencies: ";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", s.avg_dependencies);
            std::cout << buf << '\n';
            return 0;
        }

        if (index->parsed()) {
            if (provider_opts.cache_path.empty())
                throw grtf::ConfigError("index requires --cache");
            auto g = grtf::load_graph_file(graph_path);
            auto provider = make_provider(provider_opts);
            grtf::EmbeddingCache cache(provider_opts.cache_path);
            std::string model = env_or("GRTF_EMBED_MODEL", "default");
            std::size_t n = 0;
            for (const std::string& id : g.node_order()) {
                auto doc = grtf::render_tool_document(g.at(id));
                auto key = grtf::embedding_cache_key("remote", model, doc.text);
                grtf::EmbeddingVector v;
                if (!cache.lookup(key, v)) cache.store(key, provider->embed(doc.text));
                ++n;
            }
            std::cout << "indexed " << n << " tools into " << provider_opts.cache_path << '\n';
            return 0;
        }

        if (retrieve->parsed()) {
            auto g = grtf::load_graph_file(graph_path);
            auto provider = make_provider(provider_opts);
            auto idx = build_indexes(g, *provider);
            grtf::RetrievalEngine engine({&idx.lexical, &idx.vector, provider.get()}, g);
            auto hook = make_reranker_hook(reranker);
            auto res = engine.retrieve(query, rcfg, hook.get());
            std::cout << "rank\ttool\tprovenance\tseed\n";
            std::size_t rank = 1;
            for (const auto& e : res.list.entries) {
                std::cout << rank++ << '\t' << e.tool_id << '\t'
                          << (e.provenance == grtf::Provenance::vector_seed ? "seed"
                                                                            : "dependency")
                          << '\t' << e.seed_id << '\n';
            }
            if (res.list.truncated) std::cout << "(truncated to " << rcfg.final_top_K << ")\n";
            if (res.rerank_degraded) std::cout << "(warning: reranker degraded to identity)\n";
            return 0;
        }

        if (eval->parsed() || errors_cmd->parsed()) {
            auto g = grtf::load_graph_file(graph_path);
            std::ifstream in(instances_path);
            if (!in) throw grtf::ParseError("cannot open instances '" + instances_path + "'");
            auto instances = grtf::load_instances(in, &g);
            auto provider = make_provider(provider_opts);
            auto idx = build_indexes(g, *provider);
            grtf::CorpusBundle corpus{&g, &idx.lexical, &idx.vector, provider.get()};

            if (eval->parsed()) {
                std::vector<std::pair<std::string, grtf::RetrievalConfig>> configs;
                for (auto m : {grtf::RetrievalMode::lexical, grtf::RetrievalMode::vector,
                               grtf::RetrievalMode::hybrid, grtf::RetrievalMode::graph_fusion}) {
                    grtf::RetrievalConfig c = rcfg;
                    c.mode = m;
                    c.reranker = m == grtf::RetrievalMode::graph_fusion ? rcfg.reranker : "";
                    configs.emplace_back(grtf::to_string(m), c);
                }
                auto report = grtf::run_benchmark(corpus, instances, configs, jobs);
                std::cout << report.to_table();
                if (!out_path.empty()) write_or_print(out_path, report.to_tsv());
                return report.failed_instances == 0 ? 0 : 1;
            }

            // errors: single config taxonomy
            grtf::RetrievalConfig c = rcfg;
            c.mode = grtf::RetrievalMode::graph_fusion;
            auto report = grtf::run_benchmark(corpus, instances, {{"graph_fusion", c}}, jobs);
            const auto& b = report.errors.at("graph_fusion");
            double total = static_cast<double>(b.total());
            auto line = [&](const char* name, std::size_t count) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%6.2f%%", total > 0 ? 100.0 * count / total : 0.0);
                std::cout << name << ": " << count << " (" << buf << ")\n";
            };
            line("retrieved correctly", b.retrieved_correctly);
            line("not retrieved from vector search", b.seed_not_in_top_k);
            line("in top-k, not top-1 (truncated)", b.in_top_k_not_top_1_truncated);
            line("top-1 but truncated", b.top_1_but_truncated);
            return 0;
        }

        if (synth->parsed()) {
            auto bench = grtf::generate_synthetic(sp);
            {
                std::ofstream out(out_graph);
                grtf::save_graph(bench.graph, out);
            }
            {
                std::ofstream out(out_instances);
                grtf::save_instances(bench.instances, out);
            }
            {
                std::remove(out_fixture.c_str());
                grtf::DeterministicEmbedder embedder(provider_opts.dim);
                grtf::EmbeddingCache fixture(out_fixture);
                for (const auto& [id, text] : bench.documents) {
                    auto key = grtf::embedding_cache_key("remote", "default", text);
                    fixture.store(key, embedder.embed(text));
                }
                for (const auto& inst : bench.instances) {
                    auto key = grtf::embedding_cache_key("remote", "default", inst.query);
                    fixture.store(key, embedder.embed(inst.query));
                }
            }
            std::cout << "wrote " << bench.graph.node_count() << " tools, "
                      << bench.instances.size() << " instances\n";
            return 0;
        }
    } catch (const grtf::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
