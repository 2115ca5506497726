#pragma once
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "grtf/tool_graph.hpp"

namespace grtf {

using EmbeddingVector = std::vector<double>;

struct ToolDocument {
    std::string tool_id;
    std::string text;
};

/// Canonical embedding text for a tool: name, description, then a
/// "Parameters: " line joining parameter names with ", ".
ToolDocument render_tool_document(const ToolNode& tool);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::string name() const = 0;
};

/// Signed token-hash bag projected to a fixed dimension, L2-normalized.
/// Pure function of the text; used for tests and offline runs.
class DeterministicEmbedder : public EmbeddingProvider {
public:
    explicit DeterministicEmbedder(std::size_t dimension = 256);
    EmbeddingVector embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "deterministic"; }

private:
    std::size_t dim_;
};

/// Hex SHA-256 of (provider name, model name, text); the embedding cache key.
std::string embedding_cache_key(const std::string& provider, const std::string& model,
                                const std::string& text);

/// Append-only embedding cache file. One record per line:
///   <key-hex> <dimension> <v0> <v1> ...
/// Single-writer, many-reader.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::string path);
    bool lookup(const std::string& key, EmbeddingVector& out) const;
    void store(const std::string& key, const EmbeddingVector& vec);
    std::size_t size() const { return entries_.size(); }

private:
    std::string path_;
    std::unordered_map<std::string, EmbeddingVector> entries_;
    mutable std::mutex write_mutex_;
};

/// HTTP transport seam; the production implementation posts JSON and the
/// tests substitute a mock.
class EmbeddingTransport {
public:
    struct Response {
        int status = 0;
        std::string body;
        int retry_after_seconds = -1;
    };
    virtual ~EmbeddingTransport() = default;
    virtual Response post(const std::string& body) = 0;
};

std::unique_ptr<EmbeddingTransport> make_http_embedding_transport(const std::string& endpoint,
                                                                  const std::string& api_key,
                                                                  int timeout_seconds = 30);

/// Remote embeddings-API client: {"model": ..., "input": text} -> {"vector": [...]}.
/// Successful results are written through to the cache; with no transport
/// (offline) a cache miss raises CacheMissError.
class CachedRemoteEmbedder : public EmbeddingProvider {
public:
    CachedRemoteEmbedder(std::shared_ptr<EmbeddingCache> cache,
                         std::unique_ptr<EmbeddingTransport> transport, std::string model,
                         std::size_t dimension);
    EmbeddingVector embed(const std::string& text) override;
    std::size_t dimension() const override { return dim_; }
    std::string name() const override { return "remote"; }

private:
    std::shared_ptr<EmbeddingCache> cache_;
    std::unique_ptr<EmbeddingTransport> transport_;  // null = offline, cache only
    std::string model_;
    std::size_t dim_;
};

}  // namespace grtf
