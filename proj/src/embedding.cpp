#include "grtf/embedding.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <httplib.h>
#include <json.hpp>

#include "grtf/errors.hpp"
#include "grtf/lexical_index.hpp"

using nlohmann::json;

namespace grtf {

ToolDocument render_tool_document(const ToolNode& tool) {
    std::string text = tool.name;
    text += '\n';
    text += tool.description;
    text += "\nParameters: ";
    for (std::size_t i = 0; i < tool.parameters.size(); ++i) {
        if (i) text += ", ";
        text += tool.parameters[i].name;
    }
    return {tool.id, std::move(text)};
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

DeterministicEmbedder::DeterministicEmbedder(std::size_t dimension) : dim_(dimension) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

EmbeddingVector DeterministicEmbedder::embed(const std::string& text) {
    if (text.empty()) throw ValidationError("cannot embed empty text");
    EmbeddingVector v(dim_, 0.0);
    auto tokens = tokenize(text);
    if (tokens.empty()) tokens.push_back(text);  // punctuation-only input
    for (const std::string& tok : tokens) {
        std::uint64_t h = fnv1a64(tok);
        std::size_t bucket = (h >> 1) % dim_;
        double sign = (h & 1u) ? 1.0 : -1.0;
        v[bucket] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        // signed counts cancelled exactly; fall back to a unit basis vector
        v[fnv1a64(text) % dim_] = 1.0;
        norm = 1.0;
    }
    for (double& x : v) x /= norm;
    return v;
}

std::string embedding_cache_key(const std::string& provider, const std::string& model,
                                const std::string& text) {
    std::string input = provider + '\x1f' + model + '\x1f' + text;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

EmbeddingCache::EmbeddingCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        std::size_t dim;
        if (!(ls >> key >> dim))
            throw ParseError("embedding cache " + path_ + ":" + std::to_string(lineno) +
                             ": malformed record");
        EmbeddingVector vec(dim);
        for (std::size_t i = 0; i < dim; ++i)
            if (!(ls >> vec[i]))
                throw ParseError("embedding cache " + path_ + ":" + std::to_string(lineno) +
                                 ": truncated vector");
        entries_[key] = std::move(vec);
    }
}

bool EmbeddingCache::lookup(const std::string& key, EmbeddingVector& out) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    out = it->second;
    return true;
}

void EmbeddingCache::store(const std::string& key, const EmbeddingVector& vec) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    if (entries_.count(key)) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ParseError("cannot append to embedding cache '" + path_ + "'");
    out << key << ' ' << vec.size();
    out.precision(17);
    for (double x : vec) out << ' ' << x;
    out << '\n';
    entries_[key] = vec;
}

namespace {

class HttpEmbeddingTransport : public EmbeddingTransport {
public:
    HttpEmbeddingTransport(std::string endpoint, std::string api_key, int timeout_seconds)
        : api_key_(std::move(api_key)), timeout_(timeout_seconds) {
        auto scheme_end = endpoint.find("://");
        std::string rest = scheme_end == std::string::npos ? endpoint
                                                          : endpoint.substr(scheme_end + 3);
        auto slash = rest.find('/');
        host_ = "http://" + (slash == std::string::npos ? rest : rest.substr(0, slash));
        path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    }

    Response post(const std::string& body) override {
        httplib::Client client(host_);
        client.set_read_timeout(timeout_, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) throw TransportError("embedding endpoint unreachable: " + host_);
        Response out;
        out.status = res->status;
        out.body = res->body;
        if (res->has_header("Retry-After"))
            out.retry_after_seconds = std::stoi(res->get_header_value("Retry-After"));
        return out;
    }

private:
    std::string host_, path_, api_key_;
    int timeout_;
};

}  // namespace

std::unique_ptr<EmbeddingTransport> make_http_embedding_transport(const std::string& endpoint,
                                                                  const std::string& api_key,
                                                                  int timeout_seconds) {
    return std::make_unique<HttpEmbeddingTransport>(endpoint, api_key, timeout_seconds);
}

CachedRemoteEmbedder::CachedRemoteEmbedder(std::shared_ptr<EmbeddingCache> cache,
                                           std::unique_ptr<EmbeddingTransport> transport,
                                           std::string model, std::size_t dimension)
    : cache_(std::move(cache)), transport_(std::move(transport)), model_(std::move(model)),
      dim_(dimension) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

EmbeddingVector CachedRemoteEmbedder::embed(const std::string& text) {
    if (text.empty()) throw ValidationError("cannot embed empty text");
    std::string key = embedding_cache_key(name(), model_, text);
    EmbeddingVector cached;
    if (cache_ && cache_->lookup(key, cached)) return cached;
    if (!transport_)
        throw CacheMissError("offline mode: no cached embedding for text of length " +
                             std::to_string(text.size()));

    json req;
    req["model"] = model_;
    req["input"] = text;
    auto res = transport_->post(req.dump());
    if (res.status < 200 || res.status >= 300)
        throw TransportError("embedding request failed with status " + std::to_string(res.status),
                             res.status, res.retry_after_seconds);

    json body;
    try {
        body = json::parse(res.body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("embedding response is not JSON: ") + e.what(),
                             res.status);
    }
    const json* vec = nullptr;
    if (body.contains("vector"))
        vec = &body["vector"];
    else if (body.contains("data") && body["data"].is_array() && !body["data"].empty())
        vec = &body["data"][0]["embedding"];  // OpenAI-style response
    if (!vec || !vec->is_array())
        throw TransportError("embedding response has no vector field", res.status);

    EmbeddingVector out = vec->get<EmbeddingVector>();
    if (out.size() != dim_)
        throw TransportError("embedding dimension mismatch: expected " + std::to_string(dim_) +
                                 ", got " + std::to_string(out.size()),
                             res.status);
    for (double x : out)
        if (!std::isfinite(x)) throw TransportError("embedding contains non-finite value");
    if (cache_) cache_->store(key, out);
    return out;
}

}  // namespace grtf
