#pragma once
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "grtf/embedding.hpp"
#include "grtf/lexical_index.hpp"  // ScoredDoc

namespace grtf {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Exact exhaustive cosine top-k. Immutable after build; the scan is
/// OpenMP-parallel with a deterministic merge, and a serial reference scan is
/// kept for tests and benchmarking.
class VectorIndex {
public:
    struct Entry {
        std::string doc_id;
        EmbeddingVector vector;
        double norm;
    };

    /// Throws ValidationError naming the offending id on duplicate ids,
    /// dimension mismatch, or zero vectors.
    void build(std::vector<std::pair<std::string, EmbeddingVector>> vectors);

    std::vector<ScoredDoc> search(const EmbeddingVector& query, std::size_t k) const;
    std::vector<ScoredDoc> search_serial(const EmbeddingVector& query, std::size_t k) const;

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<ScoredDoc> top_k(std::vector<ScoredDoc> scored, std::size_t k) const;
    std::vector<Entry> entries_;
    std::size_t dim_ = 0;
};

}  // namespace grtf
