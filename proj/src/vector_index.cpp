#include "grtf/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "grtf/errors.hpp"

namespace grtf {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ValidationError("cosine undefined for zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void VectorIndex::build(std::vector<std::pair<std::string, EmbeddingVector>> vectors) {
    entries_.clear();
    dim_ = 0;
    std::unordered_set<std::string> seen;
    for (auto& [id, vec] : vectors) {
        if (!seen.insert(id).second) throw ValidationError("duplicate doc id '" + id + "'");
        if (dim_ == 0) dim_ = vec.size();
        if (vec.size() != dim_)
            throw ValidationError("doc '" + id + "': dimension " + std::to_string(vec.size()) +
                                  " does not match index dimension " + std::to_string(dim_));
        double norm2 = 0.0;
        for (double x : vec) {
            if (!std::isfinite(x))
                throw ValidationError("doc '" + id + "': non-finite vector component");
            norm2 += x * x;
        }
        if (norm2 == 0.0) throw ValidationError("doc '" + id + "': zero vector");
        entries_.push_back({std::move(id), std::move(vec), std::sqrt(norm2)});
    }
    if (dim_ == 0 && !vectors.empty()) throw ValidationError("zero-dimensional vectors");
}

std::vector<ScoredDoc> VectorIndex::top_k(std::vector<ScoredDoc> scored, std::size_t k) const {
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::vector<ScoredDoc> VectorIndex::search(const EmbeddingVector& query, std::size_t k) const {
    if (entries_.empty()) return {};
    if (query.size() != dim_)
        throw ValidationError("query dimension " + std::to_string(query.size()) +
                              " does not match index dimension " + std::to_string(dim_));
    double qnorm2 = 0.0;
    for (double x : query) qnorm2 += x * x;
    if (qnorm2 == 0.0) throw ValidationError("query is a zero vector");
    double qnorm = std::sqrt(qnorm2);

    std::vector<ScoredDoc> scored(entries_.size());
    const long n = static_cast<long>(entries_.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        const Entry& e = entries_[static_cast<std::size_t>(i)];
        double dot = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) dot += e.vector[j] * query[j];
        scored[static_cast<std::size_t>(i)] = {e.doc_id, dot / (e.norm * qnorm)};
    }
    return top_k(std::move(scored), k);
}

std::vector<ScoredDoc> VectorIndex::search_serial(const EmbeddingVector& query,
                                                  std::size_t k) const {
    if (entries_.empty()) return {};
    if (query.size() != dim_)
        throw ValidationError("query dimension " + std::to_string(query.size()) +
                              " does not match index dimension " + std::to_string(dim_));
    std::vector<ScoredDoc> scored;
    scored.reserve(entries_.size());
    for (const Entry& e : entries_) scored.push_back({e.doc_id, cosine_similarity(e.vector, query)});
    return top_k(std::move(scored), k);
}

}  // namespace grtf
