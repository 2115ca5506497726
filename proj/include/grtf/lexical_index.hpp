#pragma once
#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace grtf {

/// Lowercase, split on any non-alphanumeric (underscores split too), drop
/// empties. No stemming, no stopwords.
std::vector<std::string> tokenize(const std::string& text);

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

/// Okapi BM25 inverted index. Immutable after build.
class LexicalIndex {
public:
    static constexpr double kDefaultK1 = 1.2;
    static constexpr double kDefaultB = 0.75;

    struct Posting {
        std::string doc_id;
        std::size_t term_frequency;
    };

    LexicalIndex() = default;
    LexicalIndex(double k1, double b) : k1_(k1), b_(b) {}

    /// Throws ValidationError on duplicate doc id.
    void build(const std::vector<std::pair<std::string, std::string>>& docs);  // (id, text)

    double bm25_score(const std::string& query, const std::string& doc_id) const;
    std::vector<ScoredDoc> search(const std::string& query, std::size_t k) const;

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const std::vector<Posting>* postings(const std::string& term) const;
    bool has_doc(const std::string& doc_id) const { return doc_lengths_.count(doc_id) != 0; }

private:
    double idf(const std::string& term) const;
    double score_tf(std::size_t tf, std::size_t doc_len) const;

    double k1_ = kDefaultK1;
    double b_ = kDefaultB;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::size_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
};

}  // namespace grtf
