#include "grtf/lexical_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "grtf/errors.hpp"

namespace grtf {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

void LexicalIndex::build(const std::vector<std::pair<std::string, std::string>>& docs) {
    postings_.clear();
    doc_lengths_.clear();
    avg_doc_length_ = 0.0;
    std::size_t total_len = 0;
    for (const auto& [id, text] : docs) {
        if (doc_lengths_.count(id)) throw ValidationError("duplicate doc id '" + id + "'");
        auto tokens = tokenize(text);
        doc_lengths_[id] = tokens.size();
        total_len += tokens.size();
        std::map<std::string, std::size_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) postings_[term].push_back({id, count});
    }
    if (!docs.empty()) avg_doc_length_ = static_cast<double>(total_len) / docs.size();
}

const std::vector<LexicalIndex::Posting>* LexicalIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

double LexicalIndex::idf(const std::string& term) const {
    auto it = postings_.find(term);
    double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    double n = static_cast<double>(doc_lengths_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double LexicalIndex::score_tf(std::size_t tf_raw, std::size_t doc_len) const {
    double tf = static_cast<double>(tf_raw);
    double dl = static_cast<double>(doc_len);
    double norm = k1_ * (1.0 - b_ + b_ * (avg_doc_length_ > 0 ? dl / avg_doc_length_ : 0.0));
    return tf * (k1_ + 1.0) / (tf + norm);
}

double LexicalIndex::bm25_score(const std::string& query, const std::string& doc_id) const {
    auto it = doc_lengths_.find(doc_id);
    if (it == doc_lengths_.end()) throw LookupError("unknown doc id '" + doc_id + "'");
    std::size_t doc_len = it->second;
    double score = 0.0;
    for (const std::string& term : tokenize(query)) {
        const auto* plist = postings(term);
        if (!plist) continue;
        auto pit = std::find_if(plist->begin(), plist->end(),
                                [&](const Posting& p) { return p.doc_id == doc_id; });
        if (pit == plist->end()) continue;
        score += idf(term) * score_tf(pit->term_frequency, doc_len);
    }
    return score;
}

std::vector<ScoredDoc> LexicalIndex::search(const std::string& query, std::size_t k) const {
    std::unordered_map<std::string, double> scores;
    for (const std::string& term : tokenize(query)) {
        const auto* plist = postings(term);
        if (!plist) continue;
        double term_idf = idf(term);
        for (const Posting& p : *plist)
            scores[p.doc_id] += term_idf * score_tf(p.term_frequency, doc_lengths_.at(p.doc_id));
    }
    std::vector<ScoredDoc> out;
    out.reserve(scores.size());
    for (auto& [id, s] : scores)
        if (s > 0.0) out.push_back({id, s});
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

}  // namespace grtf
