#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "nl2sql/catalog.hpp"

namespace nl2sql {

struct ValueDocument {
    std::uint32_t doc_id = 0;
    std::string table;
    std::string column;
    std::string value_text;

    bool operator==(const ValueDocument&) const = default;
};

struct IndexConfig {
    // Values longer than this are truncated for tokenization but stored whole.
    std::size_t index_value_cap = 500;
    // When false, only text-affinity columns are indexed.
    bool index_non_text = false;
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
};

// Immutable after build; concurrent reads are safe because every query path
// is const and nothing is cached.
class ValueIndex {
public:
    struct Posting {
        std::uint32_t doc_id = 0;
        std::uint32_t term_frequency = 0;
    };

    static ValueIndex build(const std::vector<ValueDocument>& documents, double k1, double b,
                            std::size_t value_cap);

    std::size_t doc_count() const { return documents_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    std::size_t value_cap() const { return value_cap_; }
    const ValueDocument& document(std::uint32_t doc_id) const;
    const std::vector<ValueDocument>& documents() const { return documents_; }

    // BM25 score of one document for the question's token multiset.
    double score(std::uint32_t doc_id, const std::vector<std::string>& query_tokens) const;

    void save(const std::filesystem::path& path) const;
    static ValueIndex load(const std::filesystem::path& path);

    const std::unordered_map<std::string, std::vector<Posting>>& postings() const {
        return postings_;
    }
    std::uint32_t doc_length(std::uint32_t doc_id) const { return doc_lengths_.at(doc_id); }

private:
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<ValueDocument> documents_;
    double avg_doc_length_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
    std::size_t value_cap_ = 500;

    double idf(std::size_t doc_freq) const;
    double tf_component(std::uint32_t tf, std::uint32_t doc_len) const;
};

// Collects every distinct, non-blank cell value of the catalog's indexable
// columns into one document each.
ValueIndex build_index(const DatabaseCatalog& catalog, const IndexConfig& config = {});

// BM25 candidates with positive score, ordered by (score desc, doc_id asc),
// at most `limit` entries.
std::vector<std::pair<std::uint32_t, double>> coarse_search(const ValueIndex& index,
                                                            const std::string& question,
                                                            std::size_t limit);

// Longest common substring length, case-insensitive, O(|a|*|b|) time and
// O(min) space.
std::size_t lcs_length(std::string_view a, std::string_view b);

// lcs_length(question, value) / |value|, clamped to [0,1]; 0 when the span is
// shorter than min_span.
double match_degree(std::string_view question, std::string_view value_text,
                    std::size_t min_span = 3);

struct RetrievalConfig {
    std::size_t coarse_candidates = 100;
    double fine_threshold = 0.85;
    std::size_t per_column_keep = 2;
    std::size_t min_span = 3;
};

struct RetrievalStats {
    std::size_t lcs_calls = 0;
    std::size_t coarse_candidates = 0;
};

struct ValueMatch {
    std::string table;
    std::string column;
    std::string value_text;
    double coarse_score = 0.0;
    double fine_score = 0.0;

    bool operator==(const ValueMatch&) const = default;
};

// Coarse-to-fine retrieval: BM25 shortlist, LCS refinement, threshold, and a
// per-column cap. Output ordered by (fine desc, coarse desc, doc_id asc).
std::vector<ValueMatch> retrieve_values(const ValueIndex& index, const std::string& question,
                                        const RetrievalConfig& config = {},
                                        RetrievalStats* stats = nullptr);

// Companion JSON manifest written next to the binary index.
nlohmann::ordered_json index_manifest(const ValueIndex& index, const std::string& db_id);

}  // namespace nl2sql
