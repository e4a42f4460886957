#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nl2sql/value_index.hpp"

namespace nl2sql::testing {

// Classic full-matrix longest-common-substring DP, written independently of
// the library's rolling-row version.
std::size_t oracle_lcs(const std::string& a, const std::string& b);

double oracle_match_degree(const std::string& question, const std::string& value,
                           std::size_t min_span);

// Direct BM25 evaluation over a plain document list: Lucene-style idf
// ln(1 + (N - df + 0.5) / (df + 0.5)) with standard tf normalization. Query
// tokens are scored in question order so float accumulation matches the
// library's summation order exactly.
double oracle_bm25(const std::vector<std::vector<std::string>>& doc_tokens, std::size_t doc,
                   const std::vector<std::string>& query_tokens, double k1, double b);

// Exhaustive reference for coarse-to-fine retrieval: every document is
// LCS-scored (no candidate pruning), thresholded, capped per column, and
// ordered by (fine desc, coarse desc, doc_id asc). Coarse scores come from
// oracle_bm25; documents with zero coarse score are excluded, mirroring an
// inverted index that can only surface documents sharing a query term.
std::vector<ValueMatch> oracle_retrieve(const std::vector<ValueDocument>& docs,
                                        const std::string& question,
                                        const RetrievalConfig& config, double k1, double b,
                                        std::size_t value_cap);

}  // namespace nl2sql::testing
