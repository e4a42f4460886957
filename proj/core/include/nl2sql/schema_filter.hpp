#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nl2sql/catalog.hpp"
#include "nl2sql/dataset.hpp"

namespace nl2sql {

struct SchemaRelevance {
    std::map<std::string, double> table_scores;
    std::map<std::pair<std::string, std::string>, double> column_scores;
    std::string scorer_id;
};

// Pluggable relevance model. Implementations must assign a finite score in
// [0,1] to every table and column of the catalog.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual std::string id() const = 0;
    virtual SchemaRelevance score(const std::string& question,
                                  const DatabaseCatalog& catalog) = 0;
};

// Default scorer: 0.5 * token Jaccard of question vs (name + comment) plus
// 0.5 * match_degree(question, name).
class LexicalScorer : public RelevanceScorer {
public:
    std::string id() const override { return "lexical:v1"; }
    SchemaRelevance score(const std::string& question, const DatabaseCatalog& catalog) override;
};

struct RemoteScorerConfig {
    std::string endpoint;
    int timeout_s = 30;
};

// Posts {question, tables:[{name, comment, columns:[{name, comment}]}]} and
// expects {table_scores:[...], column_scores:[[...]]} parallel to the
// request order.
class RemoteScorer : public RelevanceScorer {
public:
    explicit RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {}
    std::string id() const override { return "remote:" + config_.endpoint; }
    SchemaRelevance score(const std::string& question, const DatabaseCatalog& catalog) override;

    static nlohmann::ordered_json request_body(const std::string& question,
                                               const DatabaseCatalog& catalog);
    static SchemaRelevance parse_response(const nlohmann::json& body,
                                          const DatabaseCatalog& catalog,
                                          const std::string& scorer_id);

private:
    RemoteScorerConfig config_;
};

SchemaRelevance score_schema(const std::string& question, const DatabaseCatalog& catalog,
                             RelevanceScorer& scorer);

struct FilterConfig {
    std::size_t top_k1 = 6;
    std::size_t top_k2 = 10;
    std::optional<std::uint64_t> padding_seed;
};

enum class Provenance { Scored, Gold, Padding };

std::string_view provenance_name(Provenance p);

struct FilteredColumn {
    std::string name;
    Provenance provenance = Provenance::Scored;

    bool operator==(const FilteredColumn&) const = default;
};

struct FilteredTable {
    std::string name;
    Provenance provenance = Provenance::Scored;
    std::vector<FilteredColumn> columns;

    bool operator==(const FilteredTable&) const = default;
};

struct FilteredSchema {
    std::string db_id;
    std::vector<FilteredTable> kept;
    // True when primary-key retention forced a table past top_k2.
    bool pk_budget_exceeded = false;

    bool operator==(const FilteredSchema&) const = default;
};

// Top-k reduction: tables by score desc (ties: catalog order), then columns
// per kept table the same way. Primary-key columns are always retained and
// consume budget first.
FilteredSchema filter_schema(const DatabaseCatalog& catalog, const SchemaRelevance& relevance,
                             const FilterConfig& config);

// Tables and columns the gold SQL references, keyed by catalog-cased names.
struct GoldSchemaRefs {
    std::set<std::string> tables;
    std::map<std::string, std::set<std::string>> columns;
};

// Lexical identifier extraction: alias-aware FROM/JOIN scan plus dotted and
// bare column references. Throws DataError when a FROM/JOIN target is not a
// catalog table.
GoldSchemaRefs extract_gold_refs(const std::string& sql, const DatabaseCatalog& catalog);

// Training-path schema: gold items always kept, then seeded-random padding up
// to the budget. Never applied at inference.
FilteredSchema pad_training_schema(const Text2SqlSample& sample, const DatabaseCatalog& catalog,
                                   const FilterConfig& config);

}  // namespace nl2sql
