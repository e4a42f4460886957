#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nl2sql/catalog.hpp"
#include "nl2sql/schema_filter.hpp"
#include "nl2sql/value_index.hpp"

namespace nl2sql {

// Serialization grammar, format v1. Documented in docs/prompt_format.md and
// enforced by the test-side grammar checker:
//   table <name> , columns = [ <entry> , <entry> ... ]
//   entry    := <table>.<column> | <table>.<column> ( <part> | <part> ... )
//   part     := <type> | comment : <text> | values : <v> , <v> | primary key
//   fk line  := foreign keys : <t1>.<c1> = <t2>.<c2>          (one per FK)
//   match    := matched values : <t>.<c> = '<value>'          (one per match)
// followed by `question : <text>` and optional `external knowledge : <text>`.
inline constexpr std::string_view kPromptFormatVersion = "v1";

class TokenEstimator {
public:
    virtual ~TokenEstimator() = default;
    virtual std::size_t count(std::string_view text) const = 0;
};

// Default budget heuristic: ceil(characters / 4).
class HeuristicTokenEstimator : public TokenEstimator {
public:
    std::size_t count(std::string_view text) const override { return (text.size() + 3) / 4; }
};

std::size_t estimate_tokens(std::string_view text);

// Structured form a prompt is serialized from. Kept alongside the rendered
// text so truncation can re-serialize instead of patching strings.
struct PlanColumn {
    std::string table;
    std::string name;
    DataType type = DataType::Unknown;
    std::optional<std::string> comment;
    std::vector<std::string> values;
    bool primary_key = false;
    double score = 0.0;
    Provenance provenance = Provenance::Scored;

    bool operator==(const PlanColumn&) const = default;
};

struct PlanTable {
    std::string name;
    double score = 0.0;
    Provenance provenance = Provenance::Scored;
    std::vector<PlanColumn> columns;

    bool operator==(const PlanTable&) const = default;
};

struct PromptPlan {
    std::vector<PlanTable> tables;
    std::vector<ForeignKey> foreign_keys;
    std::vector<ValueMatch> matches;

    bool operator==(const PromptPlan&) const = default;
};

struct PromptBundle {
    PromptPlan plan;
    std::string db_prompt;
    std::string question;
    std::optional<std::string> external_knowledge;
    std::size_t estimated_tokens = 0;
    std::vector<std::string> truncation_report;

    // db_prompt plus the question line and optional external-knowledge line.
    std::string full_text() const;
};

// Renders the schema / foreign-key / matched-value sections per the grammar.
std::string render_db_prompt(const PromptPlan& plan);

struct PromptConfig {
    FilterConfig filter;
    RetrievalConfig retrieval;
};

// Assembles a plan from a filtered schema: metadata of dropped items is
// excluded entirely, FK lines keep only edges whose two endpoint columns
// survived, and
// matches are restricted to kept columns.
PromptPlan make_plan(const DatabaseCatalog& catalog, const FilteredSchema& filtered,
                     const SchemaRelevance* relevance, const std::vector<ValueMatch>& matches);

// Full pipeline for one question: score -> filter -> retrieve -> serialize.
// `index` may be null when the database holds no indexable values.
PromptBundle build_db_prompt(const std::string& question,
                             const std::optional<std::string>& external_knowledge,
                             const DatabaseCatalog& catalog, RelevanceScorer& scorer,
                             const ValueIndex* index, const PromptConfig& config);

// Drops plan items in the fixed priority order until the bundle fits
// `token_budget`. Throws BudgetError when even the bare question overflows.
PromptBundle truncate_to_budget(const PromptBundle& bundle, std::size_t token_budget,
                                const TokenEstimator& estimator = HeuristicTokenEstimator{});

// Pinned few-shot assembly constants.
inline constexpr std::string_view kSqlCue = "sql :";
inline constexpr std::string_view kDemoSeparator = "\n\n";

// Concatenates demos (most relevant last) and the target prompt with the SQL
// cue. Demos are dropped farthest-first when the estimate exceeds the budget;
// a lone over-budget target is truncated.
std::string assemble_fewshot_input(const std::vector<std::pair<PromptBundle, std::string>>& demos,
                                   const PromptBundle& target, std::size_t token_budget,
                                   const TokenEstimator& estimator = HeuristicTokenEstimator{});

class CatalogStore;

struct SftExportConfig {
    FilterConfig filter;
    RetrievalConfig retrieval;
    std::size_t token_budget = 8192;
};

struct SftPair {
    std::string input;
    std::string output;

    bool operator==(const SftPair&) const = default;
};

// One {input, output} pair per training sample, built through the padded
// schema path. Throws BudgetError when the budget cannot hold a sample's gold
// schema items and DataError for samples without gold SQL.
std::vector<SftPair> export_sft_pairs(const std::vector<Text2SqlSample>& dataset,
                                      CatalogStore& store, const SftExportConfig& config);

void save_sft_jsonl(const std::vector<SftPair>& pairs, const std::filesystem::path& path);

}  // namespace nl2sql
