#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nl2sql/catalog.hpp"
#include "nl2sql/dataset.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {

struct SeedPair {
    std::string question;
    std::string sql;
    std::string source = "human";  // human | synthesized

    bool operator==(const SeedPair&) const = default;
};

// Slots: {TABLE}, {COLUMN}, {COLUMN:numeric}, {VALUE}. Same slot name binds
// to the same schema item everywhere in one filled pair.
struct SqlTemplate {
    std::string template_id;
    std::string sql_template;
    std::vector<std::string> question_templates;

    bool operator==(const SqlTemplate&) const = default;
};

struct RefineExample {
    std::string templated_question;
    std::string templated_sql;
    std::string refined_question;

    bool operator==(const RefineExample&) const = default;
};

enum class AugmentDirection { Q2S, S2Q };

std::string_view direction_name(AugmentDirection d);

struct AugmentedPair {
    std::string question;
    std::string sql;
    AugmentDirection direction = AugmentDirection::Q2S;
    bool validated = false;

    bool operator==(const AugmentedPair&) const = default;
};

// Template store document: {format_version, templates:[...],
// refine_examples:[...]}. Load validates the slot-subset invariant.
struct TemplateStore {
    std::vector<SqlTemplate> templates;
    std::vector<RefineExample> refine_examples;
};

TemplateStore load_template_store(const std::filesystem::path& path);
void save_template_store(const TemplateStore& store, const std::filesystem::path& path);

// Flags template pairs whose question wording and SQL shape look mismatched
// (for example superlative wording over a COUNT-based SQL). Warnings only.
std::vector<std::string> lint_templates(const std::vector<SqlTemplate>& templates);

// Seeds JSONL: one {question, sql, source?} per line.
std::vector<SeedPair> load_seeds_jsonl(const std::filesystem::path& path);
void save_seeds_jsonl(const std::vector<SeedPair>& seeds, const std::filesystem::path& path);

// Stage-one prompt: shuffled seed questions, ending at the [NEW QUESTION] cue.
std::string build_q2s_question_prompt(const std::vector<SeedPair>& seeds,
                                      std::uint64_t shuffle_seed);

// Stage-two prompt: DDL, seed (question, SQL) pairs, the new question, ending
// at the [NEW SQL] cue.
std::string build_q2s_sql_prompt(const std::string& new_question,
                                 const std::vector<SeedPair>& seeds, const std::string& db_ddl);

struct TemplatedPair {
    std::string question;
    std::string sql;
    std::string template_id;

    bool operator==(const TemplatedPair&) const = default;
};

// Seeded uniform slot filling. Unsatisfiable templates are skipped with a
// warning; the result has exactly `count` pairs unless nothing is satisfiable.
std::vector<TemplatedPair> fill_templates(const std::vector<SqlTemplate>& templates,
                                          const DatabaseCatalog& catalog, std::uint64_t rng_seed,
                                          std::size_t count,
                                          std::vector<std::string>* warnings = nullptr);

// Refinement prompt: f example triplets, the new pair, ending at the
// [NEW REFINED QUESTION] cue. Throws DataError when examples is empty.
std::string build_refine_prompt(const TemplatedPair& pair,
                                const std::vector<RefineExample>& examples);

// Executes the pair's SQL read-only and sets `validated`. Never throws for
// SQL faults; `reason` receives the failure description.
AugmentedPair validate_pair(AugmentedPair pair, const SqliteDb& db, double timeout_s,
                            std::string* reason = nullptr);

struct AugmentConfig {
    std::size_t q2s_count = 0;
    std::size_t s2q_count = 0;
    double temperature = 0.9;
    std::uint64_t rng_seed = 0;
    double validation_timeout_s = 30.0;
    std::size_t completion_max_tokens = 256;
    // Attempt budget per direction = factor * target count.
    std::size_t max_attempts_factor = 4;
    std::vector<SeedPair> seeds;
    std::vector<SqlTemplate> templates;
    std::vector<RefineExample> refine_examples;
};

struct AugmentResult {
    std::vector<AugmentedPair> pairs;  // validated, deduplicated
    std::size_t q2s_shortfall = 0;
    std::size_t s2q_shortfall = 0;
    std::vector<std::string> warnings;
};

// Runs both directions to their target counts, validates by execution, and
// drops duplicates and failures.
AugmentResult run_augmentation(const AugmentConfig& config, LlmGateway& gateway,
                               const DatabaseCatalog& catalog);

std::vector<Text2SqlSample> augmented_to_samples(const AugmentResult& result,
                                                 const std::string& db_id);

}  // namespace nl2sql
