#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "nl2sql/eval_harness.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/schema_filter.hpp"
#include "nl2sql/value_index.hpp"

namespace nl2sql {

// One document configuring the whole pipeline. The `profile` picks the
// schema-filter defaults: "sft" keeps 6 tables / 10 columns, "fewshot"
// tightens to 5 tables / 6 columns. Explicit keys override the profile.
struct PipelineConfig {
    std::string profile = "sft";
    FilterConfig filter;
    RetrievalConfig retrieval;
    IndexConfig index;
    EvalConfig eval;
    GatewayConfig gateway;
    std::size_t token_budget = 8192;
    std::size_t representative_values = 2;
    std::size_t demo_count = 3;
};

FilterConfig filter_defaults_for_profile(const std::string& profile);

// Throws ConfigError on unknown keys, wrong types, or out-of-range values.
PipelineConfig pipeline_config_from_json(const nlohmann::ordered_json& doc);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& config);

}  // namespace nl2sql
