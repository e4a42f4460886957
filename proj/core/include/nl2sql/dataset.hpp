#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nl2sql {

// One benchmark-style example: {db_id, question, query?, evidence?}.
// `evidence` carries the benchmark's external-knowledge hint.
struct Text2SqlSample {
    std::string sample_id;
    std::string db_id;
    std::string question;
    std::optional<std::string> query;
    std::optional<std::string> evidence;

    bool operator==(const Text2SqlSample&) const = default;
};

// Reads one sample per JSONL line. Missing sample_id defaults to the
// zero-based line index rendered as text.
std::vector<Text2SqlSample> load_dataset_jsonl(const std::filesystem::path& path);

void save_dataset_jsonl(const std::vector<Text2SqlSample>& samples,
                        const std::filesystem::path& path);

nlohmann::ordered_json sample_to_json(const Text2SqlSample& sample);
Text2SqlSample sample_from_json(const nlohmann::json& doc, const std::string& default_id);

// Predictions file: one {sample_id, candidates:[sql,...]} per line.
struct Prediction {
    std::string sample_id;
    std::vector<std::string> candidates;

    bool operator==(const Prediction&) const = default;
};

std::vector<Prediction> load_predictions_jsonl(const std::filesystem::path& path);
void save_predictions_jsonl(const std::vector<Prediction>& predictions,
                            const std::filesystem::path& path);

}  // namespace nl2sql
