#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nl2sql/dataset.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {

struct ResultTable {
    std::size_t columns = 0;
    std::vector<std::vector<SqlValue>> rows;

    bool operator==(const ResultTable&) const = default;
};

// Runs one SELECT/CTE statement read-only with a wall-clock budget.
// Write statements raise PolicyError, SQL faults ExecError, budget overrun
// TimeoutError.
ResultTable execute_sql(const SqliteDb& db, const std::string& sql, double timeout_s);

// True when the top-level query (outside parentheses and string literals)
// contains ORDER BY.
bool has_top_level_order_by(const std::string& sql);

// Multiset (or sequence, when order_sensitive) comparison. Numerics compare
// within |a-b| <= tol * max(1, |a|, |b|); text is exact; null equals only
// null; integer and real are one numeric class.
bool results_equal(const ResultTable& gold, const ResultTable& pred, bool order_sensitive,
                   double float_tol = 1e-6);

struct SelectedCandidate {
    std::string sql;
    std::size_t index = 0;
    bool executable = false;
};

// First candidate that executes without error; falls back to index 0 with
// executable=false when none do.
SelectedCandidate select_candidate(const std::vector<std::string>& candidates, const SqliteDb& db,
                                   double timeout_s);

enum class FailureReason { ExecError, Timeout, Mismatch, MissingPrediction };

std::string_view failure_reason_name(FailureReason r);

struct EvalOutcome {
    std::string sample_id;
    bool correct = false;
    std::optional<double> gold_time_s;  // median over ves_runs
    std::optional<double> pred_time_s;
    double ves_term = 0.0;
    std::optional<FailureReason> failure_reason;
    std::string detail;
    std::size_t chosen_index = 0;
    std::vector<double> gold_times_s;  // raw timings for audit
    std::vector<double> pred_times_s;
};

struct EvalConfig {
    std::size_t ves_runs = 100;
    double timeout_s = 30.0;
    double float_tol = 1e-6;
};

struct EvalReport {
    double ex_percent = 0.0;
    double ves_percent = 0.0;
    std::vector<EvalOutcome> outcomes;
    EvalConfig config;
};

using DbResolver = std::function<std::filesystem::path(const std::string& db_id)>;

// EX via select_candidate over each sample's prediction; VES timing runs only
// for correct samples, serial, median-of-runs.
EvalReport evaluate(const std::vector<Text2SqlSample>& samples,
                    const std::vector<Prediction>& predictions, const DbResolver& resolve_db,
                    const EvalConfig& config = {});

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string render_report_table(const EvalReport& report);

}  // namespace nl2sql
