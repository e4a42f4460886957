#include "nl2sql/eval_harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "nl2sql/errors.hpp"

namespace nl2sql {

namespace {

// First keyword of the statement, skipping whitespace and comments.
std::string leading_keyword(const std::string& sql) {
    std::size_t i = 0;
    while (i < sql.size()) {
        if (std::isspace(static_cast<unsigned char>(sql[i]))) {
            ++i;
        } else if (sql.compare(i, 2, "--") == 0) {
            while (i < sql.size() && sql[i] != '\n') ++i;
        } else if (sql.compare(i, 2, "/*") == 0) {
            auto end = sql.find("*/", i + 2);
            i = end == std::string::npos ? sql.size() : end + 2;
        } else {
            break;
        }
    }
    std::string word;
    while (i < sql.size() && (std::isalpha(static_cast<unsigned char>(sql[i])) != 0)) {
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(sql[i])));
        ++i;
    }
    return word;
}

bool numeric_kind(const SqlValue& v) {
    return v.kind == SqlValue::Kind::Integer || v.kind == SqlValue::Kind::Real;
}

double as_double(const SqlValue& v) {
    return v.kind == SqlValue::Kind::Integer ? static_cast<double>(v.integer) : v.real;
}

bool cells_equal(const SqlValue& a, const SqlValue& b, double tol) {
    if (a.kind == SqlValue::Kind::Null || b.kind == SqlValue::Kind::Null) {
        return a.kind == SqlValue::Kind::Null && b.kind == SqlValue::Kind::Null;
    }
    if (numeric_kind(a) && numeric_kind(b)) {
        double x = as_double(a);
        double y = as_double(b);
        if (x == y) return true;
        return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
    }
    if (a.kind == SqlValue::Kind::Text && b.kind == SqlValue::Kind::Text) {
        return a.text == b.text;
    }
    return false;
}

bool rows_equal(const std::vector<SqlValue>& a, const std::vector<SqlValue>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!cells_equal(a[i], b[i], tol)) return false;
    }
    return true;
}

// Exact ordering used to canonicalize row multisets before comparison.
bool row_less(const std::vector<SqlValue>& a, const std::vector<SqlValue>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        auto rank = [](const SqlValue& v) {
            if (v.kind == SqlValue::Kind::Null) return 0;
            if (numeric_kind(v)) return 1;
            return 2;
        };
        if (rank(x) != rank(y)) return rank(x) < rank(y);
        if (rank(x) == 1) {
            double dx = as_double(x);
            double dy = as_double(y);
            if (dx != dy) return dx < dy;
        } else if (rank(x) == 2) {
            if (x.text != y.text) return x.text < y.text;
        }
    }
    return a.size() < b.size();
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    std::size_t mid = xs.size() / 2;
    if (xs.size() % 2 == 1) return xs[mid];
    return 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace

ResultTable execute_sql(const SqliteDb& db, const std::string& sql, double timeout_s) {
    std::string kw = leading_keyword(sql);
    if (kw != "select" && kw != "with") {
        throw PolicyError("only SELECT statements are allowed, got '" + kw + "'");
    }
    auto budget = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(timeout_s));
    db.set_deadline(budget);
    struct DeadlineGuard {
        const SqliteDb* db;
        ~DeadlineGuard() { db->set_deadline(std::chrono::steady_clock::duration::zero()); }
    } guard{&db};

    Statement stmt = db.prepare(sql);
    if (!stmt.read_only()) {
        throw PolicyError("statement is not read-only");
    }
    ResultTable table;
    table.columns = static_cast<std::size_t>(stmt.column_count());
    while (stmt.step()) {
        std::vector<SqlValue> row;
        row.reserve(table.columns);
        for (int i = 0; i < static_cast<int>(table.columns); ++i) {
            row.push_back(stmt.column(i));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

bool has_top_level_order_by(const std::string& sql) {
    int depth = 0;
    std::size_t i = 0;
    auto word_at = [&](std::size_t pos, std::string_view word) {
        if (pos + word.size() > sql.size()) return false;
        for (std::size_t k = 0; k < word.size(); ++k) {
            if (std::tolower(static_cast<unsigned char>(sql[pos + k])) != word[k]) return false;
        }
        bool left_ok = pos == 0 || !(std::isalnum(static_cast<unsigned char>(sql[pos - 1])) ||
                                     sql[pos - 1] == '_');
        std::size_t after = pos + word.size();
        bool right_ok = after >= sql.size() ||
                        !(std::isalnum(static_cast<unsigned char>(sql[after])) ||
                          sql[after] == '_');
        return left_ok && right_ok;
    };
    while (i < sql.size()) {
        char c = sql[i];
        if (c == '\'') {
            ++i;
            while (i < sql.size()) {
                if (sql[i] == '\'' && i + 1 < sql.size() && sql[i + 1] == '\'') {
                    i += 2;
                } else if (sql[i] == '\'') {
                    ++i;
                    break;
                } else {
                    ++i;
                }
            }
            continue;
        }
        if (c == '"') {
            ++i;
            while (i < sql.size() && sql[i] != '"') ++i;
            if (i < sql.size()) ++i;
            continue;
        }
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth == 0 && (c == 'o' || c == 'O') && word_at(i, "order")) {
            std::size_t j = i + 5;
            while (j < sql.size() && std::isspace(static_cast<unsigned char>(sql[j]))) ++j;
            if (word_at(j, "by")) return true;
        }
        ++i;
    }
    return false;
}

bool results_equal(const ResultTable& gold, const ResultTable& pred, bool order_sensitive,
                   double float_tol) {
    if (gold.columns != pred.columns) return false;
    if (gold.rows.size() != pred.rows.size()) return false;
    if (order_sensitive) {
        for (std::size_t i = 0; i < gold.rows.size(); ++i) {
            if (!rows_equal(gold.rows[i], pred.rows[i], float_tol)) return false;
        }
        return true;
    }
    auto gold_sorted = gold.rows;
    auto pred_sorted = pred.rows;
    std::sort(gold_sorted.begin(), gold_sorted.end(), row_less);
    std::sort(pred_sorted.begin(), pred_sorted.end(), row_less);
    bool sorted_match = true;
    for (std::size_t i = 0; i < gold_sorted.size(); ++i) {
        if (!rows_equal(gold_sorted[i], pred_sorted[i], float_tol)) {
            sorted_match = false;
            break;
        }
    }
    if (sorted_match) return true;
    // Tolerant comparison is not transitive, so near-equal floats can sort
    // apart; fall back to greedy multiset matching at small sizes.
    if (gold_sorted.size() > 2000) return false;
    std::vector<bool> used(pred_sorted.size(), false);
    for (const auto& grow : gold_sorted) {
        bool matched = false;
        for (std::size_t j = 0; j < pred_sorted.size(); ++j) {
            if (used[j]) continue;
            if (rows_equal(grow, pred_sorted[j], float_tol)) {
                used[j] = true;
                matched = true;
                break;
            }
        }
        if (!matched) return false;
    }
    return true;
}

SelectedCandidate select_candidate(const std::vector<std::string>& candidates, const SqliteDb& db,
                                   double timeout_s) {
    if (candidates.empty()) throw DataError("candidate list is empty");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        try {
            execute_sql(db, candidates[i], timeout_s);
            return {candidates[i], i, true};
        } catch (const Error&) {
            // try the next candidate
        }
    }
    return {candidates[0], 0, false};
}

std::string_view failure_reason_name(FailureReason r) {
    switch (r) {
        case FailureReason::ExecError: return "exec_error";
        case FailureReason::Timeout: return "timeout";
        case FailureReason::Mismatch: return "mismatch";
        case FailureReason::MissingPrediction: return "missing_prediction";
    }
    return "exec_error";
}

EvalReport evaluate(const std::vector<Text2SqlSample>& samples,
                    const std::vector<Prediction>& predictions, const DbResolver& resolve_db,
                    const EvalConfig& config) {
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : predictions) by_id[p.sample_id] = &p;

    EvalReport report;
    report.config = config;

    for (const auto& sample : samples) {
        EvalOutcome outcome;
        outcome.sample_id = sample.sample_id;
        if (!sample.query) {
            throw DataError("sample " + sample.sample_id + " has no gold SQL");
        }

        auto it = by_id.find(sample.sample_id);
        if (it == by_id.end() || it->second->candidates.empty()) {
            outcome.failure_reason = FailureReason::MissingPrediction;
            outcome.detail = "no prediction for sample";
            report.outcomes.push_back(std::move(outcome));
            continue;
        }

        SqliteDb db = SqliteDb::open_read_only(resolve_db(sample.db_id));

        ResultTable gold_result;
        try {
            gold_result = execute_sql(db, *sample.query, config.timeout_s);
        } catch (const TimeoutError& e) {
            outcome.failure_reason = FailureReason::Timeout;
            outcome.detail = std::string("gold query: ") + e.what();
            report.outcomes.push_back(std::move(outcome));
            continue;
        } catch (const Error& e) {
            outcome.failure_reason = FailureReason::ExecError;
            outcome.detail = std::string("gold query: ") + e.what();
            report.outcomes.push_back(std::move(outcome));
            continue;
        }

        SelectedCandidate chosen = select_candidate(it->second->candidates, db, config.timeout_s);
        outcome.chosen_index = chosen.index;
        if (!chosen.executable) {
            outcome.failure_reason = FailureReason::ExecError;
            outcome.detail = "no executable candidate";
            report.outcomes.push_back(std::move(outcome));
            continue;
        }

        ResultTable pred_result;
        try {
            pred_result = execute_sql(db, chosen.sql, config.timeout_s);
        } catch (const TimeoutError& e) {
            outcome.failure_reason = FailureReason::Timeout;
            outcome.detail = e.what();
            report.outcomes.push_back(std::move(outcome));
            continue;
        } catch (const Error& e) {
            outcome.failure_reason = FailureReason::ExecError;
            outcome.detail = e.what();
            report.outcomes.push_back(std::move(outcome));
            continue;
        }

        bool order_sensitive = has_top_level_order_by(*sample.query);
        outcome.correct =
            results_equal(gold_result, pred_result, order_sensitive, config.float_tol);
        if (!outcome.correct) {
            outcome.failure_reason = FailureReason::Mismatch;
            outcome.detail = "result sets differ";
            report.outcomes.push_back(std::move(outcome));
            continue;
        }

        // Timing runs are strictly serial: one warmup, then ves_runs
        // measured executions per query.
        auto time_once = [&](const std::string& sql) {
            auto start = std::chrono::steady_clock::now();
            execute_sql(db, sql, config.timeout_s);
            auto stop = std::chrono::steady_clock::now();
            return std::chrono::duration<double>(stop - start).count();
        };
        if (config.ves_runs > 0) {
            time_once(*sample.query);
            time_once(chosen.sql);
            outcome.gold_times_s.reserve(config.ves_runs);
            outcome.pred_times_s.reserve(config.ves_runs);
            // Interleaved so cache warming and clock-speed drift hit both
            // queries alike instead of skewing the ratio.
            for (std::size_t r = 0; r < config.ves_runs; ++r) {
                outcome.gold_times_s.push_back(time_once(*sample.query));
                outcome.pred_times_s.push_back(time_once(chosen.sql));
            }
            double gold_med = median(outcome.gold_times_s);
            double pred_med = median(outcome.pred_times_s);
            outcome.gold_time_s = gold_med;
            outcome.pred_time_s = pred_med;
            outcome.ves_term = pred_med > 0.0 ? gold_med / pred_med : 1.0;
        } else {
            outcome.ves_term = 1.0;
        }
        report.outcomes.push_back(std::move(outcome));
    }

    if (!report.outcomes.empty()) {
        double correct = 0.0;
        double ves_sum = 0.0;
        for (const auto& o : report.outcomes) {
            if (o.correct) correct += 1.0;
            ves_sum += o.ves_term;
        }
        double n = static_cast<double>(report.outcomes.size());
        report.ex_percent = 100.0 * correct / n;
        report.ves_percent = 100.0 * ves_sum / n;
    }
    return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["ex_percent"] = report.ex_percent;
    doc["ves_percent"] = report.ves_percent;
    doc["config"] = {{"ves_runs", report.config.ves_runs},
                     {"timeout_s", report.config.timeout_s},
                     {"float_tol", report.config.float_tol},
                     {"ves_aggregation", "median_of_runs"}};
    doc["samples"] = nlohmann::ordered_json::array();
    for (const auto& o : report.outcomes) {
        nlohmann::ordered_json jo;
        jo["sample_id"] = o.sample_id;
        jo["correct"] = o.correct;
        jo["ves_term"] = o.ves_term;
        jo["chosen_index"] = o.chosen_index;
        if (o.gold_time_s) jo["gold_time_s"] = *o.gold_time_s;
        if (o.pred_time_s) jo["pred_time_s"] = *o.pred_time_s;
        if (o.failure_reason) jo["failure_reason"] = std::string(failure_reason_name(*o.failure_reason));
        if (!o.detail.empty()) jo["detail"] = o.detail;
        jo["gold_times_s"] = o.gold_times_s;
        jo["pred_times_s"] = o.pred_times_s;
        doc["samples"].push_back(std::move(jo));
    }
    return doc;
}

std::string render_report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "sample_id            correct  ves_term  reason\n";
    out << "-------------------  -------  --------  ------------------\n";
    for (const auto& o : report.outcomes) {
        std::string id = o.sample_id.size() > 19 ? o.sample_id.substr(0, 19) : o.sample_id;
        out << id << std::string(21 - id.size(), ' ');
        out << (o.correct ? "yes    " : "no     ") << "  ";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%8.3f", o.ves_term);
        out << buf << "  ";
        out << (o.failure_reason ? failure_reason_name(*o.failure_reason) : "") << "\n";
    }
    char line[128];
    std::snprintf(line, sizeof(line), "EX = %.2f  VES = %.2f  (n=%zu, ves_runs=%zu)",
                  report.ex_percent, report.ves_percent, report.outcomes.size(),
                  report.config.ves_runs);
    out << line << "\n";
    return out.str();
}

}  // namespace nl2sql
