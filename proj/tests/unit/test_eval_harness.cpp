#include <doctest.h>

#include <string>
#include <vector>

#include "nl2sql/errors.hpp"
#include "nl2sql/eval_harness.hpp"
#include "support/fixtures.hpp"

using namespace nl2sql;
using nl2sql::testing::TempDir;
using nl2sql::testing::create_db;

namespace {

SqliteDb tiny_db(const TempDir& dir, const std::string& name = "eval.sqlite") {
    auto path = dir.file(name);
    create_db(path,
              "CREATE TABLE nums (n INTEGER, label TEXT);"
              "INSERT INTO nums VALUES (1, 'one'), (2, 'two'), (3, NULL);");
    return SqliteDb::open_read_only(path);
}

ResultTable table_of(std::vector<std::vector<SqlValue>> rows, std::size_t columns) {
    ResultTable t;
    t.columns = columns;
    t.rows = std::move(rows);
    return t;
}

}  // namespace

TEST_SUITE("eval_harness") {

TEST_CASE("execute_sql runs read-only selects") {
    TempDir dir;
    SqliteDb db = tiny_db(dir);

    auto t = execute_sql(db, "SELECT n FROM nums ORDER BY n", 5.0);
    CHECK(t.columns == 1);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0][0] == SqlValue::of_int(1));

    auto cte = execute_sql(db, "WITH m AS (SELECT max(n) AS v FROM nums) SELECT v FROM m", 5.0);
    CHECK(cte.rows.size() == 1);
    CHECK(cte.rows[0][0] == SqlValue::of_int(3));

    auto commented = execute_sql(db, "-- leading note\nSELECT count(*) FROM nums", 5.0);
    CHECK(commented.rows[0][0] == SqlValue::of_int(3));
    auto block = execute_sql(db, "/* note */ SELECT 1", 5.0);
    CHECK(block.rows[0][0] == SqlValue::of_int(1));
}

TEST_CASE("execute_sql rejects writes and other statements") {
    TempDir dir;
    SqliteDb db = tiny_db(dir);
    CHECK_THROWS_AS(execute_sql(db, "INSERT INTO nums VALUES (4, 'four')", 5.0), PolicyError);
    CHECK_THROWS_AS(execute_sql(db, "PRAGMA page_size", 5.0), PolicyError);
    CHECK_THROWS_AS(execute_sql(db, "DROP TABLE nums", 5.0), PolicyError);
    CHECK_THROWS_AS(execute_sql(db, "UPDATE nums SET n = 0", 5.0), PolicyError);
}

TEST_CASE("execute_sql surfaces SQL faults and timeouts") {
    TempDir dir;
    SqliteDb db = tiny_db(dir);
    CHECK_THROWS_AS(execute_sql(db, "SELECT missing FROM nums", 5.0), ExecError);
    CHECK_THROWS_AS(execute_sql(db, "SELECT FROM", 5.0), ExecError);

    const std::string slow =
        "WITH RECURSIVE r(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM r) "
        "SELECT count(*) FROM r";
    CHECK_THROWS_AS(execute_sql(db, slow, 0.05), TimeoutError);
    // The deadline does not leak into the next statement.
    auto after = execute_sql(db, "SELECT 1", 5.0);
    CHECK(after.rows.size() == 1);
}

TEST_CASE("top-level ORDER BY detection") {
    CHECK(has_top_level_order_by("SELECT * FROM t ORDER BY a"));
    CHECK(has_top_level_order_by("select n from t order   by n desc"));
    CHECK(has_top_level_order_by("SELECT * FROM (SELECT 1) Order By 1"));
    CHECK_FALSE(has_top_level_order_by("SELECT * FROM (SELECT a FROM t ORDER BY a) sub"));
    CHECK_FALSE(has_top_level_order_by("SELECT 'order by' FROM t"));
    CHECK_FALSE(has_top_level_order_by("SELECT \"order by\" FROM t"));
    CHECK_FALSE(has_top_level_order_by("SELECT reorder FROM by_table"));
    CHECK_FALSE(has_top_level_order_by("SELECT orderby FROM t"));
    CHECK_FALSE(has_top_level_order_by("SELECT n FROM t"));
    // Escaped quote inside a literal does not end the literal.
    CHECK_FALSE(has_top_level_order_by("SELECT 'it''s order by text' FROM t"));
}

TEST_CASE("results_equal compares multisets unless order matters") {
    auto gold = table_of({{SqlValue::of_int(1)}, {SqlValue::of_int(2)}}, 1);
    auto permuted = table_of({{SqlValue::of_int(2)}, {SqlValue::of_int(1)}}, 1);
    CHECK(results_equal(gold, permuted, false));
    CHECK_FALSE(results_equal(gold, permuted, true));
    CHECK(results_equal(gold, gold, true));
}

TEST_CASE("results_equal numeric and null semantics") {
    auto a = table_of({{SqlValue::of_real(1.0)}}, 1);
    auto b = table_of({{SqlValue::of_int(1)}}, 1);
    CHECK(results_equal(a, b, false));  // one numeric class

    auto close_ = table_of({{SqlValue::of_real(1.0000001)}}, 1);
    CHECK(results_equal(a, close_, false));
    auto far = table_of({{SqlValue::of_real(1.1)}}, 1);
    CHECK_FALSE(results_equal(a, far, false));
    // Relative tolerance scales with magnitude.
    auto big = table_of({{SqlValue::of_real(1e12)}}, 1);
    auto big_close = table_of({{SqlValue::of_real(1e12 + 100)}}, 1);
    CHECK(results_equal(big, big_close, false));

    auto null_row = table_of({{SqlValue::null()}}, 1);
    auto zero_row = table_of({{SqlValue::of_int(0)}}, 1);
    CHECK(results_equal(null_row, null_row, false));
    CHECK_FALSE(results_equal(null_row, zero_row, false));

    auto text_one = table_of({{SqlValue::of_text("1")}}, 1);
    CHECK_FALSE(results_equal(b, text_one, false));

    auto wide = table_of({{SqlValue::of_int(1), SqlValue::of_int(2)}}, 2);
    CHECK_FALSE(results_equal(a, wide, false));
    auto empty1 = table_of({}, 1);
    CHECK_FALSE(results_equal(empty1, a, false));
    CHECK(results_equal(empty1, empty1, false));
}

TEST_CASE("select_candidate picks the first executable") {
    TempDir dir;
    SqliteDb db = tiny_db(dir);
    std::vector<std::string> candidates = {
        "SELECT broken FROM nowhere",
        "INSERT INTO nums VALUES (9, 'nine')",
        "SELECT n FROM nums",
        "SELECT label FROM nums",
    };
    auto chosen = select_candidate(candidates, db, 5.0);
    CHECK(chosen.index == 2);
    CHECK(chosen.executable);
    CHECK(chosen.sql == "SELECT n FROM nums");

    std::vector<std::string> hopeless = {"SELECT x FROM y", "DELETE FROM nums"};
    auto fallback = select_candidate(hopeless, db, 5.0);
    CHECK(fallback.index == 0);
    CHECK_FALSE(fallback.executable);
    CHECK(fallback.sql == "SELECT x FROM y");

    CHECK_THROWS_AS(select_candidate({}, db, 5.0), DataError);
}

TEST_CASE("evaluate scores EX and VES over a mixed batch") {
    TempDir dir;
    auto db_path = dir.file("scores.sqlite");
    create_db(db_path,
              "CREATE TABLE sales (amount INTEGER, region TEXT);"
              "INSERT INTO sales VALUES (10, 'north'), (20, 'south'), (30, 'north');");

    auto sample = [](std::string id, std::string gold) {
        Text2SqlSample s;
        s.sample_id = std::move(id);
        s.db_id = "scores";
        s.question = "q";
        s.query = std::move(gold);
        return s;
    };
    std::vector<Text2SqlSample> samples = {
        sample("exact", "SELECT sum(amount) FROM sales"),
        sample("reordered", "SELECT region FROM sales"),
        sample("wrong", "SELECT count(*) FROM sales"),
        sample("broken", "SELECT amount FROM sales"),
        sample("absent", "SELECT 1"),
    };
    std::vector<Prediction> predictions = {
        {"exact", {"SELECT sum(amount) FROM sales"}},
        // Same multiset, different order: still correct (no top-level ORDER BY).
        {"reordered", {"SELECT region FROM sales ORDER BY region DESC"}},
        {"wrong", {"SELECT 999"}},
        // Nothing executes: falls back to candidate 0, scored as exec failure.
        {"broken", {"SELECT zap FROM sales", "UPDATE sales SET amount = 0"}},
    };

    EvalConfig config;
    config.ves_runs = 3;
    config.timeout_s = 5.0;
    auto report = evaluate(samples, predictions, [&](const std::string&) { return db_path; },
                           config);

    REQUIRE(report.outcomes.size() == 5);
    CHECK(report.outcomes[0].correct);
    CHECK(report.outcomes[1].correct);
    CHECK_FALSE(report.outcomes[2].correct);
    CHECK(report.outcomes[2].failure_reason == FailureReason::Mismatch);
    CHECK(report.outcomes[3].failure_reason == FailureReason::ExecError);
    CHECK(report.outcomes[4].failure_reason == FailureReason::MissingPrediction);
    CHECK(report.ex_percent == doctest::Approx(40.0));

    // Correct samples carry timing medians; failures contribute zero.
    CHECK(report.outcomes[0].gold_time_s.has_value());
    CHECK(report.outcomes[0].gold_times_s.size() == 3);
    CHECK(report.outcomes[0].ves_term > 0.0);
    CHECK(report.outcomes[2].ves_term == 0.0);

    auto doc = report_to_json(report);
    CHECK(doc.at("ex_percent").get<double>() == doctest::Approx(40.0));
    CHECK(doc.at("config").at("ves_runs") == 3);
    CHECK(doc.at("samples").size() == 5);
    CHECK(doc.at("samples")[4].at("failure_reason") == "missing_prediction");

    auto text = render_report_table(report);
    CHECK(text.find("EX = 40.00") != std::string::npos);
    CHECK(text.find("missing_prediction") != std::string::npos);
}

TEST_CASE("identical predictions reach full marks") {
    TempDir dir;
    auto db_path = dir.file("full.sqlite");
    create_db(db_path,
              "CREATE TABLE t (a INTEGER);"
              "INSERT INTO t VALUES (1), (2);");
    Text2SqlSample s;
    s.sample_id = "s1";
    s.db_id = "full";
    s.question = "q";
    s.query = "SELECT a FROM t ORDER BY a";
    std::vector<Prediction> preds = {{"s1", {"SELECT a FROM t ORDER BY a"}}};
    EvalConfig config;
    config.ves_runs = 5;
    auto report = evaluate({s}, preds, [&](const std::string&) { return db_path; }, config);
    CHECK(report.ex_percent == 100.0);
    // Identical SQL keeps the timing ratio near one even on a fast query.
    CHECK(report.ves_percent > 20.0);
    CHECK(report.ves_percent < 500.0);
}

TEST_CASE("evaluate requires gold SQL") {
    Text2SqlSample s;
    s.sample_id = "no-gold";
    s.db_id = "db";
    s.question = "q";
    CHECK_THROWS_AS(evaluate({s}, {}, [](const std::string&) { return "x"; }), DataError);
}

}
