#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

struct sqlite3;
struct sqlite3_stmt;

namespace nl2sql {

// One cell of a query result. Blobs are rendered to lowercase hex at the
// boundary so downstream code only ever deals in four shapes.
struct SqlValue {
    enum class Kind { Null, Integer, Real, Text };

    Kind kind = Kind::Null;
    std::int64_t integer = 0;
    double real = 0.0;
    std::string text;

    static SqlValue null() { return {}; }
    static SqlValue of_int(std::int64_t v);
    static SqlValue of_real(double v);
    static SqlValue of_text(std::string v);

    // Canonical text rendering: integers in plain decimal, reals in the
    // shortest round-trip form, null as the empty optional.
    std::optional<std::string> render_text() const;

    bool operator==(const SqlValue&) const = default;
};

class Statement;

// Read-only RAII handle over a SQLite database file.
class SqliteDb {
public:
    SqliteDb() = default;
    ~SqliteDb();
    SqliteDb(SqliteDb&&) noexcept;
    SqliteDb& operator=(SqliteDb&&) noexcept;
    SqliteDb(const SqliteDb&) = delete;
    SqliteDb& operator=(const SqliteDb&) = delete;

    // Throws IoError if the file is unreadable, FormatError if it is not a
    // SQLite database.
    static SqliteDb open_read_only(const std::filesystem::path& path);

    // Read-write open, used only by test fixtures and the augmentation
    // fixture builder; production paths stay read-only.
    static SqliteDb open_read_write(const std::filesystem::path& path);

    Statement prepare(std::string_view sql) const;

    // Runs one or more statements, discarding results. Write access required.
    void exec(std::string_view sql) const;

    // Aborts any statement still running after the deadline. A zero duration
    // clears the handler.
    void set_deadline(std::chrono::steady_clock::duration budget) const;

    sqlite3* raw() const { return db_; }
    const std::filesystem::path& path() const { return path_; }

private:
    static SqliteDb open_impl(const std::filesystem::path& path, int flags, bool must_exist);

    sqlite3* db_ = nullptr;
    std::filesystem::path path_;
};

// Prepared statement wrapper. step() throws ExecError on SQL faults and
// TimeoutError when the deadline handler fired.
class Statement {
public:
    Statement(sqlite3* db, sqlite3_stmt* stmt);
    ~Statement();
    Statement(Statement&&) noexcept;
    Statement& operator=(Statement&&) noexcept;
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    bool step();
    int column_count() const;
    SqlValue column(int idx) const;
    std::string column_name(int idx) const;

    // True when SQLite reports the statement makes no database changes.
    bool read_only() const;

    void bind_text(int idx, std::string_view value);
    void bind_int64(int idx, std::int64_t value);

private:
    sqlite3* db_ = nullptr;
    sqlite3_stmt* stmt_ = nullptr;
};

// Quotes an identifier for embedding into SQL. Bare lowercase identifiers
// that are not keywords pass through untouched, which keeps generated
// statements byte-identical to their documented templates.
std::string quote_identifier(std::string_view name);

// Single-quoted SQL string literal with '' escaping.
std::string quote_sql_string(std::string_view value);

}  // namespace nl2sql
