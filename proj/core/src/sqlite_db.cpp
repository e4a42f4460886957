#include "nl2sql/sqlite_db.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include "nl2sql/errors.hpp"

namespace nl2sql {

namespace {

std::string errmsg(sqlite3* db) {
    return db ? sqlite3_errmsg(db) : "sqlite: no handle";
}

struct DeadlineCtx {
    std::chrono::steady_clock::time_point deadline;
};

int progress_cb(void* raw) {
    auto* ctx = static_cast<DeadlineCtx*>(raw);
    return std::chrono::steady_clock::now() > ctx->deadline ? 1 : 0;
}

// One context per connection; freed with the connection.
thread_local std::unordered_map<sqlite3*, DeadlineCtx> g_deadlines;

}  // namespace

SqlValue SqlValue::of_int(std::int64_t v) {
    SqlValue out;
    out.kind = Kind::Integer;
    out.integer = v;
    return out;
}

SqlValue SqlValue::of_real(double v) {
    SqlValue out;
    out.kind = Kind::Real;
    out.real = v;
    return out;
}

SqlValue SqlValue::of_text(std::string v) {
    SqlValue out;
    out.kind = Kind::Text;
    out.text = std::move(v);
    return out;
}

std::optional<std::string> SqlValue::render_text() const {
    switch (kind) {
        case Kind::Null:
            return std::nullopt;
        case Kind::Integer:
            return std::to_string(integer);
        case Kind::Real: {
            std::array<char, 64> buf{};
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), real);
            if (ec != std::errc{}) return std::string("nan");
            return std::string(buf.data(), ptr);
        }
        case Kind::Text:
            return text;
    }
    return std::nullopt;
}

SqliteDb::~SqliteDb() {
    if (db_ != nullptr) {
        g_deadlines.erase(db_);
        sqlite3_close_v2(db_);
    }
}

SqliteDb::SqliteDb(SqliteDb&& other) noexcept : db_(other.db_), path_(std::move(other.path_)) {
    other.db_ = nullptr;
}

SqliteDb& SqliteDb::operator=(SqliteDb&& other) noexcept {
    if (this != &other) {
        if (db_ != nullptr) {
            g_deadlines.erase(db_);
            sqlite3_close_v2(db_);
        }
        db_ = other.db_;
        path_ = std::move(other.path_);
        other.db_ = nullptr;
    }
    return *this;
}

SqliteDb SqliteDb::open_impl(const std::filesystem::path& path, int flags, bool must_exist) {
    namespace fs = std::filesystem;
    if (must_exist) {
        std::error_code ec;
        if (!fs::exists(path, ec) || fs::is_directory(path, ec)) {
            throw IoError("cannot open database: " + path.string());
        }
    }
    sqlite3* raw = nullptr;
    int rc = sqlite3_open_v2(path.string().c_str(), &raw, flags, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : sqlite3_errstr(rc);
        sqlite3_close_v2(raw);
        if (rc == SQLITE_NOTADB) throw FormatError(path.string() + ": " + msg);
        throw IoError(path.string() + ": " + msg);
    }
    // The open is lazy; force a header read so "not a database" surfaces here.
    rc = sqlite3_exec(raw, "PRAGMA schema_version;", nullptr, nullptr, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = sqlite3_errmsg(raw);
        sqlite3_close_v2(raw);
        if (rc == SQLITE_NOTADB) throw FormatError(path.string() + ": not a SQLite database");
        throw IoError(path.string() + ": " + msg);
    }
    SqliteDb db;
    db.db_ = raw;
    db.path_ = path;
    return db;
}

SqliteDb SqliteDb::open_read_only(const std::filesystem::path& path) {
    return open_impl(path, SQLITE_OPEN_READONLY, true);
}

SqliteDb SqliteDb::open_read_write(const std::filesystem::path& path) {
    return open_impl(path, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, false);
}

Statement SqliteDb::prepare(std::string_view sql) const {
    sqlite3_stmt* stmt = nullptr;
    int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &stmt, nullptr);
    if (rc != SQLITE_OK) {
        throw ExecError("prepare failed: " + errmsg(db_));
    }
    if (stmt == nullptr) {
        throw ExecError("prepare produced no statement (empty SQL?)");
    }
    return Statement(db_, stmt);
}

void SqliteDb::exec(std::string_view sql) const {
    char* err = nullptr;
    int rc = sqlite3_exec(db_, std::string(sql).c_str(), nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        std::string msg = err ? err : errmsg(db_);
        sqlite3_free(err);
        throw ExecError("exec failed: " + msg);
    }
}

void SqliteDb::set_deadline(std::chrono::steady_clock::duration budget) const {
    if (budget == std::chrono::steady_clock::duration::zero()) {
        sqlite3_progress_handler(db_, 0, nullptr, nullptr);
        g_deadlines.erase(db_);
        return;
    }
    auto& ctx = g_deadlines[db_];
    ctx.deadline = std::chrono::steady_clock::now() + budget;
    sqlite3_progress_handler(db_, 1000, progress_cb, &ctx);
}

Statement::Statement(sqlite3* db, sqlite3_stmt* stmt) : db_(db), stmt_(stmt) {}

Statement::~Statement() {
    if (stmt_ != nullptr) sqlite3_finalize(stmt_);
}

Statement::Statement(Statement&& other) noexcept : db_(other.db_), stmt_(other.stmt_) {
    other.stmt_ = nullptr;
}

Statement& Statement::operator=(Statement&& other) noexcept {
    if (this != &other) {
        if (stmt_ != nullptr) sqlite3_finalize(stmt_);
        db_ = other.db_;
        stmt_ = other.stmt_;
        other.stmt_ = nullptr;
    }
    return *this;
}

bool Statement::step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_INTERRUPT) throw TimeoutError("statement interrupted by deadline");
    std::string msg = errmsg(db_);
    if (msg.find("interrupted") != std::string::npos) {
        throw TimeoutError("statement interrupted by deadline");
    }
    throw ExecError("step failed: " + msg);
}

int Statement::column_count() const {
    return sqlite3_column_count(stmt_);
}

SqlValue Statement::column(int idx) const {
    switch (sqlite3_column_type(stmt_, idx)) {
        case SQLITE_NULL:
            return SqlValue::null();
        case SQLITE_INTEGER:
            return SqlValue::of_int(sqlite3_column_int64(stmt_, idx));
        case SQLITE_FLOAT:
            return SqlValue::of_real(sqlite3_column_double(stmt_, idx));
        case SQLITE_BLOB: {
            const auto* data = static_cast<const unsigned char*>(sqlite3_column_blob(stmt_, idx));
            int n = sqlite3_column_bytes(stmt_, idx);
            static const char* hexd = "0123456789abcdef";
            std::string hex;
            hex.reserve(static_cast<std::size_t>(n) * 2);
            for (int i = 0; i < n; ++i) {
                hex.push_back(hexd[data[i] >> 4]);
                hex.push_back(hexd[data[i] & 0xF]);
            }
            return SqlValue::of_text(std::move(hex));
        }
        default: {
            const auto* txt = sqlite3_column_text(stmt_, idx);
            int n = sqlite3_column_bytes(stmt_, idx);
            return SqlValue::of_text(std::string(reinterpret_cast<const char*>(txt),
                                                 static_cast<std::size_t>(n)));
        }
    }
}

std::string Statement::column_name(int idx) const {
    const char* name = sqlite3_column_name(stmt_, idx);
    return name ? name : "";
}

bool Statement::read_only() const {
    return sqlite3_stmt_readonly(stmt_) != 0;
}

void Statement::bind_text(int idx, std::string_view value) {
    int rc = sqlite3_bind_text(stmt_, idx, value.data(), static_cast<int>(value.size()),
                               SQLITE_TRANSIENT);
    if (rc != SQLITE_OK) throw ExecError("bind failed: " + errmsg(db_));
}

void Statement::bind_int64(int idx, std::int64_t value) {
    int rc = sqlite3_bind_int64(stmt_, idx, value);
    if (rc != SQLITE_OK) throw ExecError("bind failed: " + errmsg(db_));
}

namespace {

const std::unordered_set<std::string>& sql_keywords() {
    static const std::unordered_set<std::string> kw = {
        "select", "from",  "where", "group",  "order",  "by",     "limit",  "offset",
        "join",   "inner", "outer", "left",   "right",  "cross",  "on",     "as",
        "and",    "or",    "not",   "in",     "is",     "null",   "like",   "between",
        "union",  "all",   "any",   "exists", "case",   "when",   "then",   "else",
        "end",    "table", "index", "values", "insert", "update", "delete", "distinct",
        "having", "asc",   "desc",  "to",     "default", "with",   "set",
    };
    return kw;
}

bool is_bare_identifier(std::string_view name) {
    if (name.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return sql_keywords().count(lower) == 0;
}

}  // namespace

std::string quote_identifier(std::string_view name) {
    if (is_bare_identifier(name)) return std::string(name);
    std::string out = "\"";
    for (char c : name) {
        out.push_back(c);
        if (c == '"') out.push_back('"');
    }
    out.push_back('"');
    return out;
}

std::string quote_sql_string(std::string_view value) {
    std::string out = "'";
    for (char c : value) {
        out.push_back(c);
        if (c == '\'') out.push_back('\'');
    }
    out.push_back('\'');
    return out;
}

}  // namespace nl2sql
