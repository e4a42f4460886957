#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nl2sql {

// SQLite type affinity classes plus `unknown` for columns declared with no
// type at all.
enum class DataType { Integer, Real, Text, Blob, Numeric, Unknown };

std::string_view data_type_name(DataType t);
DataType data_type_from_name(std::string_view name);

// Applies SQLite's declared-type affinity rules. Empty/whitespace
// declarations map to Unknown instead of the engine's blob fallback, since an
// absent declaration carries no information worth echoing into prompts.
DataType affinity_of_declared_type(std::string_view declared);

struct ColumnInfo {
    std::string name;
    DataType data_type = DataType::Unknown;
    std::optional<std::string> comment;
    bool is_primary_key = false;
    std::vector<std::string> representative_values;
    std::size_t ordinal = 0;

    bool operator==(const ColumnInfo&) const = default;
};

struct ForeignKey {
    std::string from_table;
    std::string from_column;
    std::string to_table;
    std::string to_column;

    bool operator==(const ForeignKey&) const = default;
};

struct TableInfo {
    std::string name;
    std::optional<std::string> comment;
    std::vector<ColumnInfo> columns;

    const ColumnInfo* find_column(std::string_view name) const;

    bool operator==(const TableInfo&) const = default;
};

struct DatabaseCatalog {
    std::string db_id;
    std::vector<TableInfo> tables;
    std::vector<ForeignKey> foreign_keys;
    std::filesystem::path source_path;

    const TableInfo* find_table(std::string_view name) const;

    bool operator==(const DatabaseCatalog&) const = default;
};

// Reads schema structure from a SQLite file: user tables in declaration
// order, column affinities, primary-key flags, foreign keys. Views and
// sqlite_* system tables are skipped.
DatabaseCatalog introspect_database(const std::filesystem::path& db_path);

// Merges a JSON sidecar of comments into the catalog. Keys are "table" or
// "table.column" (matched case-insensitively); unknown names produce warnings,
// existing comments are overwritten.
DatabaseCatalog load_metadata_sidecar(DatabaseCatalog catalog,
                                      const std::filesystem::path& sidecar_path,
                                      std::vector<std::string>* warnings = nullptr);

// The probe statement issued per column, exposed so callers and tests can see
// exactly what runs against the database.
std::string representative_value_probe_sql(const std::string& table, const std::string& column,
                                           std::size_t per_column_count);

// Fills representative_values for every column by probing the source
// database. Columns whose probe fails are left empty and reported in
// `warnings`.
DatabaseCatalog sample_representative_values(DatabaseCatalog catalog,
                                             std::size_t per_column_count,
                                             std::vector<std::string>* warnings = nullptr);

// Stable, pretty-printable JSON form used by golden tests and the CLI.
nlohmann::ordered_json catalog_to_json(const DatabaseCatalog& catalog);
DatabaseCatalog catalog_from_json(const nlohmann::json& doc);

// CREATE TABLE rendering of the catalog, used by augmentation prompts.
std::string render_ddl(const DatabaseCatalog& catalog);

}  // namespace nl2sql
