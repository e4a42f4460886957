#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "nl2sql/catalog.hpp"
#include "nl2sql/value_index.hpp"

namespace nl2sql {

// Per-database context loaded on demand. `index` is absent when the database
// holds no indexable values.
struct DbContext {
    DatabaseCatalog catalog;
    std::optional<ValueIndex> index;
};

// Resolves db_id -> SQLite file under a root directory and caches the
// introspected catalog (with sampled values and sidecar comments) plus the
// value index. Layouts supported: <root>/<db_id>.sqlite and
// <root>/<db_id>/<db_id>.sqlite.
class CatalogStore {
public:
    explicit CatalogStore(std::filesystem::path root, std::size_t representative_values = 2,
                          IndexConfig index_config = {});

    // Throws IoError when no database file exists for db_id.
    std::filesystem::path db_path(const std::string& db_id) const;

    const DbContext& get(const std::string& db_id);

private:
    std::filesystem::path root_;
    std::size_t representative_values_;
    IndexConfig index_config_;
    std::map<std::string, std::unique_ptr<DbContext>> cache_;
};

}  // namespace nl2sql
