#include "nl2sql/store.hpp"

#include "nl2sql/errors.hpp"

namespace nl2sql {

namespace {

const char* kExtensions[] = {".sqlite", ".db", ".sqlite3"};

}  // namespace

CatalogStore::CatalogStore(std::filesystem::path root, std::size_t representative_values,
                           IndexConfig index_config)
    : root_(std::move(root)),
      representative_values_(representative_values),
      index_config_(index_config) {}

std::filesystem::path CatalogStore::db_path(const std::string& db_id) const {
    for (const char* ext : kExtensions) {
        auto flat = root_ / (db_id + ext);
        if (std::filesystem::exists(flat)) return flat;
        auto nested = root_ / db_id / (db_id + ext);
        if (std::filesystem::exists(nested)) return nested;
    }
    throw IoError("no database file for db_id '" + db_id + "' under " + root_.string());
}

const DbContext& CatalogStore::get(const std::string& db_id) {
    auto it = cache_.find(db_id);
    if (it != cache_.end()) return *it->second;

    auto ctx = std::make_unique<DbContext>();
    auto path = db_path(db_id);
    ctx->catalog = introspect_database(path);
    ctx->catalog.db_id = db_id;
    auto sidecar = path.parent_path() / (db_id + ".metadata.json");
    if (std::filesystem::exists(sidecar)) {
        ctx->catalog = load_metadata_sidecar(std::move(ctx->catalog), sidecar);
    }
    ctx->catalog = sample_representative_values(std::move(ctx->catalog), representative_values_);
    try {
        ctx->index = build_index(ctx->catalog, index_config_);
    } catch (const EmptyIndexError&) {
        ctx->index.reset();
    }
    auto [pos, _] = cache_.emplace(db_id, std::move(ctx));
    return *pos->second;
}

}  // namespace nl2sql
