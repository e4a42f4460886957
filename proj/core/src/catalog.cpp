#include "nl2sql/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "nl2sql/errors.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "nl2sql/text_util.hpp"

namespace nl2sql {

namespace {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

bool icontains(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (haystack.size() < needle.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (iequals(haystack.substr(i, needle.size()), needle)) return true;
    }
    return false;
}

}  // namespace

std::string_view data_type_name(DataType t) {
    switch (t) {
        case DataType::Integer: return "integer";
        case DataType::Real: return "real";
        case DataType::Text: return "text";
        case DataType::Blob: return "blob";
        case DataType::Numeric: return "numeric";
        case DataType::Unknown: return "unknown";
    }
    return "unknown";
}

DataType data_type_from_name(std::string_view name) {
    if (name == "integer") return DataType::Integer;
    if (name == "real") return DataType::Real;
    if (name == "text") return DataType::Text;
    if (name == "blob") return DataType::Blob;
    if (name == "numeric") return DataType::Numeric;
    if (name == "unknown") return DataType::Unknown;
    throw DataError("unrecognized data type name: " + std::string(name));
}

DataType affinity_of_declared_type(std::string_view declared) {
    std::string t = trim(std::string(declared));
    if (t.empty()) return DataType::Unknown;
    if (icontains(t, "INT")) return DataType::Integer;
    if (icontains(t, "CHAR") || icontains(t, "CLOB") || icontains(t, "TEXT")) return DataType::Text;
    if (icontains(t, "BLOB")) return DataType::Blob;
    if (icontains(t, "REAL") || icontains(t, "FLOA") || icontains(t, "DOUB")) return DataType::Real;
    return DataType::Numeric;
}

const ColumnInfo* TableInfo::find_column(std::string_view name) const {
    for (const auto& c : columns) {
        if (iequals(c.name, name)) return &c;
    }
    return nullptr;
}

const TableInfo* DatabaseCatalog::find_table(std::string_view name) const {
    for (const auto& t : tables) {
        if (iequals(t.name, name)) return &t;
    }
    return nullptr;
}

DatabaseCatalog introspect_database(const std::filesystem::path& db_path) {
    SqliteDb db = SqliteDb::open_read_only(db_path);

    DatabaseCatalog catalog;
    catalog.db_id = db_path.stem().string();
    catalog.source_path = db_path;

    // Declaration order comes from sqlite_master rowid order.
    std::vector<std::string> table_names;
    {
        Statement stmt = db.prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' "
            "AND name NOT LIKE 'sqlite_%' ORDER BY rowid");
        while (stmt.step()) {
            table_names.push_back(*stmt.column(0).render_text());
        }
    }

    for (const auto& tname : table_names) {
        TableInfo table;
        table.name = tname;
        {
            Statement stmt =
                db.prepare("PRAGMA table_info(" + quote_identifier(tname) + ")");
            while (stmt.step()) {
                ColumnInfo col;
                col.ordinal = table.columns.size();
                col.name = *stmt.column(1).render_text();
                auto declared = stmt.column(2).render_text();
                col.data_type = affinity_of_declared_type(declared ? *declared : "");
                // pk column of table_info is 1-based position within the
                // primary key, 0 when not part of it.
                auto pk = stmt.column(5);
                col.is_primary_key = pk.kind == SqlValue::Kind::Integer && pk.integer > 0;
                table.columns.push_back(std::move(col));
            }
        }
        if (table.columns.empty()) continue;
        catalog.tables.push_back(std::move(table));

        Statement fks =
            db.prepare("PRAGMA foreign_key_list(" + quote_identifier(tname) + ")");
        while (fks.step()) {
            ForeignKey fk;
            fk.from_table = tname;
            fk.to_table = *fks.column(2).render_text();
            fk.from_column = *fks.column(3).render_text();
            // The "to" column is NULL when the reference targets the parent's
            // primary key implicitly; resolve it after all tables are known.
            auto to_col = fks.column(4).render_text();
            fk.to_column = to_col ? *to_col : "";
            catalog.foreign_keys.push_back(std::move(fk));
        }
    }

    // Resolve implicit primary-key references and drop FKs pointing at tables
    // that are not part of the catalog (views, missing parents).
    std::vector<ForeignKey> resolved;
    for (auto& fk : catalog.foreign_keys) {
        const TableInfo* parent = catalog.find_table(fk.to_table);
        if (parent == nullptr) continue;
        if (fk.to_column.empty()) {
            for (const auto& c : parent->columns) {
                if (c.is_primary_key) {
                    fk.to_column = c.name;
                    break;
                }
            }
        }
        if (fk.to_column.empty()) continue;
        resolved.push_back(fk);
    }
    catalog.foreign_keys = std::move(resolved);
    return catalog;
}

DatabaseCatalog load_metadata_sidecar(DatabaseCatalog catalog,
                                      const std::filesystem::path& sidecar_path,
                                      std::vector<std::string>* warnings) {
    std::ifstream in(sidecar_path);
    if (!in) {
        throw IoError("cannot open metadata sidecar: " + sidecar_path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid JSON in metadata sidecar " + sidecar_path.string() + ": " +
                          e.what());
    }
    if (!doc.is_object()) {
        throw FormatError("metadata sidecar must be a JSON object: " + sidecar_path.string());
    }

    auto warn = [&](const std::string& msg) {
        if (warnings != nullptr) warnings->push_back(msg);
    };

    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string()) {
            warn("sidecar value for '" + key + "' is not a string, skipped");
            continue;
        }
        std::string comment = value.get<std::string>();
        auto dot = key.find('.');
        if (dot == std::string::npos) {
            bool found = false;
            for (auto& t : catalog.tables) {
                if (iequals(t.name, key)) {
                    t.comment = comment;
                    found = true;
                    break;
                }
            }
            if (!found) warn("sidecar table '" + key + "' not in catalog");
        } else {
            std::string tname = key.substr(0, dot);
            std::string cname = key.substr(dot + 1);
            bool found = false;
            for (auto& t : catalog.tables) {
                if (!iequals(t.name, tname)) continue;
                for (auto& c : t.columns) {
                    if (iequals(c.name, cname)) {
                        c.comment = comment;
                        found = true;
                        break;
                    }
                }
                break;
            }
            if (!found) warn("sidecar column '" + key + "' not in catalog");
        }
    }
    return catalog;
}

std::string representative_value_probe_sql(const std::string& table, const std::string& column,
                                           std::size_t per_column_count) {
    std::string c = quote_identifier(column);
    std::string t = quote_identifier(table);
    return "SELECT DISTINCT " + c + " FROM " + t + " WHERE " + c + " IS NOT NULL LIMIT " +
           std::to_string(per_column_count);
}

DatabaseCatalog sample_representative_values(DatabaseCatalog catalog,
                                             std::size_t per_column_count,
                                             std::vector<std::string>* warnings) {
    if (per_column_count == 0) return catalog;
    SqliteDb db = SqliteDb::open_read_only(catalog.source_path);
    for (auto& table : catalog.tables) {
        for (auto& col : table.columns) {
            col.representative_values.clear();
            try {
                Statement stmt =
                    db.prepare(representative_value_probe_sql(table.name, col.name,
                                                              per_column_count));
                while (stmt.step()) {
                    auto text = stmt.column(0).render_text();
                    if (text) col.representative_values.push_back(*text);
                }
            } catch (const Error& e) {
                if (warnings != nullptr) {
                    warnings->push_back("value probe failed for " + table.name + "." + col.name +
                                        ": " + e.what());
                }
            }
        }
    }
    return catalog;
}

nlohmann::ordered_json catalog_to_json(const DatabaseCatalog& catalog) {
    nlohmann::ordered_json doc;
    doc["db_id"] = catalog.db_id;
    doc["source_path"] = catalog.source_path.string();
    doc["tables"] = nlohmann::ordered_json::array();
    for (const auto& t : catalog.tables) {
        nlohmann::ordered_json jt;
        jt["name"] = t.name;
        if (t.comment) jt["comment"] = *t.comment;
        jt["columns"] = nlohmann::ordered_json::array();
        for (const auto& c : t.columns) {
            nlohmann::ordered_json jc;
            jc["name"] = c.name;
            jc["data_type"] = std::string(data_type_name(c.data_type));
            if (c.comment) jc["comment"] = *c.comment;
            jc["primary_key"] = c.is_primary_key;
            jc["representative_values"] = c.representative_values;
            jt["columns"].push_back(std::move(jc));
        }
        doc["tables"].push_back(std::move(jt));
    }
    doc["foreign_keys"] = nlohmann::ordered_json::array();
    for (const auto& fk : catalog.foreign_keys) {
        nlohmann::ordered_json jf;
        jf["from_table"] = fk.from_table;
        jf["from_column"] = fk.from_column;
        jf["to_table"] = fk.to_table;
        jf["to_column"] = fk.to_column;
        doc["foreign_keys"].push_back(std::move(jf));
    }
    return doc;
}

DatabaseCatalog catalog_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw FormatError("catalog document must be a JSON object");
    DatabaseCatalog catalog;
    try {
        catalog.db_id = doc.at("db_id").get<std::string>();
        if (doc.contains("source_path")) {
            catalog.source_path = doc.at("source_path").get<std::string>();
        }
        for (const auto& jt : doc.at("tables")) {
            TableInfo t;
            t.name = jt.at("name").get<std::string>();
            if (jt.contains("comment")) t.comment = jt.at("comment").get<std::string>();
            std::size_t ord = 0;
            for (const auto& jc : jt.at("columns")) {
                ColumnInfo c;
                c.ordinal = ord++;
                c.name = jc.at("name").get<std::string>();
                c.data_type = data_type_from_name(jc.at("data_type").get<std::string>());
                if (jc.contains("comment")) c.comment = jc.at("comment").get<std::string>();
                c.is_primary_key = jc.value("primary_key", false);
                if (jc.contains("representative_values")) {
                    c.representative_values =
                        jc.at("representative_values").get<std::vector<std::string>>();
                }
                t.columns.push_back(std::move(c));
            }
            catalog.tables.push_back(std::move(t));
        }
        if (doc.contains("foreign_keys")) {
            for (const auto& jf : doc.at("foreign_keys")) {
                ForeignKey fk;
                fk.from_table = jf.at("from_table").get<std::string>();
                fk.from_column = jf.at("from_column").get<std::string>();
                fk.to_table = jf.at("to_table").get<std::string>();
                fk.to_column = jf.at("to_column").get<std::string>();
                catalog.foreign_keys.push_back(std::move(fk));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed catalog document: ") + e.what());
    }
    return catalog;
}

std::string render_ddl(const DatabaseCatalog& catalog) {
    std::ostringstream out;
    bool first_table = true;
    for (const auto& t : catalog.tables) {
        if (!first_table) out << "\n\n";
        first_table = false;

        struct Line {
            std::string body;
            std::string comment;
        };
        std::vector<Line> lines;
        std::vector<std::string> pk_cols;
        for (const auto& c : t.columns) {
            Line line;
            line.body = quote_identifier(c.name);
            if (c.data_type != DataType::Unknown) {
                std::string type_name(data_type_name(c.data_type));
                std::transform(type_name.begin(), type_name.end(), type_name.begin(),
                               [](unsigned char ch) { return std::toupper(ch); });
                line.body += " " + type_name;
            }
            if (c.is_primary_key) pk_cols.push_back(c.name);
            if (c.comment) line.comment = *c.comment;
            lines.push_back(std::move(line));
        }
        if (!pk_cols.empty()) {
            std::string body = "PRIMARY KEY (";
            for (std::size_t i = 0; i < pk_cols.size(); ++i) {
                if (i > 0) body += ", ";
                body += quote_identifier(pk_cols[i]);
            }
            body += ")";
            lines.push_back({std::move(body), ""});
        }
        for (const auto& fk : catalog.foreign_keys) {
            if (fk.from_table != t.name) continue;
            std::string body = "FOREIGN KEY (" + quote_identifier(fk.from_column) +
                               ") REFERENCES " + quote_identifier(fk.to_table) + "(" +
                               quote_identifier(fk.to_column) + ")";
            lines.push_back({std::move(body), ""});
        }

        out << "CREATE TABLE " << quote_identifier(t.name) << " (\n";
        for (std::size_t i = 0; i < lines.size(); ++i) {
            out << "    " << lines[i].body;
            if (i + 1 < lines.size()) out << ",";
            if (!lines[i].comment.empty()) out << " -- " << lines[i].comment;
            out << "\n";
        }
        out << ");";
    }
    return out.str();
}

}  // namespace nl2sql
