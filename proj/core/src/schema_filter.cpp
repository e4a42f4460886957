#include "nl2sql/schema_filter.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>

#include <httplib.h>

#include "nl2sql/errors.hpp"
#include "nl2sql/text_util.hpp"
#include "nl2sql/value_index.hpp"

namespace nl2sql {

namespace {

std::string lower(std::string_view s) { return to_lower(std::string(s)); }

double lexical_item_score(const std::vector<std::string>& question_tokens,
                          const std::string& question, const std::string& name,
                          const std::optional<std::string>& comment) {
    std::string descriptor = name;
    if (comment) descriptor += " " + *comment;
    double overlap = token_jaccard(question_tokens, tokenize(descriptor));
    double degree = match_degree(question, name);
    return 0.5 * overlap + 0.5 * degree;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// scheme://host[:port]/path → (scheme://host[:port], /path)
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    std::size_t path_start = scheme_end == std::string::npos
                                 ? endpoint.find('/')
                                 : endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

const std::set<std::string>& sql_keywords() {
    static const std::set<std::string> kw = {
        "select", "from",     "where",   "group",    "by",       "order",  "having",
        "limit",  "offset",   "join",    "inner",    "left",     "right",  "full",
        "outer",  "cross",    "natural", "on",       "as",       "and",    "or",
        "not",    "in",       "exists",  "between",  "like",     "glob",   "is",
        "null",   "distinct", "all",     "union",    "intersect","except", "case",
        "when",   "then",     "else",    "end",      "cast",     "asc",    "desc",
        "with",   "recursive","values",  "count",    "sum",      "avg",    "min",
        "max",    "abs",      "length",  "round",    "coalesce", "ifnull", "nullif",
        "substr", "replace",  "upper",   "lower",    "trim",     "instr",  "strftime",
        "date",   "time",     "datetime","julianday","total",    "group_concat",
        "collate","escape",   "using",   "if",       "iif",      "true",   "false"};
    return kw;
}

struct SqlToken {
    enum class Kind { Identifier, Quoted, Number, String, Punct };
    Kind kind = Kind::Punct;
    std::string text;
};

std::vector<SqlToken> lex_sql(const std::string& sql) {
    std::vector<SqlToken> tokens;
    std::size_t i = 0;
    auto is_word = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    };
    while (i < sql.size()) {
        char c = sql[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '\'') {
            std::string lit;
            ++i;
            while (i < sql.size()) {
                if (sql[i] == '\'' && i + 1 < sql.size() && sql[i + 1] == '\'') {
                    lit += '\'';
                    i += 2;
                } else if (sql[i] == '\'') {
                    ++i;
                    break;
                } else {
                    lit += sql[i++];
                }
            }
            tokens.push_back({SqlToken::Kind::String, std::move(lit)});
            continue;
        }
        if (c == '"' || c == '`' || c == '[') {
            char close = c == '[' ? ']' : c;
            std::string name;
            ++i;
            while (i < sql.size() && sql[i] != close) name += sql[i++];
            if (i < sql.size()) ++i;
            tokens.push_back({SqlToken::Kind::Quoted, std::move(name)});
            continue;
        }
        if (is_word(c)) {
            std::string word;
            while (i < sql.size() && is_word(sql[i])) word += sql[i++];
            bool numeric = std::isdigit(static_cast<unsigned char>(word[0])) != 0;
            tokens.push_back({numeric ? SqlToken::Kind::Number : SqlToken::Kind::Identifier,
                              std::move(word)});
            continue;
        }
        tokens.push_back({SqlToken::Kind::Punct, std::string(1, c)});
        ++i;
    }
    return tokens;
}

bool is_keyword(const SqlToken& tok) {
    return tok.kind == SqlToken::Kind::Identifier && sql_keywords().count(lower(tok.text)) > 0;
}

bool is_name(const SqlToken& tok) {
    return (tok.kind == SqlToken::Kind::Identifier && !is_keyword(tok)) ||
           tok.kind == SqlToken::Kind::Quoted;
}

}  // namespace

std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Scored: return "scored";
        case Provenance::Gold: return "gold";
        case Provenance::Padding: return "padding";
    }
    return "scored";
}

SchemaRelevance LexicalScorer::score(const std::string& question,
                                     const DatabaseCatalog& catalog) {
    SchemaRelevance rel;
    rel.scorer_id = id();
    auto question_tokens = tokenize(question);
    for (const auto& t : catalog.tables) {
        rel.table_scores[t.name] =
            lexical_item_score(question_tokens, question, t.name, t.comment);
        for (const auto& c : t.columns) {
            rel.column_scores[{t.name, c.name}] =
                lexical_item_score(question_tokens, question, c.name, c.comment);
        }
    }
    return rel;
}

nlohmann::ordered_json RemoteScorer::request_body(const std::string& question,
                                                  const DatabaseCatalog& catalog) {
    nlohmann::ordered_json body;
    body["question"] = question;
    body["tables"] = nlohmann::ordered_json::array();
    for (const auto& t : catalog.tables) {
        nlohmann::ordered_json jt;
        jt["name"] = t.name;
        jt["comment"] = t.comment.value_or("");
        jt["columns"] = nlohmann::ordered_json::array();
        for (const auto& c : t.columns) {
            nlohmann::ordered_json jc;
            jc["name"] = c.name;
            jc["comment"] = c.comment.value_or("");
            jt["columns"].push_back(std::move(jc));
        }
        body["tables"].push_back(std::move(jt));
    }
    return body;
}

SchemaRelevance RemoteScorer::parse_response(const nlohmann::json& body,
                                             const DatabaseCatalog& catalog,
                                             const std::string& scorer_id) {
    SchemaRelevance rel;
    rel.scorer_id = scorer_id;
    try {
        const auto& table_scores = body.at("table_scores");
        const auto& column_scores = body.at("column_scores");
        if (table_scores.size() != catalog.tables.size() ||
            column_scores.size() != catalog.tables.size()) {
            throw ScorerError("remote scorer returned wrong table count");
        }
        for (std::size_t i = 0; i < catalog.tables.size(); ++i) {
            const auto& t = catalog.tables[i];
            double ts = table_scores.at(i).get<double>();
            if (!std::isfinite(ts)) throw ScorerError("remote scorer returned non-finite score");
            rel.table_scores[t.name] = std::clamp(ts, 0.0, 1.0);
            const auto& cols = column_scores.at(i);
            if (cols.size() != t.columns.size()) {
                throw ScorerError("remote scorer returned wrong column count for table " +
                                  t.name);
            }
            for (std::size_t j = 0; j < t.columns.size(); ++j) {
                double cs = cols.at(j).get<double>();
                if (!std::isfinite(cs)) {
                    throw ScorerError("remote scorer returned non-finite score");
                }
                rel.column_scores[{t.name, t.columns[j].name}] = std::clamp(cs, 0.0, 1.0);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ScorerError(std::string("malformed remote scorer response: ") + e.what());
    }
    return rel;
}

SchemaRelevance RemoteScorer::score(const std::string& question,
                                    const DatabaseCatalog& catalog) {
    auto [base, path] = split_endpoint(config_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    auto result = client.Post(path, request_body(question, catalog).dump(), "application/json");
    if (!result) {
        throw ScorerError("remote scorer unreachable at " + config_.endpoint + ": " +
                          httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw ScorerError("remote scorer returned HTTP " + std::to_string(result->status));
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
        throw ScorerError(std::string("remote scorer sent invalid JSON: ") + e.what());
    }
    return parse_response(body, catalog, id());
}

SchemaRelevance score_schema(const std::string& question, const DatabaseCatalog& catalog,
                             RelevanceScorer& scorer) {
    SchemaRelevance rel = scorer.score(question, catalog);
    for (const auto& t : catalog.tables) {
        if (rel.table_scores.find(t.name) == rel.table_scores.end()) {
            throw ScorerError("scorer left table unscored: " + t.name);
        }
        for (const auto& c : t.columns) {
            if (rel.column_scores.find({t.name, c.name}) == rel.column_scores.end()) {
                throw ScorerError("scorer left column unscored: " + t.name + "." + c.name);
            }
        }
    }
    return rel;
}

FilteredSchema filter_schema(const DatabaseCatalog& catalog, const SchemaRelevance& relevance,
                             const FilterConfig& config) {
    auto table_score = [&](const std::string& name) {
        auto it = relevance.table_scores.find(name);
        if (it == relevance.table_scores.end()) {
            throw ScorerError("relevance has no score for table " + name);
        }
        return it->second;
    };
    auto column_score = [&](const std::string& table, const std::string& column) {
        auto it = relevance.column_scores.find({table, column});
        if (it == relevance.column_scores.end()) {
            throw ScorerError("relevance has no score for column " + table + "." + column);
        }
        return it->second;
    };

    std::vector<std::size_t> table_order(catalog.tables.size());
    std::iota(table_order.begin(), table_order.end(), 0);
    std::stable_sort(table_order.begin(), table_order.end(), [&](std::size_t a, std::size_t b) {
        return table_score(catalog.tables[a].name) > table_score(catalog.tables[b].name);
    });
    if (table_order.size() > config.top_k1) table_order.resize(config.top_k1);

    FilteredSchema out;
    out.db_id = catalog.db_id;
    for (std::size_t ti : table_order) {
        const auto& table = catalog.tables[ti];
        std::vector<std::size_t> col_order(table.columns.size());
        std::iota(col_order.begin(), col_order.end(), 0);
        std::stable_sort(col_order.begin(), col_order.end(), [&](std::size_t a, std::size_t b) {
            return column_score(table.name, table.columns[a].name) >
                   column_score(table.name, table.columns[b].name);
        });

        std::size_t pk_count = 0;
        for (const auto& c : table.columns) {
            if (c.is_primary_key) ++pk_count;
        }
        if (pk_count > config.top_k2) out.pk_budget_exceeded = true;
        std::size_t non_pk_budget = config.top_k2 > pk_count ? config.top_k2 - pk_count : 0;

        FilteredTable ft;
        ft.name = table.name;
        std::size_t non_pk_taken = 0;
        for (std::size_t ci : col_order) {
            const auto& col = table.columns[ci];
            if (col.is_primary_key) {
                ft.columns.push_back({col.name, Provenance::Scored});
            } else if (non_pk_taken < non_pk_budget) {
                ft.columns.push_back({col.name, Provenance::Scored});
                ++non_pk_taken;
            }
        }
        out.kept.push_back(std::move(ft));
    }
    return out;
}

GoldSchemaRefs extract_gold_refs(const std::string& sql, const DatabaseCatalog& catalog) {
    auto tokens = lex_sql(sql);
    GoldSchemaRefs refs;

    // CTE names introduced by WITH are legal FROM targets outside the catalog.
    std::set<std::string> cte_names;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind == SqlToken::Kind::Identifier && lower(tokens[i].text) == "with") {
            std::size_t j = i + 1;
            if (j < tokens.size() && tokens[j].kind == SqlToken::Kind::Identifier &&
                lower(tokens[j].text) == "recursive") {
                ++j;
            }
            while (j + 1 < tokens.size() && is_name(tokens[j]) &&
                   tokens[j + 1].kind == SqlToken::Kind::Identifier &&
                   lower(tokens[j + 1].text) == "as") {
                cte_names.insert(lower(tokens[j].text));
                // Skip the parenthesized body.
                std::size_t k = j + 2;
                int depth = 0;
                for (; k < tokens.size(); ++k) {
                    if (tokens[k].kind != SqlToken::Kind::Punct) continue;
                    if (tokens[k].text == "(") ++depth;
                    if (tokens[k].text == ")" && --depth == 0) break;
                }
                j = k + 1;
                if (j < tokens.size() && tokens[j].kind == SqlToken::Kind::Punct &&
                    tokens[j].text == ",") {
                    ++j;
                } else {
                    break;
                }
            }
        }
    }

    std::map<std::string, std::string> alias_to_table;

    auto note_table = [&](const SqlToken& tok) -> const TableInfo* {
        if (cte_names.count(lower(tok.text)) > 0) return nullptr;
        const TableInfo* t = catalog.find_table(tok.text);
        if (t == nullptr) {
            throw DataError("gold SQL references unknown table: " + tok.text);
        }
        refs.tables.insert(t->name);
        refs.columns.try_emplace(t->name);
        return t;
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].kind != SqlToken::Kind::Identifier) continue;
        std::string kw = lower(tokens[i].text);
        if (kw != "from" && kw != "join") continue;

        std::size_t j = i + 1;
        while (j < tokens.size()) {
            if (tokens[j].kind == SqlToken::Kind::Punct && tokens[j].text == "(") break;
            if (!is_name(tokens[j])) break;
            const TableInfo* t = note_table(tokens[j]);
            std::string referenced = t != nullptr ? t->name : tokens[j].text;
            ++j;
            if (j < tokens.size() && tokens[j].kind == SqlToken::Kind::Identifier &&
                lower(tokens[j].text) == "as") {
                ++j;
            }
            if (j < tokens.size() && is_name(tokens[j])) {
                if (t != nullptr) alias_to_table[lower(tokens[j].text)] = t->name;
                ++j;
            } else if (t != nullptr) {
                alias_to_table[lower(t->name)] = t->name;
            }
            // FROM lists tables comma-separated; JOIN introduces one table.
            if (kw == "from" && j < tokens.size() && tokens[j].kind == SqlToken::Kind::Punct &&
                tokens[j].text == ",") {
                ++j;
                continue;
            }
            break;
        }
    }
    for (const auto& t : refs.tables) alias_to_table.emplace(lower(t), t);

    auto resolve_table = [&](const std::string& name) -> const TableInfo* {
        auto it = alias_to_table.find(lower(name));
        if (it == alias_to_table.end()) return nullptr;
        return catalog.find_table(it->second);
    };

    // Dotted references.
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
        if (!is_name(tokens[i])) continue;
        if (tokens[i + 1].kind != SqlToken::Kind::Punct || tokens[i + 1].text != ".") continue;
        if (!is_name(tokens[i + 2])) continue;
        const TableInfo* t = resolve_table(tokens[i].text);
        if (t == nullptr) continue;
        const ColumnInfo* c = t->find_column(tokens[i + 2].text);
        if (c != nullptr) refs.columns[t->name].insert(c->name);
    }

    // Bare identifiers: attribute to every referenced table holding a column
    // of that name.
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!is_name(tokens[i])) continue;
        bool dotted_left = i > 0 && tokens[i - 1].kind == SqlToken::Kind::Punct &&
                           tokens[i - 1].text == ".";
        bool dotted_right = i + 1 < tokens.size() &&
                            tokens[i + 1].kind == SqlToken::Kind::Punct &&
                            tokens[i + 1].text == ".";
        if (dotted_left || dotted_right) continue;
        if (alias_to_table.count(lower(tokens[i].text)) > 0) continue;
        for (const auto& tname : refs.tables) {
            const TableInfo* t = catalog.find_table(tname);
            const ColumnInfo* c = t != nullptr ? t->find_column(tokens[i].text) : nullptr;
            if (c != nullptr) refs.columns[tname].insert(c->name);
        }
    }
    return refs;
}

FilteredSchema pad_training_schema(const Text2SqlSample& sample, const DatabaseCatalog& catalog,
                                   const FilterConfig& config) {
    if (!sample.query) {
        throw DataError("training sample " + sample.sample_id + " has no gold SQL");
    }
    GoldSchemaRefs refs = extract_gold_refs(*sample.query, catalog);

    std::uint64_t seed = config.padding_seed.value_or(0);
    seed = fnv1a(sample.db_id, seed);
    seed = fnv1a(sample.question, fnv1a("\x1f", seed));
    seed = fnv1a(*sample.query, fnv1a("\x1f", seed));
    std::mt19937_64 rng(seed);

    FilteredSchema out;
    out.db_id = catalog.db_id;

    std::vector<const TableInfo*> unused;
    for (const auto& t : catalog.tables) {
        if (refs.tables.count(t.name) > 0) {
            out.kept.push_back({t.name, Provenance::Gold, {}});
        } else {
            unused.push_back(&t);
        }
    }
    std::size_t table_target = std::min(config.top_k1, catalog.tables.size());
    while (out.kept.size() < table_target && !unused.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, unused.size() - 1);
        std::size_t idx = pick(rng);
        out.kept.push_back({unused[idx]->name, Provenance::Padding, {}});
        unused.erase(unused.begin() + static_cast<std::ptrdiff_t>(idx));
    }

    for (auto& ft : out.kept) {
        const TableInfo* table = catalog.find_table(ft.name);
        const auto gold_it = refs.columns.find(ft.name);
        std::vector<const ColumnInfo*> unused_cols;
        for (const auto& c : table->columns) {
            bool gold = gold_it != refs.columns.end() && gold_it->second.count(c.name) > 0;
            if (gold) {
                ft.columns.push_back({c.name, Provenance::Gold});
            } else {
                unused_cols.push_back(&c);
            }
        }
        std::size_t col_target = std::min(config.top_k2, table->columns.size());
        while (ft.columns.size() < col_target && !unused_cols.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, unused_cols.size() - 1);
            std::size_t idx = pick(rng);
            ft.columns.push_back({unused_cols[idx]->name, Provenance::Padding});
            unused_cols.erase(unused_cols.begin() + static_cast<std::ptrdiff_t>(idx));
        }
    }
    return out;
}

}  // namespace nl2sql
