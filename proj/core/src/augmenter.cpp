#include "nl2sql/augmenter.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nl2sql/errors.hpp"
#include "nl2sql/eval_harness.hpp"
#include "nl2sql/text_util.hpp"

namespace nl2sql {
namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& known_slots() {
    static const std::vector<std::string> slots = {"TABLE", "COLUMN", "COLUMN:numeric", "VALUE"};
    return slots;
}

// Counts {SLOT} occurrences per slot name. Unknown slot names are an error so
// that typos surface at load time rather than as literal braces in output.
std::map<std::string, int> parse_slots(const std::string& text, const std::string& where) {
    std::map<std::string, int> counts;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string::npos) {
        auto close = text.find('}', pos + 1);
        if (close == std::string::npos) {
            throw FormatError("unterminated slot in " + where);
        }
        std::string name = text.substr(pos + 1, close - pos - 1);
        const auto& slots = known_slots();
        if (std::find(slots.begin(), slots.end(), name) == slots.end()) {
            throw FormatError("unknown slot {" + name + "} in " + where);
        }
        ++counts[name];
        pos = close + 1;
    }
    return counts;
}

void validate_template(const SqlTemplate& tpl) {
    if (tpl.template_id.empty()) {
        throw FormatError("template with empty template_id");
    }
    if (tpl.question_templates.empty()) {
        throw FormatError("template " + tpl.template_id + " has no question templates");
    }
    auto sql_slots = parse_slots(tpl.sql_template, "template " + tpl.template_id + " SQL");
    for (const auto& qt : tpl.question_templates) {
        auto q_slots = parse_slots(qt, "template " + tpl.template_id + " question");
        for (const auto& [name, count] : q_slots) {
            auto it = sql_slots.find(name);
            if (it == sql_slots.end() || it->second < count) {
                throw FormatError("template " + tpl.template_id + " question uses slot {" + name +
                                  "} more often than its SQL");
            }
        }
    }
}

std::string replace_all_slots(std::string text, const std::string& slot,
                              const std::string& replacement) {
    const std::string needle = "{" + slot + "}";
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), replacement);
        pos += replacement.size();
    }
    return text;
}

std::string single_line(std::string text) {
    for (char& c : text) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    return trim(text);
}

// First non-empty line of a completion, trimmed.
std::string first_line(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (!t.empty()) return t;
    }
    return "";
}

bool looks_numeric(const std::string& text) {
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
    std::size_t digits = 0;
    bool seen_dot = false;
    for (; i < text.size(); ++i) {
        if (text[i] >= '0' && text[i] <= '9') {
            ++digits;
        } else if (text[i] == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            return false;
        }
    }
    return digits > 0;
}

// Deterministic index pick; std::uniform_int_distribution is not portable
// across standard library implementations.
std::size_t pick(std::mt19937_64& gen, std::size_t n) { return static_cast<std::size_t>(gen() % n); }

struct SlotNeeds {
    bool table = false;
    bool column = false;
    bool numeric_column = false;
    bool value = false;
};

enum class ValueSource { None, Column, NumericColumn };

struct TableCandidates {
    std::size_t table_index = 0;
    std::vector<std::size_t> columns;
    std::vector<std::size_t> numeric_columns;
};

bool is_numeric_type(DataType t) { return t == DataType::Integer || t == DataType::Real; }

}  // namespace

std::string_view direction_name(AugmentDirection d) {
    return d == AugmentDirection::Q2S ? "q2s" : "s2q";
}

TemplateStore load_template_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open template store: " + path.string());
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw FormatError("template store " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("templates") || !doc["templates"].is_array()) {
        throw FormatError("template store " + path.string() + ": missing templates array");
    }
    TemplateStore store;
    std::set<std::string> seen_ids;
    for (const auto& entry : doc["templates"]) {
        SqlTemplate tpl;
        tpl.template_id = entry.value("template_id", "");
        tpl.sql_template = entry.value("sql_template", "");
        if (entry.contains("question_templates")) {
            for (const auto& qt : entry["question_templates"]) {
                tpl.question_templates.push_back(qt.get<std::string>());
            }
        }
        validate_template(tpl);
        if (!seen_ids.insert(tpl.template_id).second) {
            throw FormatError("duplicate template_id " + tpl.template_id);
        }
        store.templates.push_back(std::move(tpl));
    }
    if (doc.contains("refine_examples")) {
        for (const auto& entry : doc["refine_examples"]) {
            RefineExample ex;
            ex.templated_question = entry.value("templated_question", "");
            ex.templated_sql = entry.value("templated_sql", "");
            ex.refined_question = entry.value("refined_question", "");
            if (ex.templated_question.empty() || ex.templated_sql.empty() ||
                ex.refined_question.empty()) {
                throw FormatError("refine example with empty field in " + path.string());
            }
            store.refine_examples.push_back(std::move(ex));
        }
    }
    return store;
}

void save_template_store(const TemplateStore& store, const std::filesystem::path& path) {
    ordered_json doc;
    doc["format_version"] = 1;
    doc["templates"] = ordered_json::array();
    for (const auto& tpl : store.templates) {
        ordered_json entry;
        entry["template_id"] = tpl.template_id;
        entry["sql_template"] = tpl.sql_template;
        entry["question_templates"] = tpl.question_templates;
        doc["templates"].push_back(std::move(entry));
    }
    doc["refine_examples"] = ordered_json::array();
    for (const auto& ex : store.refine_examples) {
        ordered_json entry;
        entry["templated_question"] = ex.templated_question;
        entry["templated_sql"] = ex.templated_sql;
        entry["refined_question"] = ex.refined_question;
        doc["refine_examples"].push_back(std::move(entry));
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write template store: " + path.string());
    }
    out << doc.dump(2) << "\n";
}

std::vector<std::string> lint_templates(const std::vector<SqlTemplate>& templates) {
    static const std::vector<std::string> superlatives = {"lowest", "highest", "smallest",
                                                          "largest", "minimum", "maximum"};
    std::vector<std::string> warnings;
    for (const auto& tpl : templates) {
        std::string sql = to_lower(tpl.sql_template);
        bool counting = sql.find("count") != std::string::npos &&
                        sql.find("group by") != std::string::npos;
        if (!counting) continue;
        for (const auto& qt : tpl.question_templates) {
            std::string q = to_lower(qt);
            for (const auto& word : superlatives) {
                if (q.find(word) != std::string::npos) {
                    warnings.push_back("template " + tpl.template_id + ": question wording '" +
                                       word + "' suggests a plain extremum but the SQL ranks by " +
                                       "COUNT(*); kept as stored");
                    break;
                }
            }
        }
    }
    return warnings;
}

std::vector<SeedPair> load_seeds_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open seeds file: " + path.string());
    }
    std::vector<SeedPair> seeds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ordered_json doc;
        try {
            doc = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        SeedPair seed;
        seed.question = doc.value("question", "");
        seed.sql = doc.value("sql", doc.value("query", ""));
        seed.source = doc.value("source", "human");
        if (seed.question.empty() || seed.sql.empty()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": seed needs question and sql");
        }
        seeds.push_back(std::move(seed));
    }
    return seeds;
}

void save_seeds_jsonl(const std::vector<SeedPair>& seeds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write seeds file: " + path.string());
    }
    for (const auto& seed : seeds) {
        ordered_json doc;
        doc["question"] = seed.question;
        doc["sql"] = seed.sql;
        doc["source"] = seed.source;
        out << doc.dump() << "\n";
    }
}

std::string build_q2s_question_prompt(const std::vector<SeedPair>& seeds,
                                      std::uint64_t shuffle_seed) {
    if (seeds.empty()) {
        throw DataError("question synthesis needs at least one seed pair");
    }
    std::vector<std::size_t> order(seeds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 gen(shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[pick(gen, i)]);
    }
    std::string prompt;
    for (std::size_t i = 0; i < order.size(); ++i) {
        prompt += "[QUESTION " + std::to_string(i + 1) + "]\n";
        prompt += single_line(seeds[order[i]].question) + "\n";
    }
    prompt += "[NEW QUESTION]\n";
    return prompt;
}

std::string build_q2s_sql_prompt(const std::string& new_question,
                                 const std::vector<SeedPair>& seeds, const std::string& db_ddl) {
    if (seeds.empty()) {
        throw DataError("SQL synthesis needs at least one seed pair");
    }
    std::string prompt = db_ddl;
    if (!prompt.empty() && prompt.back() != '\n') prompt += "\n";
    prompt += "\n";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        prompt += "[QUESTION " + std::to_string(i + 1) + "]\n";
        prompt += single_line(seeds[i].question) + "\n";
        prompt += "[SQL " + std::to_string(i + 1) + "]\n";
        prompt += single_line(seeds[i].sql) + "\n";
    }
    prompt += "[NEW QUESTION]\n";
    prompt += single_line(new_question) + "\n";
    prompt += "[NEW SQL]\n";
    return prompt;
}

std::vector<TemplatedPair> fill_templates(const std::vector<SqlTemplate>& templates,
                                          const DatabaseCatalog& catalog, std::uint64_t rng_seed,
                                          std::size_t count, std::vector<std::string>* warnings) {
    struct Satisfiable {
        std::size_t template_index = 0;
        SlotNeeds needs;
        ValueSource value_source = ValueSource::None;
        std::vector<TableCandidates> tables;
    };

    std::vector<Satisfiable> usable;
    for (std::size_t t = 0; t < templates.size(); ++t) {
        const auto& tpl = templates[t];
        std::map<std::string, int> slots;
        try {
            slots = parse_slots(tpl.sql_template, "template " + tpl.template_id);
            for (const auto& qt : tpl.question_templates) {
                for (const auto& [name, n] : parse_slots(qt, "template " + tpl.template_id)) {
                    slots[name] = std::max(slots[name], n);
                }
            }
        } catch (const FormatError& e) {
            if (warnings) warnings->push_back(e.what());
            continue;
        }
        Satisfiable sat;
        sat.template_index = t;
        sat.needs.table = slots.count("TABLE") > 0;
        sat.needs.column = slots.count("COLUMN") > 0;
        sat.needs.numeric_column = slots.count("COLUMN:numeric") > 0;
        sat.needs.value = slots.count("VALUE") > 0;
        if (sat.needs.value) {
            if (sat.needs.column) {
                sat.value_source = ValueSource::Column;
            } else if (sat.needs.numeric_column) {
                sat.value_source = ValueSource::NumericColumn;
            } else {
                if (warnings) {
                    warnings->push_back("template " + tpl.template_id +
                                        ": {VALUE} needs a column slot to bind to; skipped");
                }
                continue;
            }
        }
        for (std::size_t ti = 0; ti < catalog.tables.size(); ++ti) {
            const auto& table = catalog.tables[ti];
            TableCandidates cand;
            cand.table_index = ti;
            for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
                const auto& col = table.columns[ci];
                bool needs_values =
                    sat.value_source == ValueSource::Column && sat.needs.value;
                if (!needs_values || !col.representative_values.empty()) {
                    cand.columns.push_back(ci);
                }
                if (is_numeric_type(col.data_type)) {
                    bool numeric_needs_values =
                        sat.value_source == ValueSource::NumericColumn && sat.needs.value;
                    if (!numeric_needs_values || !col.representative_values.empty()) {
                        cand.numeric_columns.push_back(ci);
                    }
                }
            }
            if (sat.needs.column && cand.columns.empty()) continue;
            if (sat.needs.numeric_column && cand.numeric_columns.empty()) continue;
            sat.tables.push_back(std::move(cand));
        }
        if ((sat.needs.table || sat.needs.column || sat.needs.numeric_column) &&
            sat.tables.empty()) {
            if (warnings) {
                warnings->push_back("template " + tpl.template_id +
                                    ": no table in " + catalog.db_id +
                                    " satisfies its slots; skipped");
            }
            continue;
        }
        usable.push_back(std::move(sat));
    }

    std::vector<TemplatedPair> out;
    if (usable.empty() || count == 0) return out;

    std::mt19937_64 gen(rng_seed);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& sat = usable[pick(gen, usable.size())];
        const auto& tpl = templates[sat.template_index];

        std::string table_name;
        std::string column_name;
        std::string numeric_name;
        std::string value_text;
        DataType value_type = DataType::Text;
        if (!sat.tables.empty()) {
            const auto& cand = sat.tables[pick(gen, sat.tables.size())];
            const auto& table = catalog.tables[cand.table_index];
            table_name = table.name;
            if (sat.needs.column) {
                const auto& col = table.columns[cand.columns[pick(gen, cand.columns.size())]];
                column_name = col.name;
                if (sat.value_source == ValueSource::Column) {
                    value_type = col.data_type;
                    value_text =
                        col.representative_values[pick(gen, col.representative_values.size())];
                }
            }
            if (sat.needs.numeric_column) {
                const auto& col =
                    table.columns[cand.numeric_columns[pick(gen, cand.numeric_columns.size())]];
                numeric_name = col.name;
                if (sat.value_source == ValueSource::NumericColumn) {
                    value_type = col.data_type;
                    value_text =
                        col.representative_values[pick(gen, col.representative_values.size())];
                }
            }
        }

        const std::string& question_template =
            tpl.question_templates[pick(gen, tpl.question_templates.size())];

        std::string question = question_template;
        question = replace_all_slots(question, "TABLE", table_name);
        question = replace_all_slots(question, "COLUMN", column_name);
        question = replace_all_slots(question, "COLUMN:numeric", numeric_name);
        question = replace_all_slots(question, "VALUE", value_text);

        std::string sql_value = value_text;
        if (!(is_numeric_type(value_type) && looks_numeric(value_text))) {
            sql_value = quote_sql_string(value_text);
        }
        std::string sql = tpl.sql_template;
        sql = replace_all_slots(sql, "TABLE", quote_identifier(table_name));
        sql = replace_all_slots(sql, "COLUMN", quote_identifier(column_name));
        sql = replace_all_slots(sql, "COLUMN:numeric", quote_identifier(numeric_name));
        sql = replace_all_slots(sql, "VALUE", sql_value);

        TemplatedPair pair;
        pair.question = question;
        pair.sql = sql;
        pair.template_id = tpl.template_id;
        out.push_back(std::move(pair));
    }
    return out;
}

std::string build_refine_prompt(const TemplatedPair& pair,
                                const std::vector<RefineExample>& examples) {
    if (examples.empty()) {
        throw DataError("question refinement needs at least one example triplet");
    }
    std::string prompt;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const std::string n = std::to_string(i + 1);
        prompt += "[TEMPLATED QUESTION " + n + "]\n";
        prompt += single_line(examples[i].templated_question) + "\n";
        prompt += "[TEMPLATED SQL " + n + "]\n";
        prompt += single_line(examples[i].templated_sql) + "\n";
        prompt += "[REFINED QUESTION " + n + "]\n";
        prompt += single_line(examples[i].refined_question) + "\n";
    }
    prompt += "[NEW TEMPLATED QUESTION]\n";
    prompt += single_line(pair.question) + "\n";
    prompt += "[NEW TEMPLATED SQL]\n";
    prompt += single_line(pair.sql) + "\n";
    prompt += "[NEW REFINED QUESTION]\n";
    return prompt;
}

AugmentedPair validate_pair(AugmentedPair pair, const SqliteDb& db, double timeout_s,
                            std::string* reason) {
    try {
        execute_sql(db, pair.sql, timeout_s);
        pair.validated = true;
    } catch (const Error& e) {
        pair.validated = false;
        if (reason) *reason = e.what();
    }
    return pair;
}

AugmentResult run_augmentation(const AugmentConfig& config, LlmGateway& gateway,
                               const DatabaseCatalog& catalog) {
    AugmentResult result;
    if (config.q2s_count == 0 && config.s2q_count == 0) return result;
    if (catalog.source_path.empty()) {
        throw DataError("catalog for " + catalog.db_id + " has no source database path");
    }
    SqliteDb db = SqliteDb::open_read_only(catalog.source_path);
    std::set<std::pair<std::string, std::string>> seen;

    auto try_emit = [&](AugmentedPair pair, std::size_t& produced, std::size_t& inval,
                        std::size_t& dups) {
        if (!pair.validated) {
            ++inval;
            return;
        }
        if (!seen.insert({pair.question, pair.sql}).second) {
            ++dups;
            return;
        }
        result.pairs.push_back(std::move(pair));
        ++produced;
    };

    auto request_line = [&](const std::string& prompt) {
        CompletionRequest req;
        req.prompt = prompt;
        req.max_tokens = config.completion_max_tokens;
        req.temperature = config.temperature;
        CompletionResponse resp = gateway.complete(req);
        if (resp.candidates.empty()) return std::string();
        return first_line(resp.candidates.front());
    };

    if (config.q2s_count > 0) {
        const std::string ddl = render_ddl(catalog);
        std::size_t produced = 0, invalid = 0, dups = 0, empty = 0;
        const std::size_t attempts =
            std::max<std::size_t>(config.q2s_count, config.q2s_count * config.max_attempts_factor);
        for (std::size_t i = 0; i < attempts && produced < config.q2s_count; ++i) {
            std::string question =
                request_line(build_q2s_question_prompt(config.seeds, config.rng_seed + i));
            if (question.empty()) {
                ++empty;
                continue;
            }
            std::string sql = request_line(build_q2s_sql_prompt(question, config.seeds, ddl));
            if (sql.empty()) {
                ++empty;
                continue;
            }
            AugmentedPair pair;
            pair.question = question;
            pair.sql = sql;
            pair.direction = AugmentDirection::Q2S;
            try_emit(validate_pair(std::move(pair), db, config.validation_timeout_s), produced,
                     invalid, dups);
        }
        result.q2s_shortfall = config.q2s_count - produced;
        if (invalid + dups + empty > 0) {
            result.warnings.push_back("q2s: dropped " + std::to_string(invalid) +
                                      " failing validation, " + std::to_string(dups) +
                                      " duplicates, " + std::to_string(empty) +
                                      " empty completions");
        }
        if (result.q2s_shortfall > 0) {
            result.warnings.push_back("q2s: produced " + std::to_string(produced) + " of " +
                                      std::to_string(config.q2s_count) + " requested pairs");
        }
    }

    if (config.s2q_count > 0) {
        if (config.refine_examples.empty()) {
            throw DataError("question refinement needs at least one example triplet");
        }
        std::size_t produced = 0, invalid = 0, dups = 0, empty = 0;
        const std::size_t attempts =
            std::max<std::size_t>(config.s2q_count, config.s2q_count * config.max_attempts_factor);
        std::vector<TemplatedPair> filled =
            fill_templates(config.templates, catalog, config.rng_seed ^ 0x9e3779b97f4a7c15ULL,
                           attempts, &result.warnings);
        if (filled.empty()) {
            result.warnings.push_back("s2q: no template could be filled against " +
                                      catalog.db_id);
        }
        for (const auto& tp : filled) {
            if (produced >= config.s2q_count) break;
            std::string refined = request_line(build_refine_prompt(tp, config.refine_examples));
            if (refined.empty()) {
                ++empty;
                continue;
            }
            AugmentedPair pair;
            pair.question = refined;
            pair.sql = tp.sql;
            pair.direction = AugmentDirection::S2Q;
            try_emit(validate_pair(std::move(pair), db, config.validation_timeout_s), produced,
                     invalid, dups);
        }
        result.s2q_shortfall = config.s2q_count - produced;
        if (invalid + dups + empty > 0) {
            result.warnings.push_back("s2q: dropped " + std::to_string(invalid) +
                                      " failing validation, " + std::to_string(dups) +
                                      " duplicates, " + std::to_string(empty) +
                                      " empty completions");
        }
        if (result.s2q_shortfall > 0) {
            result.warnings.push_back("s2q: produced " + std::to_string(produced) + " of " +
                                      std::to_string(config.s2q_count) + " requested pairs");
        }
    }
    return result;
}

std::vector<Text2SqlSample> augmented_to_samples(const AugmentResult& result,
                                                 const std::string& db_id) {
    std::vector<Text2SqlSample> samples;
    samples.reserve(result.pairs.size());
    std::size_t q2s_idx = 0;
    std::size_t s2q_idx = 0;
    for (const auto& pair : result.pairs) {
        std::size_t& idx = pair.direction == AugmentDirection::Q2S ? q2s_idx : s2q_idx;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04zu", idx++);
        Text2SqlSample sample;
        sample.sample_id = "aug-" + std::string(direction_name(pair.direction)) + "-" + buf;
        sample.db_id = db_id;
        sample.question = pair.question;
        sample.query = pair.sql;
        samples.push_back(std::move(sample));
    }
    return samples;
}

}  // namespace nl2sql
