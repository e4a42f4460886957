#include "grammar.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace nl2sql::testing {
namespace {

[[noreturn]] void fail(const std::string& what, const std::string& where) {
    throw std::runtime_error("prompt grammar: " + what + " in: " + where);
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

// Splits on ` , ` outside parentheses.
std::vector<std::string> split_top_level(const std::string& text, const std::string& where) {
    std::vector<std::string> parts;
    std::string current;
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '(') ++depth;
        if (text[i] == ')') {
            --depth;
            if (depth < 0) fail("unbalanced parentheses", where);
        }
        if (depth == 0 && text.compare(i, 3, " , ") == 0) {
            parts.push_back(current);
            current.clear();
            i += 2;
            continue;
        }
        current += text[i];
    }
    if (depth != 0) fail("unbalanced parentheses", where);
    parts.push_back(current);
    return parts;
}

std::pair<std::string, std::string> split_qualified(const std::string& text,
                                                    const std::string& where) {
    auto dot = text.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= text.size()) {
        fail("expected table.column, got '" + text + "'", where);
    }
    return {text.substr(0, dot), text.substr(dot + 1)};
}

const std::set<std::string>& type_names() {
    static const std::set<std::string> names = {"integer", "real",    "text",
                                                "blob",    "numeric", "unknown"};
    return names;
}

ParsedColumn parse_column_entry(const std::string& entry, const std::string& table) {
    ParsedColumn column;
    std::string head = entry;
    std::string detail;
    auto open = entry.find(" ( ");
    if (open != std::string::npos) {
        if (entry.size() < 2 || entry.compare(entry.size() - 2, 2, " )") != 0) {
            fail("column details must close with ' )'", entry);
        }
        head = entry.substr(0, open);
        detail = entry.substr(open + 3, entry.size() - open - 3 - 2);
    }
    auto [qual_table, name] = split_qualified(head, entry);
    if (qual_table != table) {
        fail("column qualified with '" + qual_table + "' inside table '" + table + "'", entry);
    }
    column.table = qual_table;
    column.name = name;
    if (open == std::string::npos) return column;

    // Details come in the fixed order: type, comment, values, primary key.
    std::vector<std::string> parts;
    {
        std::string current;
        for (std::size_t i = 0; i < detail.size(); ++i) {
            if (detail.compare(i, 3, " | ") == 0) {
                parts.push_back(current);
                current.clear();
                i += 2;
                continue;
            }
            current += detail[i];
        }
        parts.push_back(current);
    }
    int stage = 0;  // 0=type, 1=comment, 2=values, 3=primary key, 4=end
    for (const auto& part : parts) {
        if (part.empty()) fail("empty detail part", entry);
        if (stage <= 0 && type_names().count(part)) {
            column.type = part;
            stage = 1;
            continue;
        }
        if (stage <= 1 && starts_with(part, "comment : ")) {
            column.comment = part.substr(10);
            stage = 2;
            continue;
        }
        if (stage <= 2 && starts_with(part, "values : ")) {
            std::string values = part.substr(9);
            std::string current;
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (values.compare(i, 3, " , ") == 0) {
                    column.values.push_back(current);
                    current.clear();
                    i += 2;
                    continue;
                }
                current += values[i];
            }
            column.values.push_back(current);
            if (column.values.empty()) fail("empty values list", entry);
            stage = 3;
            continue;
        }
        if (stage <= 3 && part == "primary key") {
            column.primary_key = true;
            stage = 4;
            continue;
        }
        fail("unexpected detail part '" + part + "'", entry);
    }
    return column;
}

ParsedTable parse_table_line(const std::string& line) {
    const std::string mid = " , columns = [ ";
    auto mid_pos = line.find(mid);
    if (!starts_with(line, "table ") || mid_pos == std::string::npos) {
        fail("malformed table line", line);
    }
    if (line.size() < 2 || line.compare(line.size() - 2, 2, " ]") != 0) {
        fail("table line must close with ' ]'", line);
    }
    ParsedTable table;
    table.name = line.substr(6, mid_pos - 6);
    if (table.name.empty()) fail("empty table name", line);
    std::string inner = line.substr(mid_pos + mid.size(), line.size() - mid_pos - mid.size() - 2);
    for (const auto& entry : split_top_level(inner, line)) {
        table.columns.push_back(parse_column_entry(entry, table.name));
    }
    if (table.columns.empty()) fail("table with no columns", line);
    return table;
}

std::string parse_fk_line(const std::string& line) {
    std::string body = line.substr(std::string("foreign keys : ").size());
    auto eq = body.find(" = ");
    if (eq == std::string::npos) fail("malformed foreign key", line);
    split_qualified(body.substr(0, eq), line);
    split_qualified(body.substr(eq + 3), line);
    return body;
}

std::string parse_match_line(const std::string& line) {
    std::string body = line.substr(std::string("matched values : ").size());
    auto eq = body.find(" = ");
    if (eq == std::string::npos) fail("malformed matched value", line);
    split_qualified(body.substr(0, eq), line);
    std::string literal = body.substr(eq + 3);
    if (literal.size() < 2 || literal.front() != '\'' || literal.back() != '\'') {
        fail("matched value must be a quoted SQL string", line);
    }
    // Validate '' escaping: every interior quote must be doubled.
    for (std::size_t i = 1; i + 1 < literal.size(); ++i) {
        if (literal[i] == '\'') {
            if (i + 2 >= literal.size() || literal[i + 1] != '\'') {
                fail("unescaped quote in matched value", line);
            }
            ++i;
        }
    }
    return body;
}

ParsedPrompt parse_impl(const std::string& text, bool allow_question) {
    ParsedPrompt prompt;
    std::istringstream in(text);
    std::string line;
    // Stages: 0 tables, 1 foreign keys, 2 matched values, 3 question, 4 EK.
    int stage = 0;
    while (std::getline(in, line)) {
        if (line.empty()) fail("blank line inside prompt", text);
        if (starts_with(line, "table ")) {
            if (stage > 0) fail("table line after later sections", line);
            prompt.tables.push_back(parse_table_line(line));
        } else if (starts_with(line, "foreign keys : ")) {
            if (stage > 1) fail("foreign key line after later sections", line);
            stage = 1;
            prompt.foreign_keys.push_back(parse_fk_line(line));
        } else if (starts_with(line, "matched values : ")) {
            if (stage > 2) fail("matched value line after later sections", line);
            stage = 2;
            prompt.matched_values.push_back(parse_match_line(line));
        } else if (starts_with(line, "question : ")) {
            if (!allow_question) fail("question line in schema-only prompt", line);
            if (stage >= 3) fail("duplicate question line", line);
            stage = 3;
            prompt.question = line.substr(11);
        } else if (starts_with(line, "external knowledge : ")) {
            if (!allow_question) fail("external knowledge line in schema-only prompt", line);
            if (stage != 3) fail("external knowledge must follow the question", line);
            stage = 4;
            prompt.external_knowledge = line.substr(21);
        } else {
            fail("unrecognized line", line);
        }
    }
    if (allow_question && !prompt.question) fail("missing question line", text);
    return prompt;
}

}  // namespace

ParsedPrompt parse_prompt(const std::string& text) { return parse_impl(text, true); }

ParsedPrompt parse_db_prompt(const std::string& text) { return parse_impl(text, false); }

}  // namespace nl2sql::testing
