#pragma once

#include <optional>
#include <string>
#include <vector>

namespace nl2sql::testing {

// Strict re-parser for the database prompt serialization, used to check that
// emitted prompts stay inside the documented grammar. Values and comments are
// not comma-escaped by the format, so fixtures must avoid text that mimics
// the separators; the parser throws std::runtime_error on any deviation.
struct ParsedColumn {
    std::string table;
    std::string name;
    std::optional<std::string> type;
    std::optional<std::string> comment;
    std::vector<std::string> values;
    bool primary_key = false;
};

struct ParsedTable {
    std::string name;
    std::vector<ParsedColumn> columns;
};

struct ParsedPrompt {
    std::vector<ParsedTable> tables;
    std::vector<std::string> foreign_keys;    // "t1.c1 = t2.c2"
    std::vector<std::string> matched_values;  // "t.c = 'v'"
    std::optional<std::string> question;
    std::optional<std::string> external_knowledge;
};

ParsedPrompt parse_prompt(const std::string& text);

// Parses the schema part only (no question line), as produced by
// render_db_prompt.
ParsedPrompt parse_db_prompt(const std::string& text);

}  // namespace nl2sql::testing
