#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nl2sql/catalog.hpp"

namespace nl2sql::testing {

// Self-deleting scratch directory for test artifacts.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "nl2sql-test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Creates (or overwrites) a SQLite database by running `sql`.
void create_db(const std::filesystem::path& path, const std::string& sql);

// Writes `content` verbatim, replacing any existing file.
void write_file(const std::filesystem::path& path, const std::string& content);

// Deterministic word pool for randomized fixtures. Every word is exactly six
// lowercase letters and no two words are equal, so a word can only appear in
// a question as a whole token.
std::vector<std::string> make_word_pool(std::mt19937_64& gen, std::size_t count);

struct RandomDbFixture {
    std::filesystem::path db_path;
    DatabaseCatalog catalog;      // introspected from the generated file
    std::vector<std::string> values;  // every cell value, for exhaustive checks
    std::vector<std::string> questions;  // questions embedding known values
};

// Builds a small database of 2-4 text tables filled with 1- or 2-word values
// from a shared pool, plus questions that quote some of those values
// verbatim. Total value count stays at or below `max_values`.
RandomDbFixture make_random_db(const std::filesystem::path& dir, std::uint64_t seed,
                               std::size_t max_values);

}  // namespace nl2sql::testing
