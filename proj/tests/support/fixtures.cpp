#include "fixtures.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <set>
#include <stdexcept>

#include "nl2sql/sqlite_db.hpp"

namespace nl2sql::testing {

TempDir::TempDir(const std::string& prefix) {
    namespace fs = std::filesystem;
    static std::atomic<unsigned> counter{0};
    fs::path base = fs::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
        fs::path candidate =
            base / (prefix + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
        std::error_code ec;
        if (fs::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    throw std::runtime_error("cannot create temp directory under " + base.string());
}

TempDir::~TempDir() {
    if (!path_.empty()) {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
}

void create_db(const std::filesystem::path& path, const std::string& sql) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    SqliteDb db = SqliteDb::open_read_write(path);
    db.exec(sql);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::vector<std::string> make_word_pool(std::mt19937_64& gen, std::size_t count) {
    std::set<std::string> seen;
    std::vector<std::string> pool;
    while (pool.size() < count) {
        std::string word;
        for (int i = 0; i < 6; ++i) {
            word += static_cast<char>('a' + gen() % 26);
        }
        if (seen.insert(word).second) pool.push_back(word);
    }
    return pool;
}

RandomDbFixture make_random_db(const std::filesystem::path& dir, std::uint64_t seed,
                               std::size_t max_values) {
    std::mt19937_64 gen(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(gen() % n); };

    std::vector<std::string> pool = make_word_pool(gen, 40);
    const std::size_t table_count = 2 + pick(3);

    RandomDbFixture fixture;
    fixture.db_path = dir / ("rand-" + std::to_string(seed) + ".sqlite");

    std::string ddl;
    std::string inserts;
    std::size_t remaining = max_values;
    for (std::size_t t = 0; t < table_count; ++t) {
        const std::string table = "t" + std::to_string(t);
        const std::size_t column_count = 1 + pick(3);
        ddl += "CREATE TABLE " + table + " (";
        for (std::size_t c = 0; c < column_count; ++c) {
            if (c) ddl += ", ";
            ddl += "c" + std::to_string(c) + " TEXT";
        }
        ddl += ");\n";

        const std::size_t row_target = 1 + pick(12);
        for (std::size_t r = 0; r < row_target && remaining >= column_count; ++r) {
            inserts += "INSERT INTO " + table + " VALUES (";
            for (std::size_t c = 0; c < column_count; ++c) {
                std::string value = pool[pick(pool.size())];
                if (gen() % 3 == 0) value += " " + pool[pick(pool.size())];
                fixture.values.push_back(value);
                --remaining;
                if (c) inserts += ", ";
                inserts += "'" + value + "'";
            }
            inserts += ");\n";
        }
    }
    create_db(fixture.db_path, ddl + inserts);
    fixture.catalog = introspect_database(fixture.db_path);

    const std::size_t question_count = 5 + pick(5);
    for (std::size_t q = 0; q < question_count && !fixture.values.empty(); ++q) {
        const std::string& target = fixture.values[pick(fixture.values.size())];
        std::string question;
        switch (pick(3)) {
            case 0: question = "which rows mention " + target + " anywhere"; break;
            case 1: question = "count entries matching " + target + " in the data"; break;
            default: question = "show everything about " + target + " now"; break;
        }
        fixture.questions.push_back(question);
    }
    return fixture;
}

}  // namespace nl2sql::testing
