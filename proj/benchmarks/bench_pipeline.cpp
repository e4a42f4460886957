#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "nl2sql/catalog.hpp"
#include "nl2sql/prompt_builder.hpp"
#include "nl2sql/schema_filter.hpp"
#include "nl2sql/value_index.hpp"

using namespace nl2sql;

namespace {

std::vector<std::string> word_pool(std::size_t count) {
    std::mt19937_64 gen(42);
    std::vector<std::string> pool;
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string word;
        for (int c = 0; c < 6; ++c) word += static_cast<char>('a' + gen() % 26);
        pool.push_back(std::move(word));
    }
    return pool;
}

// 10k two-word values over a 400-word vocabulary: enough postings overlap to
// make the coarse stage do real ranking work.
const ValueIndex& shared_index() {
    static const ValueIndex index = [] {
        auto pool = word_pool(400);
        std::mt19937_64 gen(7);
        std::vector<ValueDocument> docs;
        docs.reserve(10000);
        for (std::uint32_t i = 0; i < 10000; ++i) {
            ValueDocument d;
            d.doc_id = i;
            d.table = "t" + std::to_string(i % 8);
            d.column = "c" + std::to_string(i % 4);
            d.value_text = pool[gen() % pool.size()] + " " + pool[gen() % pool.size()];
            docs.push_back(std::move(d));
        }
        return ValueIndex::build(docs, 1.2, 0.75, 500);
    }();
    return index;
}

std::string shared_question() {
    const auto& docs = shared_index().documents();
    return "show every row that mentions " + docs[1234].value_text + " in the data";
}

DatabaseCatalog synthetic_catalog() {
    DatabaseCatalog cat;
    cat.db_id = "bench";
    for (int t = 0; t < 8; ++t) {
        TableInfo table;
        table.name = "table" + std::to_string(t);
        for (int c = 0; c < 10; ++c) {
            ColumnInfo col;
            col.name = "col" + std::to_string(c);
            col.data_type = c % 3 == 0 ? DataType::Integer : DataType::Text;
            col.is_primary_key = (c == 0);
            col.ordinal = static_cast<std::size_t>(c);
            col.representative_values = {"alpha", "beta"};
            table.columns.push_back(std::move(col));
        }
        cat.tables.push_back(std::move(table));
    }
    for (int t = 1; t < 8; ++t) {
        cat.foreign_keys.push_back(
            {"table" + std::to_string(t), "col1", "table" + std::to_string(t - 1), "col0"});
    }
    return cat;
}

void BM_LcsLength(benchmark::State& state) {
    const std::string question =
        "show the names of all members from either the north or the south branch office";
    const std::string value = "north branch office";
    for (auto _ : state) {
        benchmark::DoNotOptimize(lcs_length(question, value));
    }
}
BENCHMARK(BM_LcsLength);

void BM_MatchDegree(benchmark::State& state) {
    const std::string question =
        "show the names of all members from either the north or the south branch office";
    const std::string value = "north branch office";
    for (auto _ : state) {
        benchmark::DoNotOptimize(match_degree(question, value));
    }
}
BENCHMARK(BM_MatchDegree);

void BM_CoarseSearch(benchmark::State& state) {
    const ValueIndex& index = shared_index();
    const std::string question = shared_question();
    for (auto _ : state) {
        benchmark::DoNotOptimize(coarse_search(index, question, 100));
    }
}
BENCHMARK(BM_CoarseSearch);

void BM_RetrieveValues(benchmark::State& state) {
    const ValueIndex& index = shared_index();
    const std::string question = shared_question();
    for (auto _ : state) {
        benchmark::DoNotOptimize(retrieve_values(index, question, RetrievalConfig{}));
    }
}
BENCHMARK(BM_RetrieveValues);

void BM_BuildPrompt(benchmark::State& state) {
    DatabaseCatalog catalog = synthetic_catalog();
    LexicalScorer scorer;
    const std::string question = "how many rows of table3 have col2 equal to alpha?";
    for (auto _ : state) {
        PromptBundle bundle =
            build_db_prompt(question, std::nullopt, catalog, scorer, nullptr, PromptConfig{});
        benchmark::DoNotOptimize(bundle.full_text());
    }
}
BENCHMARK(BM_BuildPrompt);

}  // namespace

BENCHMARK_MAIN();
