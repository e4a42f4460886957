#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/text_util.hpp"
#include "nl2sql/value_index.hpp"

using namespace nl2sql;
using nl2sql::testing::TempDir;
using nl2sql::testing::create_db;

namespace {

std::vector<ValueDocument> fruit_docs() {
    return {{0, "t", "c", "red apple"}, {1, "t", "c", "green pear"}, {2, "t", "d", "apple pie"}};
}

}  // namespace

TEST_SUITE("value_index") {

TEST_CASE("BM25 matches the hand-computed value on the fruit corpus") {
    ValueIndex index = ValueIndex::build(fruit_docs(), 1.2, 0.75, 500);
    CHECK(index.doc_count() == 3);
    CHECK(index.avg_doc_length() == 2.0);

    // df(apple)=2, N=3: idf = ln(1 + 1.5/2.5) = ln(1.6). All documents have
    // length 2 = avg, so the length norm is exactly 1 and tf_norm is exactly
    // 1 for tf=1. The score is ln(1.6) to the last bit.
    auto ranked = coarse_search(index, "apple", 10);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].first == 0);  // tie broken by ascending doc_id
    CHECK(ranked[1].first == 2);
    CHECK(ranked[0].second == std::log(1.6));
    CHECK(ranked[0].second == doctest::Approx(0.47000362924573563).epsilon(1e-15));
    CHECK(ranked[1].second == ranked[0].second);
}

TEST_CASE("zero-score documents never surface") {
    ValueIndex index = ValueIndex::build(fruit_docs(), 1.2, 0.75, 500);
    for (const auto& [doc_id, score] : coarse_search(index, "apple pie", 10)) {
        CHECK(doc_id != 1);
        CHECK(score > 0.0);
    }
    CHECK(coarse_search(index, "zzz unknown", 10).empty());
}

TEST_CASE("empty corpus is rejected") {
    CHECK_THROWS_AS(ValueIndex::build({}, 1.2, 0.75, 500), EmptyIndexError);
}

TEST_CASE("a smaller limit returns a prefix of the larger ranking") {
    std::vector<ValueDocument> docs;
    for (int i = 0; i < 50; ++i) {
        std::string value = (i % 2 ? "alpha beta " : "alpha ") + std::to_string(i);
        docs.push_back({0, "t", "c", value});
    }
    ValueIndex index = ValueIndex::build(docs, 1.2, 0.75, 500);
    auto big = coarse_search(index, "alpha beta", 40);
    auto small = coarse_search(index, "alpha beta", 7);
    REQUIRE(small.size() == 7);
    for (std::size_t i = 0; i < small.size(); ++i) {
        CHECK(small[i] == big[i]);
    }
}

TEST_CASE("scores agree with the independent oracle") {
    std::vector<ValueDocument> docs = fruit_docs();
    docs.push_back({3, "t", "c", "apple apple apple tart"});
    docs.push_back({4, "u", "e", "pear and pie and apple"});
    ValueIndex index = ValueIndex::build(docs, 1.2, 0.75, 500);

    std::vector<std::vector<std::string>> doc_tokens;
    for (const auto& d : docs) doc_tokens.push_back(tokenize(d.value_text));
    for (const std::string question : {"apple", "apple pie", "pear pie tart", "and"}) {
        auto query_tokens = tokenize(question);
        auto ranked = coarse_search(index, question, docs.size());
        for (const auto& [doc_id, score] : ranked) {
            CHECK(score ==
                  nl2sql::testing::oracle_bm25(doc_tokens, doc_id, query_tokens, 1.2, 0.75));
        }
    }
}

TEST_CASE("save and load round trip preserves scoring") {
    TempDir dir;
    ValueIndex index = ValueIndex::build(fruit_docs(), 1.2, 0.75, 500);
    auto path = dir.file("fruit.idx");
    index.save(path);
    ValueIndex loaded = ValueIndex::load(path);
    CHECK(loaded.doc_count() == index.doc_count());
    CHECK(loaded.avg_doc_length() == index.avg_doc_length());
    CHECK(loaded.document(2).value_text == "apple pie");
    auto before = coarse_search(index, "apple pie", 10);
    auto after = coarse_search(loaded, "apple pie", 10);
    CHECK(before == after);

    auto manifest = index_manifest(loaded, "fruit");
    CHECK(manifest["db_id"] == "fruit");
    CHECK(manifest["doc_count"] == 3);
}

TEST_CASE("load rejects truncated files") {
    TempDir dir;
    ValueIndex index = ValueIndex::build(fruit_docs(), 1.2, 0.75, 500);
    auto path = dir.file("fruit.idx");
    index.save(path);
    auto data = [&] {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    std::ofstream(dir.file("cut.idx"), std::ios::binary)
        << data.substr(0, data.size() / 2);
    CHECK_THROWS_AS(ValueIndex::load(dir.file("cut.idx")), FormatError);
    std::ofstream(dir.file("junk.idx"), std::ios::binary) << "JUNKJUNKJUNK";
    CHECK_THROWS_AS(ValueIndex::load(dir.file("junk.idx")), FormatError);
}

TEST_CASE("lcs_length is case-insensitive and matches the oracle") {
    CHECK(lcs_length("Jesenik branch", "jesenik") == 7);
    CHECK(lcs_length("", "abc") == 0);
    CHECK(lcs_length("abc", "") == 0);
    CHECK(lcs_length("abc", "xbcy") == 2);

    std::mt19937_64 gen(7);
    auto pool = nl2sql::testing::make_word_pool(gen, 20);
    for (int i = 0; i < 200; ++i) {
        std::string a = pool[gen() % pool.size()] + " " + pool[gen() % pool.size()];
        std::string b = pool[gen() % pool.size()];
        if (gen() % 2) b += " " + pool[gen() % pool.size()].substr(0, 1 + gen() % 5);
        CHECK(lcs_length(a, b) == nl2sql::testing::oracle_lcs(a, b));
    }
}

TEST_CASE("match_degree clamps, thresholds, and ratios") {
    const std::string question = "How many clients are in the Jesenik branch?";
    CHECK(match_degree(question, "Jesenik", 3) == 1.0);
    CHECK(match_degree(question, "in", 3) == 0.0);  // below min_span
    CHECK(match_degree(question, "", 3) == 0.0);
    // lcs("...the Jesenik branch?...", "the Jesenik bar") keeps the shared
    // "the jesenik b" span of 13 over a 15-char value.
    CHECK(match_degree(question, "the Jesenik bar", 3) == doctest::Approx(13.0 / 15.0));
}

TEST_CASE("retrieve_values agrees with the exhaustive oracle and counts calls") {
    std::vector<ValueDocument> docs = {
        {0, "district", "a2", "Jesenik"},      {1, "district", "a2", "Olomouc"},
        {2, "district", "a2", "Jesenik east"}, {3, "client", "name", "Jesenik"},
        {4, "client", "name", "Prague"},
    };
    ValueIndex index = ValueIndex::build(docs, 1.2, 0.75, 500);
    RetrievalConfig config;
    config.coarse_candidates = 10;
    RetrievalStats stats;
    auto got = retrieve_values(index, "clients in the Jesenik branch", config, &stats);
    auto want = nl2sql::testing::oracle_retrieve(docs, "clients in the Jesenik branch", config,
                                                 1.2, 0.75, 500);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].table == want[i].table);
        CHECK(got[i].column == want[i].column);
        CHECK(got[i].value_text == want[i].value_text);
        CHECK(got[i].fine_score == want[i].fine_score);
        CHECK(got[i].coarse_score == want[i].coarse_score);
    }
    CHECK(stats.lcs_calls == stats.coarse_candidates);
    CHECK(stats.lcs_calls <= config.coarse_candidates);

    SUBCASE("per-column cap limits duplicates") {
        RetrievalConfig capped = config;
        capped.per_column_keep = 1;
        auto matches = retrieve_values(index, "clients in the Jesenik branch", capped);
        std::map<std::pair<std::string, std::string>, int> counts;
        for (const auto& m : matches) ++counts[{m.table, m.column}];
        for (const auto& [key, count] : counts) CHECK(count <= 1);
    }
}

TEST_CASE("retrieve_values requires a nonempty question match gracefully") {
    ValueIndex index = ValueIndex::build(fruit_docs(), 1.2, 0.75, 500);
    CHECK(retrieve_values(index, "no overlap here", {}).empty());
}

TEST_CASE("build_index pulls distinct text values from the database") {
    TempDir dir;
    auto path = dir.file("vals.sqlite");
    create_db(path,
              "CREATE TABLE d (name TEXT, num INTEGER);"
              "INSERT INTO d VALUES ('Jesenik', 1), ('Jesenik', 2), ('Olomouc', 3), (NULL, 4);");
    DatabaseCatalog catalog = introspect_database(path);
    ValueIndex index = build_index(catalog, {});
    CHECK(index.doc_count() == 2);  // distinct non-null text values only

    IndexConfig with_numbers;
    with_numbers.index_non_text = true;
    ValueIndex wide = build_index(catalog, with_numbers);
    CHECK(wide.doc_count() == 6);
}

}
