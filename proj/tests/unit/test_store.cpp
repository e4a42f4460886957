#include <doctest.h>

#include <fstream>

#include "../support/fixtures.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/store.hpp"

using namespace nl2sql;
using nl2sql::testing::TempDir;
using nl2sql::testing::create_db;

TEST_SUITE("store") {

TEST_CASE("resolves flat and nested database layouts") {
    TempDir dir;
    create_db(dir.file("flat.sqlite"), "CREATE TABLE t (x TEXT); INSERT INTO t VALUES ('a');");
    std::filesystem::create_directories(dir.file("nested"));
    create_db(dir.path() / "nested" / "nested.db",
              "CREATE TABLE u (y TEXT); INSERT INTO u VALUES ('b');");

    CatalogStore store(dir.path());
    CHECK(store.db_path("flat") == dir.file("flat.sqlite"));
    CHECK(store.db_path("nested") == dir.path() / "nested" / "nested.db");
    CHECK_THROWS_AS(store.db_path("absent"), IoError);

    const DbContext& flat = store.get("flat");
    CHECK(flat.catalog.db_id == "flat");
    REQUIRE(flat.index.has_value());
    CHECK(flat.index->doc_count() == 1);

    // Context objects are cached per db_id.
    CHECK(&store.get("flat") == &flat);
}

TEST_CASE("sidecar metadata is picked up automatically") {
    TempDir dir;
    create_db(dir.file("meta.sqlite"), "CREATE TABLE t (x TEXT); INSERT INTO t VALUES ('a');");
    std::ofstream(dir.file("meta.metadata.json")) << R"({"t.x": "described"})";
    CatalogStore store(dir.path());
    CHECK(store.get("meta").catalog.find_table("t")->find_column("x")->comment == "described");
}

TEST_CASE("databases with no indexable values get no index") {
    TempDir dir;
    create_db(dir.file("empty.sqlite"), "CREATE TABLE t (x TEXT);");
    CatalogStore store(dir.path());
    CHECK(!store.get("empty").index.has_value());
}

}
