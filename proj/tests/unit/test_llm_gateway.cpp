#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nl2sql/errors.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "support/fixtures.hpp"

using namespace nl2sql;

namespace {

struct ScopedServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port) + "/v1/completions";
    }

    ~ScopedServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

GatewayConfig config_for(const ScopedServer& srv) {
    GatewayConfig cfg;
    cfg.endpoint = srv.endpoint();
    cfg.model = "test-model";
    cfg.api_key_env = "";
    cfg.timeout_s = 5;
    cfg.max_retries = 1;
    return cfg;
}

}  // namespace

TEST_SUITE("llm_gateway") {

TEST_CASE("prompt hash is the 64-bit FNV-1a") {
    CHECK(prompt_hash("") == 0xcbf29ce484222325ull);
    CHECK(prompt_hash_hex("") == "cbf29ce484222325");
    CHECK(prompt_hash_hex("a") != prompt_hash_hex("b"));
    CHECK(prompt_hash_hex("same") == prompt_hash_hex("same"));
    CHECK(prompt_hash_hex("x").size() == 16);
}

TEST_CASE("stop sequences cut at the earliest match") {
    CHECK(apply_stop_sequences("SELECT 1;\nmore", {";", "\n"}) == "SELECT 1");
    CHECK(apply_stop_sequences("abcdef", {"cd", "b"}) == "a");
    CHECK(apply_stop_sequences("no match", {";"}) == "no match");
    CHECK(apply_stop_sequences("keep", {}) == "keep");
    CHECK(apply_stop_sequences("keep", {""}) == "keep");
}

TEST_CASE("mock gateway pads and truncates to n") {
    MockGateway gw([](const CompletionRequest&) {
        return std::vector<std::string>{"first", "second"};
    });
    CompletionRequest req;
    req.prompt = "p";
    req.n = 4;
    auto resp = gw.complete(req);
    REQUIRE(resp.candidates.size() == 4);
    CHECK(resp.candidates[0] == "first");
    CHECK(resp.candidates[1] == "second");
    CHECK(resp.candidates[2] == "second");
    CHECK(resp.candidates[3] == "second");
    CHECK(resp.provider_id == "mock");

    req.n = 1;
    auto one = gw.complete(req);
    REQUIRE(one.candidates.size() == 1);
    CHECK(one.candidates[0] == "first");
    CHECK(gw.calls() == 2);
}

TEST_CASE("mock gateway applies stop sequences and reports usage") {
    MockGateway gw([](const CompletionRequest&) {
        return std::vector<std::string>{"SELECT 1 ; trailing"};
    });
    CompletionRequest req;
    req.prompt = "abcdefgh";  // 8 chars -> 2 estimated tokens
    req.stop = {" ;"};
    auto resp = gw.complete(req);
    REQUIRE(resp.candidates.size() == 1);
    CHECK(resp.candidates[0] == "SELECT 1");
    CHECK(resp.usage.prompt_tokens == 2);
    CHECK(resp.usage.completion_tokens == 2);  // "SELECT 1" is 8 chars
}

TEST_CASE("mock gateway rejects empty scripts") {
    MockGateway gw([](const CompletionRequest&) { return std::vector<std::string>{}; });
    CompletionRequest req;
    req.prompt = "p";
    CHECK_THROWS_AS(gw.complete(req), GatewayError);
}

TEST_CASE("request validation") {
    MockGateway gw([](const CompletionRequest&) { return std::vector<std::string>{"x"}; });
    CompletionRequest req;
    req.prompt = "p";

    CompletionRequest bad_n = req;
    bad_n.n = 0;
    CHECK_THROWS_AS(gw.complete(bad_n), ConfigError);

    CompletionRequest bad_stop = req;
    bad_stop.stop = {"a", "b", "c", "d", "e"};
    CHECK_THROWS_AS(gw.complete(bad_stop), ConfigError);

    CompletionRequest bad_tokens = req;
    bad_tokens.max_tokens = 0;
    CHECK_THROWS_AS(gw.complete(bad_tokens), ConfigError);

    CompletionRequest bad_temp = req;
    bad_temp.temperature = -0.5;
    CHECK_THROWS_AS(gw.complete(bad_temp), ConfigError);
}

TEST_CASE("transcript round trip replays by prompt hash") {
    nl2sql::testing::TempDir dir;
    auto path = dir.file("transcript.json");
    {
        MockGateway gw([](const CompletionRequest& r) {
            return std::vector<std::string>{"answer to " + std::to_string(r.prompt.size())};
        });
        CompletionRequest req;
        req.prompt = "what is the count";
        req.n = 2;
        auto live = gw.complete(req);
        MockGateway::save_transcript(gw.transcript(), path);

        MockGateway replay = MockGateway::from_transcript(path);
        auto replayed = replay.complete(req);
        CHECK(replayed.candidates == live.candidates);
    }
    MockGateway replay = MockGateway::from_transcript(path);
    CompletionRequest unseen;
    unseen.prompt = "never served";
    CHECK_THROWS_AS(replay.complete(unseen), GatewayError);
}

TEST_CASE("transcript file errors") {
    nl2sql::testing::TempDir dir;
    CHECK_THROWS_AS(MockGateway::from_transcript(dir.file("absent.json")), IoError);
    auto bad = dir.file("bad.json");
    nl2sql::testing::write_file(bad, "not json");
    CHECK_THROWS_AS(MockGateway::from_transcript(bad), FormatError);
    auto wrong = dir.file("wrong.json");
    nl2sql::testing::write_file(wrong, "{\"entries\": [1, 2]}");
    CHECK_THROWS_AS(MockGateway::from_transcript(wrong), FormatError);
}

TEST_CASE("http gateway parses completions responses") {
    ScopedServer srv;
    srv.server.Post("/v1/completions",
                    [](const httplib::Request& req, httplib::Response& res) {
                        auto body = nlohmann::json::parse(req.body);
                        CHECK(body.at("model") == "test-model");
                        nlohmann::json out;
                        auto n = body.at("n").get<std::size_t>();
                        out["choices"] = nlohmann::json::array();
                        for (std::size_t i = 0; i < n; ++i) {
                            out["choices"].push_back({{"text", "SELECT " + std::to_string(i)}});
                        }
                        out["usage"] = {{"prompt_tokens", 7}, {"completion_tokens", 3}};
                        res.set_content(out.dump(), "application/json");
                    });
    srv.start();
    HttpGateway gw(config_for(srv));
    CHECK(gw.provider_id() == "http:test-model");
    CompletionRequest req;
    req.prompt = "q";
    req.n = 3;
    auto resp = gw.complete(req);
    REQUIRE(resp.candidates.size() == 3);
    CHECK(resp.candidates[0] == "SELECT 0");
    CHECK(resp.candidates[2] == "SELECT 2");
    CHECK(resp.usage.prompt_tokens == 7);
    CHECK(resp.usage.completion_tokens == 3);
    CHECK(resp.retries_used == 0);
}

TEST_CASE("http gateway parses chat-style content and applies stops") {
    ScopedServer srv;
    srv.server.Post("/v1/completions",
                    [](const httplib::Request&, httplib::Response& res) {
                        nlohmann::json out;
                        out["choices"] = {{{"message", {{"content", "SELECT a ; junk"}}}}};
                        res.set_content(out.dump(), "application/json");
                    });
    srv.start();
    HttpGateway gw(config_for(srv));
    CompletionRequest req;
    req.prompt = "q";
    req.stop = {" ;"};
    auto resp = gw.complete(req);
    REQUIRE(resp.candidates.size() == 1);
    CHECK(resp.candidates[0] == "SELECT a");
    CHECK(resp.usage.prompt_tokens == 0);  // no usage block in the reply
}

TEST_CASE("http gateway retries transient failures") {
    ScopedServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/completions",
                    [&hits](const httplib::Request&, httplib::Response& res) {
                        if (hits.fetch_add(1) == 0) {
                            res.status = 429;
                            return;
                        }
                        nlohmann::json out;
                        out["choices"] = {{{"text", "ok"}}};
                        res.set_content(out.dump(), "application/json");
                    });
    srv.start();
    HttpGateway gw(config_for(srv));
    std::vector<std::string> log;
    gw.set_debug_hook([&log](std::string_view line) { log.emplace_back(line); });
    CompletionRequest req;
    req.prompt = "q";
    auto resp = gw.complete(req);
    CHECK(resp.candidates == std::vector<std::string>{"ok"});
    CHECK(resp.retries_used == 1);
    CHECK(hits.load() == 2);
    REQUIRE(!log.empty());
    CHECK(log[0].find("retry 1") != std::string::npos);
}

TEST_CASE("http gateway gives up after persistent server errors") {
    ScopedServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/completions",
                    [&hits](const httplib::Request&, httplib::Response& res) {
                        hits.fetch_add(1);
                        res.status = 500;
                    });
    srv.start();
    HttpGateway gw(config_for(srv));
    CompletionRequest req;
    req.prompt = "q";
    CHECK_THROWS_AS(gw.complete(req), GatewayError);
    CHECK(hits.load() == 2);  // initial attempt + one retry
}

TEST_CASE("http gateway treats auth failures as configuration errors") {
    ScopedServer srv;
    srv.server.Post("/v1/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    srv.start();
    HttpGateway gw(config_for(srv));
    CompletionRequest req;
    req.prompt = "q";
    CHECK_THROWS_AS(gw.complete(req), ConfigError);
}

TEST_CASE("http gateway sends bearer token from the environment") {
    ScopedServer srv;
    std::string seen_auth;
    srv.server.Post("/v1/completions",
                    [&seen_auth](const httplib::Request& req, httplib::Response& res) {
                        seen_auth = req.get_header_value("Authorization");
                        nlohmann::json out;
                        out["choices"] = {{{"text", "ok"}}};
                        res.set_content(out.dump(), "application/json");
                    });
    srv.start();
    ::setenv("NL2SQL_TEST_KEY", "sekrit", 1);
    auto cfg = config_for(srv);
    cfg.api_key_env = "NL2SQL_TEST_KEY";
    HttpGateway gw(cfg);
    CompletionRequest req;
    req.prompt = "q";
    gw.complete(req);
    CHECK(seen_auth == "Bearer sekrit");
    ::unsetenv("NL2SQL_TEST_KEY");
}

TEST_CASE("http gateway rejects a candidate count mismatch") {
    ScopedServer srv;
    srv.server.Post("/v1/completions",
                    [](const httplib::Request&, httplib::Response& res) {
                        nlohmann::json out;
                        out["choices"] = {{{"text", "only one"}}};
                        res.set_content(out.dump(), "application/json");
                    });
    srv.start();
    HttpGateway gw(config_for(srv));
    CompletionRequest req;
    req.prompt = "q";
    req.n = 2;
    CHECK_THROWS_AS(gw.complete(req), GatewayError);
}

TEST_CASE("http gateway requires an endpoint") {
    GatewayConfig cfg;
    CHECK_THROWS_AS(HttpGateway{cfg}, ConfigError);
}

}
