#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nl2sql {

struct CompletionRequest {
    std::string prompt;
    std::size_t max_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop;  // at most 4 entries
    std::size_t n = 1;
};

struct TokenUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;

    bool operator==(const TokenUsage&) const = default;
};

struct CompletionResponse {
    std::vector<std::string> candidates;  // exactly request.n entries
    TokenUsage usage;
    std::string provider_id;
    std::size_t retries_used = 0;

    bool operator==(const CompletionResponse&) const = default;
};

// Error messages raised by gateways never include prompt content; prompts are
// only surfaced through the optional debug hook.
class LlmGateway {
public:
    virtual ~LlmGateway() = default;
    virtual std::string provider_id() const = 0;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

std::uint64_t prompt_hash(std::string_view prompt);
std::string prompt_hash_hex(std::string_view prompt);

struct GatewayConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "NL2SQL_API_KEY";
    int timeout_s = 60;
    std::size_t max_retries = 3;
    std::size_t max_concurrency = 4;
};

// JSON-over-HTTP client for the common completions wire format:
// POST {model, prompt, max_tokens, temperature, stop, n}
//  -> {choices:[{text}...], usage:{prompt_tokens, completion_tokens}}.
// Transient transport failures retry with exponential backoff; HTTP 401/403
// raise ConfigError immediately.
class HttpGateway : public LlmGateway {
public:
    explicit HttpGateway(GatewayConfig config);
    std::string provider_id() const override;
    CompletionResponse complete(const CompletionRequest& request) override;

    // Receives short status lines (never prompt content) plus, at debug
    // level only, the prompt itself.
    void set_debug_hook(std::function<void(std::string_view)> hook) { debug_hook_ = std::move(hook); }

private:
    GatewayConfig config_;
    std::function<void(std::string_view)> debug_hook_;
    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;

    void acquire_slot();
    void release_slot();
};

// Deterministic test double. Two modes:
//  - transcript replay: candidates looked up by prompt hash from a JSON file;
//  - scripted: a callback computes candidates from the request.
// Responses are padded by repeating the last candidate (or truncated) to
// exactly request.n entries; an empty candidate list raises GatewayError.
class MockGateway : public LlmGateway {
public:
    using Script = std::function<std::vector<std::string>(const CompletionRequest&)>;

    explicit MockGateway(Script script);
    static MockGateway from_transcript(const std::filesystem::path& path);

    std::string provider_id() const override { return "mock"; }
    CompletionResponse complete(const CompletionRequest& request) override;

    // Record/replay support: dump every served request+response to a
    // transcript JSON document.
    nlohmann::ordered_json transcript() const;
    static void save_transcript(const nlohmann::ordered_json& doc,
                                const std::filesystem::path& path);

    std::size_t calls() const { return calls_; }

private:
    Script script_;
    std::map<std::string, std::vector<std::string>> replay_;
    bool replay_mode_ = false;
    std::size_t calls_ = 0;
    std::map<std::string, std::vector<std::string>> served_;
};

// Applies stop sequences client-side: text is cut at the earliest occurrence
// of any stop string.
std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stop);

}  // namespace nl2sql
