#include "nl2sql/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "nl2sql/errors.hpp"
#include "nl2sql/prompt_builder.hpp"

namespace nl2sql {

namespace {

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    std::size_t path_start = scheme_end == std::string::npos
                                 ? endpoint.find('/')
                                 : endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

void validate_request(const CompletionRequest& request) {
    if (request.n < 1) throw ConfigError("completion request needs n >= 1");
    if (request.stop.size() > 4) throw ConfigError("at most 4 stop sequences are supported");
    if (request.max_tokens < 1) throw ConfigError("completion request needs max_tokens >= 1");
    if (request.temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

}  // namespace

std::uint64_t prompt_hash(std::string_view prompt) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : prompt) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string prompt_hash_hex(std::string_view prompt) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = prompt_hash(prompt);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string apply_stop_sequences(std::string text, const std::vector<std::string>& stop) {
    std::size_t cut = std::string::npos;
    for (const auto& s : stop) {
        if (s.empty()) continue;
        auto pos = text.find(s);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut != std::string::npos) text.resize(cut);
    return text;
}

HttpGateway::HttpGateway(GatewayConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("gateway endpoint is not configured");
    if (config_.max_concurrency == 0) config_.max_concurrency = 1;
}

std::string HttpGateway::provider_id() const { return "http:" + config_.model; }

void HttpGateway::acquire_slot() {
    std::unique_lock lock(slots_mutex_);
    slots_cv_.wait(lock, [&] { return in_flight_ < config_.max_concurrency; });
    ++in_flight_;
}

void HttpGateway::release_slot() {
    {
        std::lock_guard lock(slots_mutex_);
        --in_flight_;
    }
    slots_cv_.notify_one();
}

CompletionResponse HttpGateway::complete(const CompletionRequest& request) {
    validate_request(request);
    acquire_slot();
    struct SlotGuard {
        HttpGateway* g;
        ~SlotGuard() { g->release_slot(); }
    } guard{this};

    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["prompt"] = request.prompt;
    body["max_tokens"] = request.max_tokens;
    body["temperature"] = request.temperature;
    if (!request.stop.empty()) body["stop"] = request.stop;
    body["n"] = request.n;
    std::string payload = body.dump();

    const char* key = nullptr;
    if (!config_.api_key_env.empty()) key = std::getenv(config_.api_key_env.c_str());

    auto [base, path] = split_endpoint(config_.endpoint);
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto backoff = std::chrono::milliseconds(250ll << (attempt - 1));
            std::this_thread::sleep_for(backoff);
            if (debug_hook_) {
                debug_hook_("retry " + std::to_string(attempt) + " after: " + last_error);
            }
        }
        httplib::Client client(base);
        client.set_connection_timeout(config_.timeout_s, 0);
        client.set_read_timeout(config_.timeout_s, 0);
        httplib::Headers headers;
        if (key != nullptr) headers.emplace("Authorization", std::string("Bearer ") + key);
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_error = std::string("transport: ") + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 401 || result->status == 403) {
            throw ConfigError("gateway rejected credentials (HTTP " +
                              std::to_string(result->status) + ")");
        }
        if (result->status == 429 || result->status >= 500) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200) {
            throw GatewayError("gateway returned HTTP " + std::to_string(result->status));
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(std::string("gateway sent invalid JSON: ") + e.what());
        }
        CompletionResponse response;
        response.provider_id = provider_id();
        response.retries_used = attempt;
        try {
            for (const auto& choice : doc.at("choices")) {
                std::string text = choice.contains("text")
                                       ? choice.at("text").get<std::string>()
                                       : choice.at("message").at("content").get<std::string>();
                response.candidates.push_back(apply_stop_sequences(std::move(text), request.stop));
            }
            if (doc.contains("usage")) {
                response.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0u);
                response.usage.completion_tokens = doc["usage"].value("completion_tokens", 0u);
            }
        } catch (const nlohmann::json::exception& e) {
            throw GatewayError(std::string("gateway response missing choices: ") + e.what());
        }
        if (response.candidates.size() != request.n) {
            throw GatewayError("gateway returned " + std::to_string(response.candidates.size()) +
                               " candidates, expected " + std::to_string(request.n));
        }
        return response;
    }
    throw GatewayError("gateway unreachable after " + std::to_string(config_.max_retries) +
                       " retries (" + last_error + ")");
}

MockGateway::MockGateway(Script script) : script_(std::move(script)) {}

MockGateway MockGateway::from_transcript(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transcript: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid transcript JSON " + path.string() + ": " + e.what());
    }
    MockGateway gw{Script{}};
    gw.replay_mode_ = true;
    try {
        for (const auto& [hash, candidates] : doc.at("entries").items()) {
            gw.replay_[hash] = candidates.get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed transcript " + path.string() + ": " + e.what());
    }
    return gw;
}

CompletionResponse MockGateway::complete(const CompletionRequest& request) {
    validate_request(request);
    ++calls_;
    std::vector<std::string> candidates;
    std::string key = prompt_hash_hex(request.prompt);
    if (replay_mode_) {
        auto it = replay_.find(key);
        if (it == replay_.end()) {
            throw GatewayError("transcript has no entry for prompt hash " + key);
        }
        candidates = it->second;
    } else {
        candidates = script_(request);
    }
    if (candidates.empty()) throw GatewayError("mock script produced no candidates");
    while (candidates.size() < request.n) candidates.push_back(candidates.back());
    candidates.resize(request.n);
    for (auto& c : candidates) c = apply_stop_sequences(std::move(c), request.stop);

    CompletionResponse response;
    response.candidates = candidates;
    response.provider_id = provider_id();
    response.usage.prompt_tokens = estimate_tokens(request.prompt);
    for (const auto& c : candidates) response.usage.completion_tokens += estimate_tokens(c);
    served_[key] = candidates;
    return response;
}

nlohmann::ordered_json MockGateway::transcript() const {
    nlohmann::ordered_json doc;
    doc["entries"] = nlohmann::ordered_json::object();
    for (const auto& [hash, candidates] : served_) {
        doc["entries"][hash] = candidates;
    }
    return doc;
}

void MockGateway::save_transcript(const nlohmann::ordered_json& doc,
                                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write transcript: " + path.string());
    out << doc.dump(2) << "\n";
}

}  // namespace nl2sql
