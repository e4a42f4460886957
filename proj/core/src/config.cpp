#include "nl2sql/config.hpp"

#include <fstream>
#include <set>

#include "nl2sql/errors.hpp"

namespace nl2sql {
namespace {

using ordered_json = nlohmann::ordered_json;

void require_keys(const ordered_json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

std::size_t read_size(const ordered_json& obj, const std::string& key, std::size_t fallback,
                      const std::string& where, std::size_t min_value = 0) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
        throw ConfigError(where + "." + key + " must be an integer");
    }
    auto raw = v.get<long long>();
    if (raw < 0 || static_cast<std::size_t>(raw) < min_value) {
        throw ConfigError(where + "." + key + " must be at least " + std::to_string(min_value));
    }
    return static_cast<std::size_t>(raw);
}

double read_double(const ordered_json& obj, const std::string& key, double fallback,
                   const std::string& where, double min_value, double max_value) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number()) {
        throw ConfigError(where + "." + key + " must be a number");
    }
    double raw = v.get<double>();
    if (raw < min_value || raw > max_value) {
        throw ConfigError(where + "." + key + " out of range");
    }
    return raw;
}

std::string read_string(const ordered_json& obj, const std::string& key,
                        const std::string& fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) {
        throw ConfigError(where + "." + key + " must be a string");
    }
    return obj[key].get<std::string>();
}

}  // namespace

FilterConfig filter_defaults_for_profile(const std::string& profile) {
    FilterConfig config;
    if (profile == "fewshot") {
        config.top_k1 = 5;
        config.top_k2 = 6;
    } else if (profile == "sft") {
        config.top_k1 = 6;
        config.top_k2 = 10;
    } else {
        throw ConfigError("unknown profile '" + profile + "' (expected sft or fewshot)");
    }
    return config;
}

PipelineConfig pipeline_config_from_json(const ordered_json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("pipeline config must be a JSON object");
    }
    require_keys(doc,
                 {"profile", "filter", "retrieval", "index", "eval", "gateway", "token_budget",
                  "representative_values", "demo_count"},
                 "config");

    PipelineConfig config;
    config.profile = read_string(doc, "profile", "sft", "config");
    config.filter = filter_defaults_for_profile(config.profile);

    if (doc.contains("filter")) {
        const auto& f = doc["filter"];
        require_keys(f, {"top_k1", "top_k2", "padding_seed"}, "config.filter");
        config.filter.top_k1 = read_size(f, "top_k1", config.filter.top_k1, "config.filter", 1);
        config.filter.top_k2 = read_size(f, "top_k2", config.filter.top_k2, "config.filter", 1);
        if (f.contains("padding_seed")) {
            config.filter.padding_seed =
                read_size(f, "padding_seed", 0, "config.filter");
        }
    }

    if (doc.contains("retrieval")) {
        const auto& r = doc["retrieval"];
        require_keys(r, {"coarse_candidates", "fine_threshold", "per_column_keep", "min_span"},
                     "config.retrieval");
        config.retrieval.coarse_candidates =
            read_size(r, "coarse_candidates", config.retrieval.coarse_candidates,
                      "config.retrieval", 1);
        config.retrieval.fine_threshold = read_double(
            r, "fine_threshold", config.retrieval.fine_threshold, "config.retrieval", 0.0, 1.0);
        config.retrieval.per_column_keep = read_size(
            r, "per_column_keep", config.retrieval.per_column_keep, "config.retrieval", 1);
        config.retrieval.min_span =
            read_size(r, "min_span", config.retrieval.min_span, "config.retrieval", 1);
    }

    if (doc.contains("index")) {
        const auto& ix = doc["index"];
        require_keys(ix, {"index_value_cap", "index_non_text", "bm25_k1", "bm25_b"},
                     "config.index");
        config.index.index_value_cap =
            read_size(ix, "index_value_cap", config.index.index_value_cap, "config.index", 1);
        if (ix.contains("index_non_text")) {
            if (!ix["index_non_text"].is_boolean()) {
                throw ConfigError("config.index.index_non_text must be a boolean");
            }
            config.index.index_non_text = ix["index_non_text"].get<bool>();
        }
        config.index.bm25_k1 =
            read_double(ix, "bm25_k1", config.index.bm25_k1, "config.index", 0.0, 10.0);
        config.index.bm25_b =
            read_double(ix, "bm25_b", config.index.bm25_b, "config.index", 0.0, 1.0);
    }

    if (doc.contains("eval")) {
        const auto& e = doc["eval"];
        require_keys(e, {"ves_runs", "timeout_s", "float_tol"}, "config.eval");
        config.eval.ves_runs = read_size(e, "ves_runs", config.eval.ves_runs, "config.eval", 1);
        config.eval.timeout_s =
            read_double(e, "timeout_s", config.eval.timeout_s, "config.eval", 0.001, 3600.0);
        config.eval.float_tol =
            read_double(e, "float_tol", config.eval.float_tol, "config.eval", 0.0, 1.0);
    }

    if (doc.contains("gateway")) {
        const auto& g = doc["gateway"];
        require_keys(g,
                     {"endpoint", "model", "api_key_env", "timeout_s", "max_retries",
                      "max_concurrency"},
                     "config.gateway");
        config.gateway.endpoint = read_string(g, "endpoint", config.gateway.endpoint,
                                              "config.gateway");
        config.gateway.model = read_string(g, "model", config.gateway.model, "config.gateway");
        config.gateway.api_key_env =
            read_string(g, "api_key_env", config.gateway.api_key_env, "config.gateway");
        config.gateway.timeout_s =
            read_double(g, "timeout_s", config.gateway.timeout_s, "config.gateway", 0.001,
                        3600.0);
        config.gateway.max_retries =
            read_size(g, "max_retries", config.gateway.max_retries, "config.gateway");
        config.gateway.max_concurrency = read_size(
            g, "max_concurrency", config.gateway.max_concurrency, "config.gateway", 1);
    }

    config.token_budget = read_size(doc, "token_budget", config.token_budget, "config", 1);
    config.representative_values =
        read_size(doc, "representative_values", config.representative_values, "config");
    config.demo_count = read_size(doc, "demo_count", config.demo_count, "config");
    return config;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path.string());
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    try {
        return pipeline_config_from_json(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& config) {
    ordered_json doc;
    doc["profile"] = config.profile;
    doc["filter"] = {{"top_k1", config.filter.top_k1}, {"top_k2", config.filter.top_k2}};
    if (config.filter.padding_seed) {
        doc["filter"]["padding_seed"] = *config.filter.padding_seed;
    }
    doc["retrieval"] = {{"coarse_candidates", config.retrieval.coarse_candidates},
                        {"fine_threshold", config.retrieval.fine_threshold},
                        {"per_column_keep", config.retrieval.per_column_keep},
                        {"min_span", config.retrieval.min_span}};
    doc["index"] = {{"index_value_cap", config.index.index_value_cap},
                    {"index_non_text", config.index.index_non_text},
                    {"bm25_k1", config.index.bm25_k1},
                    {"bm25_b", config.index.bm25_b}};
    doc["eval"] = {{"ves_runs", config.eval.ves_runs},
                   {"timeout_s", config.eval.timeout_s},
                   {"float_tol", config.eval.float_tol}};
    doc["gateway"] = {{"endpoint", config.gateway.endpoint},
                      {"model", config.gateway.model},
                      {"api_key_env", config.gateway.api_key_env},
                      {"timeout_s", config.gateway.timeout_s},
                      {"max_retries", config.gateway.max_retries},
                      {"max_concurrency", config.gateway.max_concurrency}};
    doc["token_budget"] = config.token_budget;
    doc["representative_values"] = config.representative_values;
    doc["demo_count"] = config.demo_count;
    return doc;
}

}  // namespace nl2sql
