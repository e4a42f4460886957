#include "nl2sql/demo_retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include <httplib.h>

#include "nl2sql/errors.hpp"
#include "nl2sql/text_util.hpp"

namespace nl2sql {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct WordToken {
    std::string prefix;  // leading punctuation
    std::string core;
    std::string suffix;  // trailing punctuation
    bool placeholder = false;

    std::string whole() const { return prefix + core + suffix; }
};

std::vector<WordToken> split_words(const std::string& text) {
    std::vector<WordToken> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i >= text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        std::string raw = text.substr(start, i - start);

        WordToken tok;
        // Placeholders may carry adjacent punctuation ("[VAL]." after a
        // quoted span at sentence end), so detect them by substring.
        for (const char* mark : {"[VAL]", "[NUM]"}) {
            auto pos = raw.find(mark);
            if (pos != std::string::npos) {
                tok.prefix = raw.substr(0, pos);
                tok.core = mark;
                tok.suffix = raw.substr(pos + 5);
                tok.placeholder = true;
                break;
            }
        }
        if (tok.placeholder) {
            words.push_back(std::move(tok));
            continue;
        }
        // Peel affix punctuation; interior . , - stay in the core so decimals
        // and hyphenated names survive.
        std::size_t b = 0;
        std::size_t e = raw.size();
        while (b < e && !std::isalnum(static_cast<unsigned char>(raw[b]))) ++b;
        while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1]))) --e;
        tok.prefix = raw.substr(0, b);
        tok.core = raw.substr(b, e - b);
        tok.suffix = raw.substr(e);
        words.push_back(std::move(tok));
    }
    return words;
}

bool is_number_core(const std::string& core) {
    if (core.empty()) return false;
    bool digit_seen = false;
    bool dot_seen = false;
    for (std::size_t i = 0; i < core.size(); ++i) {
        char c = core[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digit_seen = true;
        } else if (c == '.' && !dot_seen && i > 0 && i + 1 < core.size()) {
            dot_seen = true;
        } else if (c == ',') {
            // thousands separator
        } else {
            return false;
        }
    }
    return digit_seen;
}

bool starts_uppercase(const std::string& core) {
    return !core.empty() && std::isupper(static_cast<unsigned char>(core[0])) != 0;
}

bool ends_sentence(const WordToken& tok) {
    for (char c : tok.suffix) {
        if (c == '.' || c == '!' || c == '?') return true;
    }
    return false;
}

}  // namespace

QuestionPattern extract_pattern(const std::string& question) {
    // Pass 1: quoted spans collapse to [VAL] before any tokenization.
    std::string dequoted;
    dequoted.reserve(question.size());
    std::size_t i = 0;
    while (i < question.size()) {
        char c = question[i];
        if (c == '\'' || c == '"') {
            std::size_t close = question.find(c, i + 1);
            if (close != std::string::npos) {
                dequoted += "[VAL]";
                i = close + 1;
                continue;
            }
        }
        dequoted += c;
        ++i;
    }

    auto words = split_words(dequoted);

    // Pass 2: standalone numbers.
    for (auto& w : words) {
        if (w.placeholder) continue;
        if (is_number_core(w.core)) {
            w.core = "[NUM]";
            w.placeholder = true;
        }
    }

    // Pass 3: capitalized runs away from sentence starts.
    std::vector<std::string> out_tokens;
    std::size_t n = words.size();
    std::size_t k = 0;
    while (k < n) {
        bool sentence_initial = k == 0 || ends_sentence(words[k - 1]);
        if (!words[k].placeholder && starts_uppercase(words[k].core) && !sentence_initial) {
            std::size_t end = k;
            while (end + 1 < n && !words[end + 1].placeholder &&
                   starts_uppercase(words[end + 1].core) && !ends_sentence(words[end])) {
                ++end;
            }
            out_tokens.push_back(words[k].prefix + "[VAL]" + words[end].suffix);
            k = end + 1;
            continue;
        }
        out_tokens.push_back(words[k].whole());
        ++k;
    }

    std::string pattern;
    for (std::size_t t = 0; t < out_tokens.size(); ++t) {
        if (t > 0) pattern += " ";
        pattern += out_tokens[t];
    }
    return {question, pattern};
}

double TrigramSimilarity::similarity(const std::string& a, const std::string& b) {
    if (a == b) return 1.0;
    std::string la = to_lower(a);
    std::string lb = to_lower(b);
    if (la == lb) return 1.0;
    if (la.size() < 3 || lb.size() < 3) {
        return 0.0;  // distinct short strings share no trigram
    }
    std::unordered_map<std::string, double> ta;
    std::unordered_map<std::string, double> tb;
    for (std::size_t i = 0; i + 3 <= la.size(); ++i) ta[la.substr(i, 3)] += 1.0;
    for (std::size_t i = 0; i + 3 <= lb.size(); ++i) tb[lb.substr(i, 3)] += 1.0;
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [tri, f] : ta) {
        na += f * f;
        auto it = tb.find(tri);
        if (it != tb.end()) dot += f * it->second;
    }
    for (const auto& [tri, f] : tb) nb += f * f;
    if (na == 0.0 || nb == 0.0) return 0.0;
    double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(cosine, 0.0, 1.0);
}

double RemoteSimilarity::similarity(const std::string& a, const std::string& b) {
    auto scheme_end = config_.endpoint.find("://");
    std::size_t path_start = scheme_end == std::string::npos
                                 ? config_.endpoint.find('/')
                                 : config_.endpoint.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? config_.endpoint
                                                       : config_.endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/"
                                                       : config_.endpoint.substr(path_start);
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout_s, 0);
    client.set_read_timeout(config_.timeout_s, 0);
    nlohmann::ordered_json body;
    body["texts"] = {a, b};
    auto result = client.Post(path, body.dump(), "application/json");
    if (!result) {
        throw ScorerError("similarity backend unreachable at " + config_.endpoint + ": " +
                          httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw ScorerError("similarity backend returned HTTP " + std::to_string(result->status));
    }
    try {
        auto doc = nlohmann::json::parse(result->body);
        double score = doc.at("score").get<double>();
        if (!std::isfinite(score)) throw ScorerError("similarity backend sent non-finite score");
        return std::clamp(score, 0.0, 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ScorerError(std::string("malformed similarity response: ") + e.what());
    }
}

DemoRetriever::DemoRetriever(std::vector<Text2SqlSample> train, SimilarityBackend& backend)
    : train_(std::move(train)), backend_(backend) {
    if (train_.empty()) throw DataError("demonstration pool is empty");
    patterns_.reserve(train_.size());
    for (const auto& s : train_) patterns_.push_back(extract_pattern(s.question));
}

std::vector<DemoScore> DemoRetriever::rank(const std::string& test_question,
                                           std::size_t k) const {
    QuestionPattern test_pattern = extract_pattern(test_question);
    std::vector<DemoScore> scores;
    scores.reserve(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) {
        DemoScore s;
        s.train_index = i;
        s.q_sim = backend_.similarity(test_question, train_[i].question);
        s.p_sim = backend_.similarity(test_pattern.pattern, patterns_[i].pattern);
        s.score = std::max(s.q_sim, s.p_sim);
        scores.push_back(s);
    }
    std::sort(scores.begin(), scores.end(), [](const DemoScore& a, const DemoScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.train_index < b.train_index;
    });
    if (scores.size() > k) scores.resize(k);
    return scores;
}

std::vector<DemoScore> rank_demos(const std::string& test_question,
                                  const std::vector<Text2SqlSample>& train,
                                  SimilarityBackend& backend, std::size_t k) {
    DemoRetriever retriever(train, backend);
    return retriever.rank(test_question, k);
}

}  // namespace nl2sql
