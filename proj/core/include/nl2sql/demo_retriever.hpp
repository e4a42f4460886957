#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nl2sql/dataset.hpp"

namespace nl2sql {

struct QuestionPattern {
    std::string original;
    std::string pattern;

    bool operator==(const QuestionPattern&) const = default;
};

// Rule-based entity removal: quoted spans and capitalized token runs (when
// not sentence-initial) become [VAL], standalone numbers become [NUM].
// Idempotent: existing placeholders are never rewritten.
QuestionPattern extract_pattern(const std::string& question);

class SimilarityBackend {
public:
    virtual ~SimilarityBackend() = default;
    virtual std::string id() const = 0;
    // Must return a value in [0,1].
    virtual double similarity(const std::string& a, const std::string& b) = 0;
};

// Default backend: cosine over character-trigram term-frequency vectors of
// the lowercased texts. Nonnegative vectors keep the cosine inside [0,1], so
// the affine map to [0,1] is the identity. Texts shorter than one trigram
// fall back to exact-match scoring.
class TrigramSimilarity : public SimilarityBackend {
public:
    std::string id() const override { return "trigram-cosine:v1"; }
    double similarity(const std::string& a, const std::string& b) override;
};

struct RemoteEmbedderConfig {
    std::string endpoint;
    int timeout_s = 30;
};

// Posts {texts:[a,b]} and expects {score} in [0,1].
class RemoteSimilarity : public SimilarityBackend {
public:
    explicit RemoteSimilarity(RemoteEmbedderConfig config) : config_(std::move(config)) {}
    std::string id() const override { return "remote:" + config_.endpoint; }
    double similarity(const std::string& a, const std::string& b) override;

private:
    RemoteEmbedderConfig config_;
};

struct DemoScore {
    std::size_t train_index = 0;
    double q_sim = 0.0;
    double p_sim = 0.0;
    double score = 0.0;

    bool operator==(const DemoScore&) const = default;
};

// Holds the training pool and its precomputed question patterns.
class DemoRetriever {
public:
    DemoRetriever(std::vector<Text2SqlSample> train, SimilarityBackend& backend);

    // Top-K by max(question similarity, pattern similarity), ties broken by
    // ascending train index. K is clamped to the pool size.
    std::vector<DemoScore> rank(const std::string& test_question, std::size_t k) const;

    const std::vector<Text2SqlSample>& train() const { return train_; }
    const std::vector<QuestionPattern>& patterns() const { return patterns_; }

private:
    std::vector<Text2SqlSample> train_;
    std::vector<QuestionPattern> patterns_;
    SimilarityBackend& backend_;
};

// One-shot convenience over a freshly built retriever.
std::vector<DemoScore> rank_demos(const std::string& test_question,
                                  const std::vector<Text2SqlSample>& train,
                                  SimilarityBackend& backend, std::size_t k);

}  // namespace nl2sql
