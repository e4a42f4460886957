#include "nl2sql/dataset.hpp"

#include <fstream>

#include "nl2sql/errors.hpp"

namespace nl2sql {

namespace {

nlohmann::json parse_line(const std::string& line, const std::filesystem::path& path,
                          std::size_t line_no) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("invalid JSON at " + path.string() + ":" + std::to_string(line_no) +
                          ": " + e.what());
    }
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

Text2SqlSample sample_from_json(const nlohmann::json& doc, const std::string& default_id) {
    if (!doc.is_object()) throw FormatError("dataset line must be a JSON object");
    Text2SqlSample s;
    try {
        s.sample_id = doc.value("sample_id", default_id);
        s.db_id = doc.at("db_id").get<std::string>();
        s.question = doc.at("question").get<std::string>();
        if (doc.contains("query") && !doc.at("query").is_null()) {
            s.query = doc.at("query").get<std::string>();
        }
        if (doc.contains("evidence") && !doc.at("evidence").is_null()) {
            std::string ev = doc.at("evidence").get<std::string>();
            if (!ev.empty()) s.evidence = std::move(ev);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed dataset record: ") + e.what());
    }
    return s;
}

nlohmann::ordered_json sample_to_json(const Text2SqlSample& sample) {
    nlohmann::ordered_json doc;
    doc["sample_id"] = sample.sample_id;
    doc["db_id"] = sample.db_id;
    doc["question"] = sample.question;
    if (sample.query) doc["query"] = *sample.query;
    if (sample.evidence) doc["evidence"] = *sample.evidence;
    return doc;
}

std::vector<Text2SqlSample> load_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path.string());
    std::vector<Text2SqlSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        auto doc = parse_line(line, path, line_no);
        samples.push_back(sample_from_json(doc, std::to_string(samples.size())));
    }
    return samples;
}

void save_dataset_jsonl(const std::vector<Text2SqlSample>& samples,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write dataset file: " + path.string());
    for (const auto& s : samples) {
        out << sample_to_json(s).dump() << "\n";
    }
    if (!out) throw IoError("failed while writing dataset file: " + path.string());
}

std::vector<Prediction> load_predictions_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions file: " + path.string());
    std::vector<Prediction> preds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        auto doc = parse_line(line, path, line_no);
        Prediction p;
        try {
            p.sample_id = doc.at("sample_id").get<std::string>();
            p.candidates = doc.at("candidates").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed prediction at " + path.string() + ":" +
                              std::to_string(line_no) + ": " + e.what());
        }
        preds.push_back(std::move(p));
    }
    return preds;
}

void save_predictions_jsonl(const std::vector<Prediction>& predictions,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write predictions file: " + path.string());
    for (const auto& p : predictions) {
        nlohmann::ordered_json doc;
        doc["sample_id"] = p.sample_id;
        doc["candidates"] = p.candidates;
        out << doc.dump() << "\n";
    }
    if (!out) throw IoError("failed while writing predictions file: " + path.string());
}

}  // namespace nl2sql
