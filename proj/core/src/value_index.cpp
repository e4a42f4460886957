#include "nl2sql/value_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "nl2sql/errors.hpp"
#include "nl2sql/sqlite_db.hpp"
#include "nl2sql/text_util.hpp"

namespace nl2sql {

namespace {

constexpr char kMagic[8] = {'N', 'L', 'Q', 'V', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(out, bits);
}

void write_str(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw FormatError("truncated index file");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw FormatError("truncated index file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

double read_f64(std::istream& in) {
    std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string read_str(std::istream& in) {
    std::uint64_t n = read_u64(in);
    if (n > (1ull << 32)) throw FormatError("corrupt string length in index file");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw FormatError("truncated index file");
    return s;
}

}  // namespace

ValueIndex ValueIndex::build(const std::vector<ValueDocument>& documents, double k1, double b,
                             std::size_t value_cap) {
    if (documents.empty()) {
        throw EmptyIndexError("no values to index");
    }
    ValueIndex idx;
    idx.k1_ = k1;
    idx.b_ = b;
    idx.value_cap_ = value_cap;
    idx.documents_ = documents;
    idx.doc_lengths_.resize(documents.size(), 0);

    std::uint64_t total_len = 0;
    for (std::size_t i = 0; i < idx.documents_.size(); ++i) {
        auto& doc = idx.documents_[i];
        doc.doc_id = static_cast<std::uint32_t>(i);
        std::string_view indexed(doc.value_text);
        if (indexed.size() > value_cap) indexed = indexed.substr(0, value_cap);
        auto tokens = tokenize(indexed);
        idx.doc_lengths_[i] = static_cast<std::uint32_t>(tokens.size());
        total_len += tokens.size();

        std::map<std::string, std::uint32_t> tf;
        for (auto& tok : tokens) ++tf[tok];
        for (auto& [term, count] : tf) {
            idx.postings_[term].push_back({doc.doc_id, count});
        }
    }
    idx.avg_doc_length_ =
        idx.documents_.empty() ? 0.0
                               : static_cast<double>(total_len) / static_cast<double>(idx.documents_.size());
    return idx;
}

const ValueDocument& ValueIndex::document(std::uint32_t doc_id) const {
    if (doc_id >= documents_.size()) throw DataError("doc_id out of range");
    return documents_[doc_id];
}

double ValueIndex::idf(std::size_t doc_freq) const {
    double n = static_cast<double>(documents_.size());
    double df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double ValueIndex::tf_component(std::uint32_t tf, std::uint32_t doc_len) const {
    double tfd = static_cast<double>(tf);
    double norm = 1.0 - b_ + b_ * (static_cast<double>(doc_len) / avg_doc_length_);
    return tfd * (k1_ + 1.0) / (tfd + k1_ * norm);
}

double ValueIndex::score(std::uint32_t doc_id, const std::vector<std::string>& query_tokens) const {
    double total = 0.0;
    for (const auto& term : query_tokens) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& plist = it->second;
        auto pit = std::lower_bound(plist.begin(), plist.end(), doc_id,
                                    [](const Posting& p, std::uint32_t id) { return p.doc_id < id; });
        if (pit == plist.end() || pit->doc_id != doc_id) continue;
        total += idf(plist.size()) * tf_component(pit->term_frequency, doc_lengths_[doc_id]);
    }
    return total;
}

void ValueIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write index file: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kFormatVersion);
    write_u64(out, documents_.size());
    write_f64(out, avg_doc_length_);
    write_f64(out, k1_);
    write_f64(out, b_);
    write_u64(out, value_cap_);
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        const auto& d = documents_[i];
        write_u32(out, d.doc_id);
        write_str(out, d.table);
        write_str(out, d.column);
        write_str(out, d.value_text);
        write_u32(out, doc_lengths_[i]);
    }
    // Terms sorted so the file is byte-identical across rebuilds.
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });
    write_u64(out, terms.size());
    for (const auto* term : terms) {
        write_str(out, *term);
        const auto& plist = postings_.at(*term);
        write_u64(out, plist.size());
        for (const auto& p : plist) {
            write_u32(out, p.doc_id);
            write_u32(out, p.term_frequency);
        }
    }
    if (!out) throw IoError("failed while writing index file: " + path.string());
}

ValueIndex ValueIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a value index file: " + path.string());
    }
    std::uint32_t version = read_u32(in);
    if (version != kFormatVersion) {
        throw FormatError("unsupported index format version " + std::to_string(version));
    }
    ValueIndex idx;
    std::uint64_t doc_count = read_u64(in);
    idx.avg_doc_length_ = read_f64(in);
    idx.k1_ = read_f64(in);
    idx.b_ = read_f64(in);
    idx.value_cap_ = read_u64(in);
    idx.documents_.resize(doc_count);
    idx.doc_lengths_.resize(doc_count);
    for (std::uint64_t i = 0; i < doc_count; ++i) {
        ValueDocument d;
        d.doc_id = read_u32(in);
        d.table = read_str(in);
        d.column = read_str(in);
        d.value_text = read_str(in);
        if (d.doc_id != i) throw FormatError("non-contiguous doc ids in index file");
        idx.doc_lengths_[i] = read_u32(in);
        idx.documents_[i] = std::move(d);
    }
    std::uint64_t term_count = read_u64(in);
    for (std::uint64_t i = 0; i < term_count; ++i) {
        std::string term = read_str(in);
        std::uint64_t plen = read_u64(in);
        auto& plist = idx.postings_[std::move(term)];
        plist.resize(plen);
        for (std::uint64_t j = 0; j < plen; ++j) {
            plist[j].doc_id = read_u32(in);
            plist[j].term_frequency = read_u32(in);
            if (plist[j].doc_id >= doc_count) {
                throw FormatError("posting references unknown document");
            }
        }
    }
    if (idx.documents_.empty()) throw EmptyIndexError("index file contains no documents");
    return idx;
}

ValueIndex build_index(const DatabaseCatalog& catalog, const IndexConfig& config) {
    SqliteDb db = SqliteDb::open_read_only(catalog.source_path);
    std::vector<ValueDocument> docs;
    for (const auto& table : catalog.tables) {
        for (const auto& col : table.columns) {
            bool textual = col.data_type == DataType::Text;
            if (!textual && !config.index_non_text) continue;
            Statement stmt = db.prepare("SELECT DISTINCT " + quote_identifier(col.name) +
                                        " FROM " + quote_identifier(table.name) + " WHERE " +
                                        quote_identifier(col.name) + " IS NOT NULL");
            while (stmt.step()) {
                auto text = stmt.column(0).render_text();
                if (!text || trim(*text).empty()) continue;
                ValueDocument doc;
                doc.table = table.name;
                doc.column = col.name;
                doc.value_text = *text;
                docs.push_back(std::move(doc));
            }
        }
    }
    return ValueIndex::build(docs, config.bm25_k1, config.bm25_b, config.index_value_cap);
}

std::vector<std::pair<std::uint32_t, double>> coarse_search(const ValueIndex& index,
                                                            const std::string& question,
                                                            std::size_t limit) {
    auto tokens = tokenize(question);
    if (tokens.empty() || limit == 0) return {};

    std::unordered_map<std::uint32_t, double> scores;
    for (const auto& term : tokens) {
        auto it = index.postings().find(term);
        if (it == index.postings().end()) continue;
        const auto& plist = it->second;
        double n = static_cast<double>(index.doc_count());
        double df = static_cast<double>(plist.size());
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : plist) {
            double tf = static_cast<double>(p.term_frequency);
            double dl = static_cast<double>(index.doc_length(p.doc_id));
            double norm = 1.0 - index.b() + index.b() * (dl / index.avg_doc_length());
            scores[p.doc_id] += idf * tf * (index.k1() + 1.0) / (tf + index.k1() * norm);
        }
    }

    std::vector<std::pair<std::uint32_t, double>> ranked(scores.begin(), scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > limit) ranked.resize(limit);
    return ranked;
}

std::size_t lcs_length(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return 0;
    // Roll two rows of the classic DP over suffix-aligned substring lengths.
    const std::string_view shorter = a.size() <= b.size() ? a : b;
    const std::string_view longer = a.size() <= b.size() ? b : a;
    std::vector<std::size_t> prev(shorter.size() + 1, 0);
    std::vector<std::size_t> cur(shorter.size() + 1, 0);
    std::size_t best = 0;
    auto lower = [](char c) { return std::tolower(static_cast<unsigned char>(c)); };
    for (std::size_t i = 1; i <= longer.size(); ++i) {
        for (std::size_t j = 1; j <= shorter.size(); ++j) {
            if (lower(longer[i - 1]) == lower(shorter[j - 1])) {
                cur[j] = prev[j - 1] + 1;
                best = std::max(best, cur[j]);
            } else {
                cur[j] = 0;
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

double match_degree(std::string_view question, std::string_view value_text, std::size_t min_span) {
    if (value_text.empty()) return 0.0;
    std::size_t lcs = lcs_length(question, value_text);
    if (lcs < min_span) return 0.0;
    double degree = static_cast<double>(lcs) / static_cast<double>(value_text.size());
    return std::clamp(degree, 0.0, 1.0);
}

std::vector<ValueMatch> retrieve_values(const ValueIndex& index, const std::string& question,
                                        const RetrievalConfig& config, RetrievalStats* stats) {
    if (index.doc_count() == 0) throw EmptyIndexError("retrieve_values requires a nonempty index");

    auto coarse = coarse_search(index, question, config.coarse_candidates);
    if (stats != nullptr) stats->coarse_candidates = coarse.size();

    struct Scored {
        ValueMatch match;
        std::uint32_t doc_id = 0;
    };
    std::vector<Scored> kept;
    for (const auto& [doc_id, coarse_score] : coarse) {
        const auto& doc = index.document(doc_id);
        if (stats != nullptr) ++stats->lcs_calls;
        double fine = match_degree(question, doc.value_text, config.min_span);
        if (fine < config.fine_threshold) continue;
        kept.push_back({{doc.table, doc.column, doc.value_text, coarse_score, fine}, doc_id});
    }

    std::sort(kept.begin(), kept.end(), [](const Scored& a, const Scored& b) {
        if (a.match.fine_score != b.match.fine_score) return a.match.fine_score > b.match.fine_score;
        if (a.match.coarse_score != b.match.coarse_score)
            return a.match.coarse_score > b.match.coarse_score;
        return a.doc_id < b.doc_id;
    });

    std::map<std::pair<std::string, std::string>, std::size_t> per_column;
    std::vector<ValueMatch> out;
    for (auto& s : kept) {
        auto key = std::make_pair(s.match.table, s.match.column);
        if (per_column[key] >= config.per_column_keep) continue;
        ++per_column[key];
        out.push_back(std::move(s.match));
    }
    return out;
}

nlohmann::ordered_json index_manifest(const ValueIndex& index, const std::string& db_id) {
    nlohmann::ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["db_id"] = db_id;
    doc["doc_count"] = index.doc_count();
    doc["avg_doc_length"] = index.avg_doc_length();
    doc["bm25_k1"] = index.k1();
    doc["bm25_b"] = index.b();
    doc["index_value_cap"] = index.value_cap();
    return doc;
}

}  // namespace nl2sql
