#include <fstream>

#include "nl2sql/errors.hpp"
#include "nl2sql/prompt_builder.hpp"
#include "nl2sql/store.hpp"

namespace nl2sql {

namespace {

// Gold schema items must survive truncation; a training input that hides a
// table the gold SQL uses is poison.
void check_gold_coverage(const FilteredSchema& filtered, const PromptPlan& plan,
                         const std::string& sample_id) {
    auto column_alive = [&](const std::string& table, const std::string& column) {
        for (const auto& pt : plan.tables) {
            if (pt.name != table) continue;
            for (const auto& pc : pt.columns) {
                if (pc.name == column) return true;
            }
        }
        return false;
    };
    auto table_alive = [&](const std::string& table) {
        for (const auto& pt : plan.tables) {
            if (pt.name == table && !pt.columns.empty()) return true;
        }
        return false;
    };
    for (const auto& ft : filtered.kept) {
        bool table_gold = ft.provenance == Provenance::Gold;
        if (table_gold && !table_alive(ft.name)) {
            throw BudgetError("token budget drops gold table " + ft.name + " for sample " +
                              sample_id);
        }
        for (const auto& fc : ft.columns) {
            if (fc.provenance != Provenance::Gold) continue;
            if (!column_alive(ft.name, fc.name)) {
                throw BudgetError("token budget drops gold column " + ft.name + "." + fc.name +
                                  " for sample " + sample_id);
            }
        }
    }
}

}  // namespace

std::vector<SftPair> export_sft_pairs(const std::vector<Text2SqlSample>& dataset,
                                      CatalogStore& store, const SftExportConfig& config) {
    std::vector<SftPair> pairs;
    pairs.reserve(dataset.size());
    for (const auto& sample : dataset) {
        if (!sample.query) {
            throw DataError("sample " + sample.sample_id + " has no gold SQL to export");
        }
        const DbContext& ctx = store.get(sample.db_id);
        FilteredSchema filtered = pad_training_schema(sample, ctx.catalog, config.filter);

        std::vector<ValueMatch> matches;
        if (ctx.index) {
            matches = retrieve_values(*ctx.index, sample.question, config.retrieval);
        }

        PromptBundle bundle;
        bundle.plan = make_plan(ctx.catalog, filtered, nullptr, matches);
        bundle.db_prompt = render_db_prompt(bundle.plan);
        bundle.question = sample.question;
        bundle.external_knowledge = sample.evidence;
        bundle.estimated_tokens = estimate_tokens(bundle.full_text());

        bundle = truncate_to_budget(bundle, config.token_budget);
        check_gold_coverage(filtered, bundle.plan, sample.sample_id);

        pairs.push_back({bundle.full_text(), *sample.query});
    }
    return pairs;
}

void save_sft_jsonl(const std::vector<SftPair>& pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write SFT file: " + path.string());
    for (const auto& p : pairs) {
        nlohmann::ordered_json doc;
        doc["input"] = p.input;
        doc["output"] = p.output;
        out << doc.dump() << "\n";
    }
    if (!out) throw IoError("failed while writing SFT file: " + path.string());
}

}  // namespace nl2sql
