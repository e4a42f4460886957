#include <atomic>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nl2sql/augmenter.hpp"
#include "nl2sql/catalog.hpp"
#include "nl2sql/config.hpp"
#include "nl2sql/dataset.hpp"
#include "nl2sql/demo_retriever.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/eval_harness.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompt_builder.hpp"
#include "nl2sql/schema_filter.hpp"
#include "nl2sql/store.hpp"
#include "nl2sql/value_index.hpp"

namespace {

using namespace nl2sql;
using ordered_json = nlohmann::ordered_json;

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

// The config file is located before CLI11 builds the option set so that flag
// defaults can come from it and explicit flags still win.
PipelineConfig preload_config(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            return load_pipeline_config(argv[i + 1]);
        }
        if (arg.rfind("--config=", 0) == 0) {
            return load_pipeline_config(arg.substr(9));
        }
    }
    return PipelineConfig{};
}

DatabaseCatalog open_single_catalog(const std::string& db_path, const std::string& metadata_path,
                                    std::size_t values) {
    DatabaseCatalog catalog = introspect_database(db_path);
    std::vector<std::string> warnings;
    if (!metadata_path.empty()) {
        catalog = load_metadata_sidecar(std::move(catalog), metadata_path, &warnings);
    }
    if (values > 0) {
        catalog = sample_representative_values(std::move(catalog), values, &warnings);
    }
    print_warnings(warnings);
    return catalog;
}

std::unique_ptr<LlmGateway> make_gateway(const std::string& transcript_path,
                                         const GatewayConfig& config) {
    if (!transcript_path.empty()) {
        return std::make_unique<MockGateway>(MockGateway::from_transcript(transcript_path));
    }
    if (config.endpoint.empty()) {
        throw ConfigError("no gateway endpoint configured; pass --endpoint or --transcript");
    }
    return std::make_unique<HttpGateway>(config);
}

void emit(const ordered_json& doc) { std::cout << doc.dump(2) << "\n"; }

struct CatalogArgs {
    std::string db;
    std::string metadata;
    std::size_t values = 2;
    bool ddl = false;
    bool json = false;
};

void run_catalog(const CatalogArgs& args) {
    DatabaseCatalog catalog = open_single_catalog(args.db, args.metadata, args.values);
    if (args.json) {
        emit(catalog_to_json(catalog));
        return;
    }
    if (args.ddl) {
        std::cout << render_ddl(catalog) << "\n";
        return;
    }
    std::cout << "database " << catalog.db_id << " (" << catalog.tables.size() << " tables)\n";
    for (const auto& table : catalog.tables) {
        std::cout << "table " << table.name;
        if (table.comment) std::cout << "  -- " << *table.comment;
        std::cout << "\n";
        for (const auto& col : table.columns) {
            std::cout << "  " << col.name << " " << data_type_name(col.data_type);
            if (col.is_primary_key) std::cout << " [pk]";
            if (col.comment) std::cout << "  -- " << *col.comment;
            if (!col.representative_values.empty()) {
                std::cout << "  values:";
                for (const auto& v : col.representative_values) std::cout << " '" << v << "'";
            }
            std::cout << "\n";
        }
    }
    for (const auto& fk : catalog.foreign_keys) {
        std::cout << "foreign key " << fk.from_table << "." << fk.from_column << " = "
                  << fk.to_table << "." << fk.to_column << "\n";
    }
}

struct IndexBuildArgs {
    std::string db;
    std::string out;
    std::string metadata;
    IndexConfig index;
    bool json = false;
};

void run_index_build(const IndexBuildArgs& args) {
    DatabaseCatalog catalog = open_single_catalog(args.db, args.metadata, 0);
    ValueIndex index = build_index(catalog, args.index);
    index.save(args.out);
    ordered_json manifest = index_manifest(index, catalog.db_id);
    manifest["path"] = args.out;
    if (args.json) {
        emit(manifest);
    } else {
        std::cout << "indexed " << index.doc_count() << " values from " << catalog.db_id
                  << " -> " << args.out << "\n";
    }
}

struct IndexQueryArgs {
    std::string index_path;
    std::string question;
    std::size_t limit = 10;
    RetrievalConfig retrieval;
    bool json = false;
};

void run_index_query(const IndexQueryArgs& args) {
    ValueIndex index = ValueIndex::load(args.index_path);
    RetrievalStats stats;
    std::vector<ValueMatch> matches =
        retrieve_values(index, args.question, args.retrieval, &stats);
    if (matches.size() > args.limit) matches.resize(args.limit);
    if (args.json) {
        ordered_json doc;
        doc["question"] = args.question;
        doc["stats"] = {{"lcs_calls", stats.lcs_calls},
                        {"coarse_candidates", stats.coarse_candidates}};
        doc["matches"] = ordered_json::array();
        for (const auto& m : matches) {
            doc["matches"].push_back({{"table", m.table},
                                      {"column", m.column},
                                      {"value", m.value_text},
                                      {"coarse_score", m.coarse_score},
                                      {"fine_score", m.fine_score}});
        }
        emit(doc);
        return;
    }
    for (const auto& m : matches) {
        std::cout << m.table << "." << m.column << " = " << quote_sql_string(m.value_text)
                  << "  fine=" << m.fine_score << " coarse=" << m.coarse_score << "\n";
    }
    std::cerr << "lcs calls: " << stats.lcs_calls << " over " << stats.coarse_candidates
              << " coarse candidates\n";
}

struct PromptArgs {
    std::string db;
    std::string question;
    std::string evidence;
    std::string metadata;
    std::size_t values = 2;
    std::size_t budget = 8192;
    PromptConfig prompt;
    IndexConfig index;
    bool json = false;
};

void run_prompt(const PromptArgs& args) {
    DatabaseCatalog catalog = open_single_catalog(args.db, args.metadata, args.values);
    std::optional<ValueIndex> index;
    try {
        index = build_index(catalog, args.index);
    } catch (const EmptyIndexError&) {
        index.reset();
    }
    LexicalScorer scorer;
    std::optional<std::string> evidence;
    if (!args.evidence.empty()) evidence = args.evidence;
    PromptBundle bundle = build_db_prompt(args.question, evidence, catalog, scorer,
                                          index ? &*index : nullptr, args.prompt);
    bundle = truncate_to_budget(bundle, args.budget);
    if (args.json) {
        ordered_json doc;
        doc["format_version"] = kPromptFormatVersion;
        doc["db_id"] = catalog.db_id;
        doc["db_prompt"] = bundle.db_prompt;
        doc["question"] = bundle.question;
        if (bundle.external_knowledge) doc["external_knowledge"] = *bundle.external_knowledge;
        doc["estimated_tokens"] = bundle.estimated_tokens;
        doc["truncation_report"] = bundle.truncation_report;
        doc["text"] = bundle.full_text();
        emit(doc);
        return;
    }
    print_warnings(bundle.truncation_report);
    std::cout << bundle.full_text() << "\n";
}

struct DemosArgs {
    std::string train;
    std::string question;
    std::size_t k = 3;
    bool json = false;
};

void run_demos(const DemosArgs& args) {
    std::vector<Text2SqlSample> train = load_dataset_jsonl(args.train);
    TrigramSimilarity backend;
    DemoRetriever retriever(train, backend);
    std::vector<DemoScore> ranked = retriever.rank(args.question, args.k);
    if (args.json) {
        ordered_json doc;
        doc["question"] = args.question;
        doc["pattern"] = extract_pattern(args.question).pattern;
        doc["demos"] = ordered_json::array();
        for (const auto& d : ranked) {
            const auto& sample = retriever.train()[d.train_index];
            ordered_json entry;
            entry["train_index"] = d.train_index;
            entry["sample_id"] = sample.sample_id;
            entry["question"] = sample.question;
            if (sample.query) entry["sql"] = *sample.query;
            entry["score"] = d.score;
            entry["question_similarity"] = d.q_sim;
            entry["pattern_similarity"] = d.p_sim;
            doc["demos"].push_back(std::move(entry));
        }
        emit(doc);
        return;
    }
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& d = ranked[i];
        const auto& sample = retriever.train()[d.train_index];
        std::cout << (i + 1) << ". score=" << d.score << " (question=" << d.q_sim
                  << ", pattern=" << d.p_sim << ") " << sample.question << "\n";
    }
}

struct AugmentArgs {
    std::string db;
    std::string metadata;
    std::string seeds;
    std::string templates;
    std::string out;
    std::string transcript;
    std::size_t count = 10;
    double temperature = 0.9;
    std::uint64_t seed = 0;
    std::size_t values = 2;
    bool json = false;
};

void run_augment(const AugmentArgs& args, AugmentDirection direction,
                 const GatewayConfig& gateway_config) {
    DatabaseCatalog catalog = open_single_catalog(args.db, args.metadata, args.values);
    AugmentConfig config;
    config.temperature = args.temperature;
    config.rng_seed = args.seed;
    if (direction == AugmentDirection::Q2S) {
        config.q2s_count = args.count;
        config.seeds = load_seeds_jsonl(args.seeds);
    } else {
        config.s2q_count = args.count;
        TemplateStore store = load_template_store(args.templates);
        print_warnings(lint_templates(store.templates));
        config.templates = std::move(store.templates);
        config.refine_examples = std::move(store.refine_examples);
    }
    std::unique_ptr<LlmGateway> gateway = make_gateway(args.transcript, gateway_config);
    AugmentResult result = run_augmentation(config, *gateway, catalog);
    print_warnings(result.warnings);
    std::vector<Text2SqlSample> samples = augmented_to_samples(result, catalog.db_id);
    if (!args.out.empty()) {
        save_dataset_jsonl(samples, args.out);
        ordered_json summary;
        summary["direction"] = std::string(direction_name(direction));
        summary["requested"] = args.count;
        summary["produced"] = samples.size();
        summary["shortfall"] =
            direction == AugmentDirection::Q2S ? result.q2s_shortfall : result.s2q_shortfall;
        summary["output"] = args.out;
        if (args.json) {
            emit(summary);
        } else {
            std::cout << "wrote " << samples.size() << " pairs -> " << args.out << "\n";
        }
        return;
    }
    for (const auto& sample : samples) {
        std::cout << sample_to_json(sample).dump() << "\n";
    }
}

struct EvalArgs {
    std::string db_root;
    std::string gold;
    std::string pred;
    EvalConfig eval;
    bool json = false;
};

void run_eval(const EvalArgs& args) {
    std::vector<Text2SqlSample> gold = load_dataset_jsonl(args.gold);
    std::vector<Prediction> pred = load_predictions_jsonl(args.pred);
    CatalogStore store(args.db_root);
    EvalReport report = evaluate(
        gold, pred, [&](const std::string& db_id) { return store.db_path(db_id); }, args.eval);
    if (args.json) {
        emit(report_to_json(report));
    } else {
        std::cout << render_report_table(report);
    }
}

struct InferArgs {
    std::string db_root;
    std::string dataset;
    std::string train;
    std::string out;
    std::string transcript;
    std::size_t k = 3;
    std::size_t budget = 8192;
    std::size_t values = 2;
    std::size_t workers = 0;
    double exec_timeout_s = 30.0;
    PromptConfig prompt;
    IndexConfig index;
    bool json = false;
};

// catalog -> index -> demos -> prompt -> complete(n=4) -> first executable.
void run_infer(const InferArgs& args, const GatewayConfig& gateway_config) {
    std::vector<Text2SqlSample> dataset = load_dataset_jsonl(args.dataset);
    CatalogStore store(args.db_root, args.values, args.index);
    std::unique_ptr<LlmGateway> gateway = make_gateway(args.transcript, gateway_config);

    std::vector<Text2SqlSample> train;
    TrigramSimilarity backend;
    std::optional<DemoRetriever> retriever;
    if (!args.train.empty()) {
        train = load_dataset_jsonl(args.train);
        retriever.emplace(train, backend);
    }

    std::mutex store_mutex;
    LexicalScorer scorer;

    auto bundle_for = [&](const Text2SqlSample& sample) {
        const DbContext* ctx;
        {
            std::lock_guard<std::mutex> lock(store_mutex);
            ctx = &store.get(sample.db_id);
        }
        return build_db_prompt(sample.question, sample.evidence, ctx->catalog, scorer,
                               ctx->index ? &*ctx->index : nullptr, args.prompt);
    };

    auto infer_one = [&](const Text2SqlSample& sample) {
        std::vector<std::pair<PromptBundle, std::string>> demo_bundles;
        if (retriever && args.k > 0) {
            std::vector<DemoScore> ranked = retriever->rank(sample.question, args.k);
            // assemble_fewshot_input wants most relevant last.
            for (auto it = ranked.rbegin(); it != ranked.rend(); ++it) {
                const auto& demo = retriever->train()[it->train_index];
                if (!demo.query) continue;
                demo_bundles.emplace_back(bundle_for(demo), *demo.query);
            }
        }
        PromptBundle target = bundle_for(sample);
        std::string input = assemble_fewshot_input(demo_bundles, target, args.budget);

        CompletionRequest req;
        req.prompt = input;
        req.temperature = 0.0;
        req.n = 4;
        CompletionResponse resp = gateway->complete(req);

        std::filesystem::path db_path;
        {
            std::lock_guard<std::mutex> lock(store_mutex);
            db_path = store.db_path(sample.db_id);
        }
        SqliteDb db = SqliteDb::open_read_only(db_path);
        SelectedCandidate chosen = select_candidate(resp.candidates, db, args.exec_timeout_s);

        Prediction prediction;
        prediction.sample_id = sample.sample_id;
        prediction.candidates = {chosen.sql};
        return prediction;
    };

    std::vector<Prediction> predictions(dataset.size());
    std::size_t workers = args.workers > 0
                              ? args.workers
                              : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, dataset.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < dataset.size(); ++i) predictions[i] = infer_one(dataset[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= dataset.size()) return;
                try {
                    predictions[i] = infer_one(dataset[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    if (!args.out.empty()) {
        save_predictions_jsonl(predictions, args.out);
        if (args.json) {
            emit({{"samples", dataset.size()}, {"output", args.out}});
        } else {
            std::cout << "wrote " << predictions.size() << " predictions -> " << args.out
                      << "\n";
        }
        return;
    }
    for (const auto& p : predictions) {
        ordered_json line;
        line["sample_id"] = p.sample_id;
        line["candidates"] = p.candidates;
        std::cout << line.dump() << "\n";
    }
}

struct ExportSftArgs {
    std::string db_root;
    std::string dataset;
    std::string out;
    std::size_t values = 2;
    SftExportConfig config;
    IndexConfig index;
    bool json = false;
};

void run_export_sft(const ExportSftArgs& args) {
    std::vector<Text2SqlSample> dataset = load_dataset_jsonl(args.dataset);
    CatalogStore store(args.db_root, args.values, args.index);
    std::vector<SftPair> pairs = export_sft_pairs(dataset, store, args.config);
    save_sft_jsonl(pairs, args.out);
    if (args.json) {
        emit({{"pairs", pairs.size()}, {"output", args.out}});
    } else {
        std::cout << "wrote " << pairs.size() << " pairs -> " << args.out << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    PipelineConfig config;
    try {
        config = preload_config(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"text-to-SQL pipeline tooling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "nl2sql 0.1.0");
    std::string config_path;
    app.add_option("--config", config_path, "pipeline config JSON (flags override)");

    CatalogArgs catalog_args;
    catalog_args.values = config.representative_values;
    auto* catalog_cmd = app.add_subcommand("catalog", "introspect a SQLite database");
    catalog_cmd->add_option("--db", catalog_args.db, "SQLite file")->required();
    catalog_cmd->add_option("--metadata", catalog_args.metadata, "metadata sidecar JSON");
    catalog_cmd->add_option("--values", catalog_args.values, "representative values per column");
    catalog_cmd->add_flag("--ddl", catalog_args.ddl, "print CREATE TABLE statements");
    catalog_cmd->add_flag("--json", catalog_args.json, "machine-readable output");
    catalog_cmd->callback([&] { run_catalog(catalog_args); });

    auto* index_cmd = app.add_subcommand("index", "build or query a value index");
    index_cmd->require_subcommand(1);

    IndexBuildArgs index_build_args;
    index_build_args.index = config.index;
    auto* index_build_cmd = index_cmd->add_subcommand("build", "index distinct cell values");
    index_build_cmd->add_option("--db", index_build_args.db, "SQLite file")->required();
    index_build_cmd->add_option("--out", index_build_args.out, "output index file")->required();
    index_build_cmd->add_option("--metadata", index_build_args.metadata, "metadata sidecar JSON");
    index_build_cmd->add_option("--cap", index_build_args.index.index_value_cap,
                                "max characters indexed per value");
    index_build_cmd->add_flag("--non-text", index_build_args.index.index_non_text,
                              "index numeric columns too");
    index_build_cmd->add_flag("--json", index_build_args.json, "machine-readable output");
    index_build_cmd->callback([&] { run_index_build(index_build_args); });

    IndexQueryArgs index_query_args;
    index_query_args.retrieval = config.retrieval;
    auto* index_query_cmd = index_cmd->add_subcommand("query", "coarse-to-fine value retrieval");
    index_query_cmd->add_option("--index", index_query_args.index_path, "index file")->required();
    index_query_cmd->add_option("--question", index_query_args.question, "question text")
        ->required();
    index_query_cmd->add_option("--limit", index_query_args.limit, "max matches printed");
    index_query_cmd->add_option("--coarse", index_query_args.retrieval.coarse_candidates,
                                "coarse candidate count");
    index_query_cmd->add_flag("--json", index_query_args.json, "machine-readable output");
    index_query_cmd->callback([&] { run_index_query(index_query_args); });

    PromptArgs prompt_args;
    prompt_args.values = config.representative_values;
    prompt_args.budget = config.token_budget;
    prompt_args.prompt = {config.filter, config.retrieval};
    prompt_args.index = config.index;
    auto* prompt_cmd = app.add_subcommand("prompt", "build a database prompt for a question");
    prompt_cmd->add_option("--db", prompt_args.db, "SQLite file")->required();
    prompt_cmd->add_option("--question", prompt_args.question, "question text")->required();
    prompt_cmd->add_option("--ek,--evidence", prompt_args.evidence, "external knowledge text");
    prompt_cmd->add_option("--metadata", prompt_args.metadata, "metadata sidecar JSON");
    prompt_cmd->add_option("--values", prompt_args.values, "representative values per column");
    prompt_cmd->add_option("--budget", prompt_args.budget, "token budget");
    prompt_cmd->add_option("--top-k1", prompt_args.prompt.filter.top_k1, "tables kept");
    prompt_cmd->add_option("--top-k2", prompt_args.prompt.filter.top_k2, "columns kept per table");
    prompt_cmd->add_flag("--json", prompt_args.json, "machine-readable output");
    prompt_cmd->callback([&] { run_prompt(prompt_args); });

    DemosArgs demos_args;
    demos_args.k = config.demo_count;
    auto* demos_cmd = app.add_subcommand("demos", "rank demonstrations for a question");
    demos_cmd->add_option("--train", demos_args.train, "training pool JSONL")->required();
    demos_cmd->add_option("--question", demos_args.question, "question text")->required();
    demos_cmd->add_option("-k,--k", demos_args.k, "demonstrations returned");
    demos_cmd->add_flag("--json", demos_args.json, "machine-readable output");
    demos_cmd->callback([&] { run_demos(demos_args); });

    AugmentArgs augment_args;
    augment_args.values = config.representative_values;
    auto* augment_cmd = app.add_subcommand("augment", "synthesize (question, SQL) pairs");
    augment_cmd->require_subcommand(1);
    auto add_augment_common = [&](CLI::App* cmd) {
        cmd->add_option("--db", augment_args.db, "SQLite file")->required();
        cmd->add_option("--metadata", augment_args.metadata, "metadata sidecar JSON");
        cmd->add_option("--out", augment_args.out, "output JSONL (stdout when omitted)");
        cmd->add_option("--count", augment_args.count, "pairs requested");
        cmd->add_option("--temperature", augment_args.temperature, "sampling temperature");
        cmd->add_option("--seed", augment_args.seed, "RNG seed");
        cmd->add_option("--values", augment_args.values, "representative values per column");
        cmd->add_option("--transcript", augment_args.transcript, "mock gateway transcript JSON");
        cmd->add_option("--endpoint", config.gateway.endpoint, "completion endpoint URL");
        cmd->add_option("--model", config.gateway.model, "model name sent to the endpoint");
        cmd->add_flag("--json", augment_args.json, "machine-readable output");
    };
    auto* q2s_cmd = augment_cmd->add_subcommand("q2s", "new questions from seed pairs");
    add_augment_common(q2s_cmd);
    q2s_cmd->add_option("--seeds", augment_args.seeds, "seed pairs JSONL")->required();
    q2s_cmd->callback([&] { run_augment(augment_args, AugmentDirection::Q2S, config.gateway); });
    auto* s2q_cmd = augment_cmd->add_subcommand("s2q", "questions for templated SQL");
    add_augment_common(s2q_cmd);
    s2q_cmd->add_option("--templates", augment_args.templates, "template store JSON")->required();
    s2q_cmd->callback([&] { run_augment(augment_args, AugmentDirection::S2Q, config.gateway); });

    EvalArgs eval_args;
    eval_args.eval = config.eval;
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold SQL");
    eval_cmd->add_option("--dbs,--db-root", eval_args.db_root, "directory of SQLite databases")
        ->required();
    eval_cmd->add_option("--gold", eval_args.gold, "gold dataset JSONL")->required();
    eval_cmd->add_option("--pred", eval_args.pred, "predictions JSONL")->required();
    eval_cmd->add_option("--ves-runs", eval_args.eval.ves_runs, "timing runs per query");
    eval_cmd->add_option("--timeout", eval_args.eval.timeout_s, "per-query timeout seconds");
    eval_cmd->add_option("--tol", eval_args.eval.float_tol, "float comparison tolerance");
    eval_cmd->add_flag("--json", eval_args.json, "machine-readable output");
    eval_cmd->callback([&] { run_eval(eval_args); });

    InferArgs infer_args;
    infer_args.k = config.demo_count;
    infer_args.budget = config.token_budget;
    infer_args.values = config.representative_values;
    infer_args.prompt = {config.filter, config.retrieval};
    infer_args.index = config.index;
    infer_args.exec_timeout_s = config.eval.timeout_s;
    auto* infer_cmd = app.add_subcommand("infer", "predict SQL for a dataset");
    infer_cmd->add_option("--dbs,--db-root", infer_args.db_root, "directory of SQLite databases")
        ->required();
    infer_cmd->add_option("--dataset", infer_args.dataset, "dataset JSONL")->required();
    infer_cmd->add_option("--train", infer_args.train, "training pool JSONL for demonstrations");
    infer_cmd->add_option("--out", infer_args.out, "predictions JSONL (stdout when omitted)");
    infer_cmd->add_option("--transcript", infer_args.transcript, "mock gateway transcript JSON");
    infer_cmd->add_option("--endpoint", config.gateway.endpoint, "completion endpoint URL");
    infer_cmd->add_option("--model", config.gateway.model, "model name sent to the endpoint");
    infer_cmd->add_option("-k,--k", infer_args.k, "demonstrations per sample");
    infer_cmd->add_option("--budget", infer_args.budget, "token budget");
    infer_cmd->add_option("--workers", infer_args.workers, "worker threads (0 = logical cores)");
    infer_cmd->add_flag("--json", infer_args.json, "machine-readable output");
    infer_cmd->callback([&] { run_infer(infer_args, config.gateway); });

    ExportSftArgs sft_args;
    sft_args.values = config.representative_values;
    sft_args.config.filter = config.filter;
    sft_args.config.retrieval = config.retrieval;
    sft_args.config.token_budget = config.token_budget;
    sft_args.index = config.index;
    auto* sft_cmd = app.add_subcommand("export-sft", "emit fine-tuning pairs for a dataset");
    sft_cmd->add_option("--dbs,--db-root", sft_args.db_root, "directory of SQLite databases")
        ->required();
    sft_cmd->add_option("--dataset", sft_args.dataset, "dataset JSONL with gold SQL")->required();
    sft_cmd->add_option("--out", sft_args.out, "output JSONL")->required();
    sft_cmd->add_option("--budget", sft_args.config.token_budget, "token budget");
    sft_cmd->add_option("--padding-seed", sft_args.config.filter.padding_seed, "padding RNG seed");
    sft_cmd->add_flag("--json", sft_args.json, "machine-readable output");
    sft_cmd->callback([&] { run_export_sft(sft_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const GatewayError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ScorerError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
