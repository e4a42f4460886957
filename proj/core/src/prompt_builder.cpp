#include "nl2sql/prompt_builder.hpp"

#include <algorithm>
#include <numeric>

#include "nl2sql/errors.hpp"
#include "nl2sql/sqlite_db.hpp"

namespace nl2sql {

namespace {

// Newlines inside comments and values would break the line-oriented grammar.
std::string sanitize(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    }
    return out;
}

std::string render_column_entry(const PlanColumn& col, bool with_values, bool with_comment) {
    std::string entry = col.table + "." + col.name;
    std::vector<std::string> parts;
    if (col.type != DataType::Unknown) parts.emplace_back(data_type_name(col.type));
    if (with_comment && col.comment) parts.push_back("comment : " + sanitize(*col.comment));
    if (with_values && !col.values.empty()) {
        std::string vals = "values : ";
        for (std::size_t i = 0; i < col.values.size(); ++i) {
            if (i > 0) vals += " , ";
            vals += sanitize(col.values[i]);
        }
        parts.push_back(std::move(vals));
    }
    if (col.primary_key) parts.emplace_back("primary key");
    if (parts.empty()) return entry;
    entry += " ( ";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) entry += " | ";
        entry += parts[i];
    }
    entry += " )";
    return entry;
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) {
    return HeuristicTokenEstimator{}.count(text);
}

std::string PromptBundle::full_text() const {
    std::string out = db_prompt;
    if (!out.empty()) out += "\n";
    out += "question : " + question;
    if (external_knowledge) out += "\nexternal knowledge : " + *external_knowledge;
    return out;
}

std::string render_db_prompt(const PromptPlan& plan) {
    std::string out;
    for (const auto& table : plan.tables) {
        if (table.columns.empty()) continue;
        if (!out.empty()) out += "\n";
        out += "table " + table.name + " , columns = [ ";
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            if (i > 0) out += " , ";
            out += render_column_entry(table.columns[i], true, true);
        }
        out += " ]";
    }
    for (const auto& fk : plan.foreign_keys) {
        if (!out.empty()) out += "\n";
        out += "foreign keys : " + fk.from_table + "." + fk.from_column + " = " + fk.to_table +
               "." + fk.to_column;
    }
    for (const auto& m : plan.matches) {
        if (!out.empty()) out += "\n";
        out += "matched values : " + m.table + "." + m.column + " = " +
               quote_sql_string(sanitize(m.value_text));
    }
    return out;
}

PromptPlan make_plan(const DatabaseCatalog& catalog, const FilteredSchema& filtered,
                     const SchemaRelevance* relevance, const std::vector<ValueMatch>& matches) {
    PromptPlan plan;
    for (const auto& ft : filtered.kept) {
        const TableInfo* table = catalog.find_table(ft.name);
        if (table == nullptr) throw DataError("filtered schema references unknown table " + ft.name);
        PlanTable pt;
        pt.name = table->name;
        pt.provenance = ft.provenance;
        if (relevance != nullptr) {
            auto it = relevance->table_scores.find(table->name);
            pt.score = it != relevance->table_scores.end() ? it->second : 0.0;
        } else {
            pt.score = ft.provenance == Provenance::Gold ? 1.0 : 0.0;
        }
        for (const auto& fc : ft.columns) {
            const ColumnInfo* col = table->find_column(fc.name);
            if (col == nullptr) {
                throw DataError("filtered schema references unknown column " + ft.name + "." +
                                fc.name);
            }
            PlanColumn pc;
            pc.table = table->name;
            pc.name = col->name;
            pc.type = col->data_type;
            pc.comment = col->comment;
            pc.values = col->representative_values;
            pc.primary_key = col->is_primary_key;
            pc.provenance = fc.provenance;
            if (relevance != nullptr) {
                auto it = relevance->column_scores.find({table->name, col->name});
                pc.score = it != relevance->column_scores.end() ? it->second : 0.0;
            } else {
                pc.score = fc.provenance == Provenance::Gold ? 1.0 : 0.0;
            }
            pt.columns.push_back(std::move(pc));
        }
        plan.tables.push_back(std::move(pt));
    }

    auto column_kept = [&](const std::string& table, const std::string& column) {
        for (const auto& pt : plan.tables) {
            if (pt.name != table) continue;
            for (const auto& pc : pt.columns) {
                if (pc.name == column) return true;
            }
        }
        return false;
    };

    for (const auto& fk : catalog.foreign_keys) {
        if (column_kept(fk.from_table, fk.from_column) && column_kept(fk.to_table, fk.to_column)) {
            plan.foreign_keys.push_back(fk);
        }
    }
    for (const auto& m : matches) {
        if (column_kept(m.table, m.column)) plan.matches.push_back(m);
    }
    return plan;
}

PromptBundle build_db_prompt(const std::string& question,
                             const std::optional<std::string>& external_knowledge,
                             const DatabaseCatalog& catalog, RelevanceScorer& scorer,
                             const ValueIndex* index, const PromptConfig& config) {
    SchemaRelevance relevance = score_schema(question, catalog, scorer);
    FilteredSchema filtered = filter_schema(catalog, relevance, config.filter);
    std::vector<ValueMatch> matches;
    if (index != nullptr && index->doc_count() > 0) {
        matches = retrieve_values(*index, question, config.retrieval);
    }
    PromptBundle bundle;
    bundle.plan = make_plan(catalog, filtered, &relevance, matches);
    bundle.db_prompt = render_db_prompt(bundle.plan);
    bundle.question = question;
    bundle.external_knowledge = external_knowledge;
    bundle.estimated_tokens = estimate_tokens(bundle.full_text());
    return bundle;
}

namespace {

// One reversible removal in the fixed truncation order. Phases run in
// sequence; binary search picks the shortest prefix of actions that fits.
struct DropAction {
    enum class Kind { Column, Values, Comment, Match };
    Kind kind;
    std::size_t table_idx = 0;
    std::size_t column_idx = 0;
    std::size_t match_idx = 0;
};

struct DropState {
    std::vector<std::vector<bool>> column_dropped;
    std::vector<std::vector<bool>> values_dropped;
    std::vector<std::vector<bool>> comment_dropped;
    std::vector<bool> match_dropped;
};

// Tables ordered worst-first: score ascending, later plan position first on
// ties. Columns within a table likewise.
std::vector<DropAction> action_sequence(const PromptPlan& plan) {
    std::vector<std::size_t> table_order(plan.tables.size());
    std::iota(table_order.begin(), table_order.end(), 0);
    std::stable_sort(table_order.begin(), table_order.end(), [&](std::size_t a, std::size_t b) {
        if (plan.tables[a].score != plan.tables[b].score) {
            return plan.tables[a].score < plan.tables[b].score;
        }
        return a > b;
    });

    std::vector<std::vector<std::size_t>> column_orders(plan.tables.size());
    for (std::size_t ti = 0; ti < plan.tables.size(); ++ti) {
        auto& order = column_orders[ti];
        order.resize(plan.tables[ti].columns.size());
        std::iota(order.begin(), order.end(), 0);
        const auto& cols = plan.tables[ti].columns;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (cols[a].score != cols[b].score) return cols[a].score < cols[b].score;
            return a > b;
        });
    }

    std::vector<DropAction> actions;
    for (std::size_t ti : table_order) {
        for (std::size_t ci : column_orders[ti]) {
            actions.push_back({DropAction::Kind::Column, ti, ci, 0});
        }
    }
    for (std::size_t ti : table_order) {
        for (std::size_t ci : column_orders[ti]) {
            actions.push_back({DropAction::Kind::Values, ti, ci, 0});
        }
    }
    for (std::size_t ti : table_order) {
        for (std::size_t ci : column_orders[ti]) {
            actions.push_back({DropAction::Kind::Comment, ti, ci, 0});
        }
    }
    // Matched values go last, lowest-ranked match first.
    for (std::size_t mi = plan.matches.size(); mi-- > 0;) {
        actions.push_back({DropAction::Kind::Match, 0, 0, mi});
    }
    return actions;
}

DropState apply_actions(const PromptPlan& plan, const std::vector<DropAction>& actions,
                        std::size_t count) {
    DropState state;
    state.column_dropped.resize(plan.tables.size());
    state.values_dropped.resize(plan.tables.size());
    state.comment_dropped.resize(plan.tables.size());
    for (std::size_t ti = 0; ti < plan.tables.size(); ++ti) {
        state.column_dropped[ti].assign(plan.tables[ti].columns.size(), false);
        state.values_dropped[ti].assign(plan.tables[ti].columns.size(), false);
        state.comment_dropped[ti].assign(plan.tables[ti].columns.size(), false);
    }
    state.match_dropped.assign(plan.matches.size(), false);
    for (std::size_t i = 0; i < count && i < actions.size(); ++i) {
        const auto& a = actions[i];
        switch (a.kind) {
            case DropAction::Kind::Column: state.column_dropped[a.table_idx][a.column_idx] = true; break;
            case DropAction::Kind::Values: state.values_dropped[a.table_idx][a.column_idx] = true; break;
            case DropAction::Kind::Comment: state.comment_dropped[a.table_idx][a.column_idx] = true; break;
            case DropAction::Kind::Match: state.match_dropped[a.match_idx] = true; break;
        }
    }
    return state;
}

// Rebuilds the plan with drops applied. FK lines and matches referencing a
// dropped column leave with it.
PromptPlan reduced_plan(const PromptPlan& plan, const DropState& state) {
    PromptPlan out;
    for (std::size_t ti = 0; ti < plan.tables.size(); ++ti) {
        PlanTable pt = plan.tables[ti];
        pt.columns.clear();
        for (std::size_t ci = 0; ci < plan.tables[ti].columns.size(); ++ci) {
            if (state.column_dropped[ti][ci]) continue;
            PlanColumn pc = plan.tables[ti].columns[ci];
            if (state.values_dropped[ti][ci]) pc.values.clear();
            if (state.comment_dropped[ti][ci]) pc.comment.reset();
            pt.columns.push_back(std::move(pc));
        }
        if (!pt.columns.empty()) out.tables.push_back(std::move(pt));
    }
    auto column_alive = [&](const std::string& table, const std::string& column) {
        for (const auto& pt : out.tables) {
            if (pt.name != table) continue;
            for (const auto& pc : pt.columns) {
                if (pc.name == column) return true;
            }
        }
        return false;
    };
    for (const auto& fk : plan.foreign_keys) {
        if (column_alive(fk.from_table, fk.from_column) &&
            column_alive(fk.to_table, fk.to_column)) {
            out.foreign_keys.push_back(fk);
        }
    }
    for (std::size_t mi = 0; mi < plan.matches.size(); ++mi) {
        if (state.match_dropped[mi]) continue;
        const auto& m = plan.matches[mi];
        if (column_alive(m.table, m.column)) out.matches.push_back(m);
    }
    return out;
}

}  // namespace

PromptBundle truncate_to_budget(const PromptBundle& bundle, std::size_t token_budget,
                                const TokenEstimator& estimator) {
    auto measure = [&](const PromptPlan& plan) {
        PromptBundle probe;
        probe.db_prompt = render_db_prompt(plan);
        probe.question = bundle.question;
        probe.external_knowledge = bundle.external_knowledge;
        return estimator.count(probe.full_text());
    };

    if (measure(bundle.plan) <= token_budget) {
        PromptBundle out = bundle;
        out.db_prompt = render_db_prompt(out.plan);
        out.estimated_tokens = estimator.count(out.full_text());
        out.truncation_report.clear();
        return out;
    }

    auto actions = action_sequence(bundle.plan);
    auto fits = [&](std::size_t k) {
        return measure(reduced_plan(bundle.plan, apply_actions(bundle.plan, actions, k))) <=
               token_budget;
    };
    if (!fits(actions.size())) {
        throw BudgetError("token budget " + std::to_string(token_budget) +
                          " cannot hold the question" +
                          (bundle.external_knowledge ? " and external knowledge" : ""));
    }
    std::size_t lo = 0;
    std::size_t hi = actions.size();
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (fits(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }

    DropState state = apply_actions(bundle.plan, actions, lo);
    PromptBundle out;
    out.plan = reduced_plan(bundle.plan, state);
    out.db_prompt = render_db_prompt(out.plan);
    out.question = bundle.question;
    out.external_knowledge = bundle.external_knowledge;
    out.estimated_tokens = estimator.count(out.full_text());

    // Report effective removals only: dropping an already-empty part is a
    // no-op the reader should not see.
    const auto& plan = bundle.plan;
    std::vector<bool> table_reported(plan.tables.size(), false);
    for (std::size_t i = 0; i < lo; ++i) {
        const auto& a = actions[i];
        switch (a.kind) {
            case DropAction::Kind::Column: {
                const auto& col = plan.tables[a.table_idx].columns[a.column_idx];
                out.truncation_report.push_back("column " + col.table + "." + col.name);
                bool all_dropped = true;
                for (std::size_t ci = 0; ci < plan.tables[a.table_idx].columns.size(); ++ci) {
                    if (!state.column_dropped[a.table_idx][ci]) all_dropped = false;
                }
                if (all_dropped && !table_reported[a.table_idx]) {
                    table_reported[a.table_idx] = true;
                    out.truncation_report.push_back("table " + plan.tables[a.table_idx].name);
                }
                break;
            }
            case DropAction::Kind::Values: {
                const auto& col = plan.tables[a.table_idx].columns[a.column_idx];
                if (state.column_dropped[a.table_idx][a.column_idx] || col.values.empty()) break;
                out.truncation_report.push_back("values " + col.table + "." + col.name);
                break;
            }
            case DropAction::Kind::Comment: {
                const auto& col = plan.tables[a.table_idx].columns[a.column_idx];
                if (state.column_dropped[a.table_idx][a.column_idx] || !col.comment) break;
                out.truncation_report.push_back("comment " + col.table + "." + col.name);
                break;
            }
            case DropAction::Kind::Match: {
                const auto& m = plan.matches[a.match_idx];
                out.truncation_report.push_back("matched value " + m.table + "." + m.column +
                                                " = " + quote_sql_string(m.value_text));
                break;
            }
        }
    }
    // FK lines and matches that left because an endpoint column was dropped.
    auto in_plan = [](const PromptPlan& p, const ForeignKey& fk) {
        return std::find(p.foreign_keys.begin(), p.foreign_keys.end(), fk) != p.foreign_keys.end();
    };
    for (const auto& fk : plan.foreign_keys) {
        if (!in_plan(out.plan, fk)) {
            out.truncation_report.push_back("foreign key " + fk.from_table + "." + fk.from_column +
                                            " = " + fk.to_table + "." + fk.to_column);
        }
    }
    for (std::size_t mi = 0; mi < plan.matches.size(); ++mi) {
        if (state.match_dropped[mi]) continue;
        const auto& m = plan.matches[mi];
        bool survived = std::find(out.plan.matches.begin(), out.plan.matches.end(), m) !=
                        out.plan.matches.end();
        if (!survived) {
            out.truncation_report.push_back("matched value " + m.table + "." + m.column + " = " +
                                            quote_sql_string(m.value_text));
        }
    }
    return out;
}

std::string assemble_fewshot_input(const std::vector<std::pair<PromptBundle, std::string>>& demos,
                                   const PromptBundle& target, std::size_t token_budget,
                                   const TokenEstimator& estimator) {
    auto render = [&](std::size_t skip) {
        std::string out;
        for (std::size_t i = skip; i < demos.size(); ++i) {
            out += demos[i].first.full_text();
            out += "\n";
            out += kSqlCue;
            out += " " + demos[i].second;
            out += kDemoSeparator;
        }
        out += target.full_text();
        out += "\n";
        out += kSqlCue;
        return out;
    };

    for (std::size_t skip = 0; skip <= demos.size(); ++skip) {
        std::string candidate = render(skip);
        if (estimator.count(candidate) <= token_budget) return candidate;
    }
    // Even the bare target overflows; shrink the target itself.
    std::string cue_tail = "\n";
    cue_tail += kSqlCue;
    std::size_t cue_tokens = estimator.count(cue_tail);
    std::size_t inner_budget = token_budget > cue_tokens ? token_budget - cue_tokens : 0;
    PromptBundle shrunk = truncate_to_budget(target, inner_budget, estimator);
    return shrunk.full_text() + cue_tail;
}

}  // namespace nl2sql
