/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "lakejoin/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "lakejoin/parallel.hpp"

namespace lakejoin {

SelectorKind parse_selector(const std::string& name) {
    if (name == "highest_containment") return SelectorKind::HighestContainment;
    if (name == "best_single") return SelectorKind::BestSingle;
    if (name == "full_join") return SelectorKind::FullJoin;
    if (name == "stepwise_greedy") return SelectorKind::StepwiseGreedy;
    throw DataError("unknown selector '" + name + "'");
}

const char* selector_name(SelectorKind k) {
    switch (k) {
        case SelectorKind::HighestContainment: return "highest_containment";
        case SelectorKind::BestSingle: return "best_single";
        case SelectorKind::FullJoin: return "full_join";
        case SelectorKind::StepwiseGreedy: return "stepwise_greedy";
    }
    return "?";
}

void SelectorInput::validate() const {
    if (base_train == nullptr || lake == nullptr) {
        throw DataError("selector: base table and lake are required");
    }
    if (candidates.empty()) throw DataError("selector: needs at least one candidate");
    if (!base_train->has_column(query_column) || !base_train->has_column(target_column)) {
        throw DataError("selector: base table lacks query or target column");
    }
    if (!(inner_train_fraction > 0.0 && inner_train_fraction < 1.0)) {
        throw DataError("selector: inner split fraction must be in (0,1)");
    }
}

namespace {

constexpr double kFailedScore = -std::numeric_limits<double>::infinity();

std::string candidate_id(const std::string& table, const std::string& column) {
    return table + ":" + column;
}

// Candidate table with target-named feature columns dropped (leakage
// guard; the join column survives since left_join discards it anyway).
Table load_candidate(const LakeCatalog& lake, const std::string& table_name,
                     const std::string& join_column, const std::string& target) {
    auto entry = lake.find(table_name);
    if (!entry) throw DataError("selector: candidate table '" + table_name + "' not in lake");
    auto t = lake.table(*entry);
    if (!t->has_column(join_column)) {
        throw DataError("selector: candidate column '" + join_column + "' missing from '" +
                        table_name + "'");
    }
    std::vector<std::string> keep;
    for (const Column& col : t->columns()) {
        if (col.name() == target && col.name() != join_column) continue;
        keep.push_back(col.name());
    }
    return t->select(table_name, keep);
}

Table prepare_candidate(const SelectorInput& in, const JoinStep& step) {
    Table raw = load_candidate(*in.lake, step.table_name, step.column_name, in.target_column);
    Table agg = aggregate(raw, step.column_name, in.aggregation);
    if (in.meter != nullptr) in.meter->observe(agg);
    return agg;
}

// Deterministic row shuffle split of [0, n).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double train_fraction,
                                                                            uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed ^ 0x9E3779B97F4A7C15ull);
    rng.shuffle(order);
    const std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
    std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> valid(order.begin() + n_train, order.end());
    std::sort(train.begin(), train.end());
    std::sort(valid.begin(), valid.end());
    return {std::move(train), std::move(valid)};
}

double fit_and_score(const SelectorInput& in, const Table& train, const Table& valid,
                     double* fit_seconds, int* fits) {
    Stopwatch watch;
    auto model = fit_model(in.predictor, train, in.target_column);
    if (fit_seconds != nullptr) *fit_seconds += watch.seconds();
    if (fits != nullptr) ++*fits;
    return score(*model, valid, in.target_column, default_metric(in.predictor.task)).value;
}

// Exact containment of the training query keys against each candidate's
// column, with the (table, column) lexicographic tie-break.
std::vector<CandidateJoin> rerank_by_containment(const SelectorInput& in) {
    const auto query = distinct_values(in.base_train->column(in.query_column));
    if (query.empty()) throw DataError("selector: query column has no values");

    std::vector<CandidateJoin> ranked = in.candidates;
    std::vector<double> scores(ranked.size(), 0.0);
    parallel_for(ranked.size(), [&](std::size_t i) {
        auto entry = in.lake->find(ranked[i].table_name);
        if (!entry) {
            throw DataError("selector: candidate table '" + ranked[i].table_name +
                            "' not in lake");
        }
        auto t = in.lake->table(*entry);
        scores[i] = containment(query, distinct_values(t->column(ranked[i].column_name)));
    });
    std::vector<std::size_t> order(ranked.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (ranked[a].table_name != ranked[b].table_name) {
            return ranked[a].table_name < ranked[b].table_name;
        }
        return ranked[a].column_name < ranked[b].column_name;
    });
    std::vector<CandidateJoin> out;
    out.reserve(ranked.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        CandidateJoin c = ranked[order[pos]];
        c.score = scores[order[pos]];
        c.rank = static_cast<int>(pos + 1);
        out.push_back(std::move(c));
    }
    return out;
}

JoinStep to_step(const SelectorInput& in, const CandidateJoin& c) {
    return JoinStep{c.table_name, c.column_name, in.query_column};
}

MergePlan make_plan(const SelectorInput& in, SelectorKind kind) {
    MergePlan plan;
    plan.selector = selector_name(kind);
    plan.aggregation = in.aggregation;
    plan.query_column = in.query_column;
    plan.target_column = in.target_column;
    return plan;
}

// Replays the plan on the full training split and fits the final model.
SelectorOutcome finish(const SelectorInput& in, SelectorOutcome outcome) {
    {
        Stopwatch watch;
        outcome.augmented_train = replay_plan(outcome.plan, *in.base_train, *in.lake, in.meter);
        outcome.timings.train_join += watch.seconds();
    }
    {
        Stopwatch watch;
        outcome.model = fit_model(in.predictor, outcome.augmented_train, in.target_column);
        outcome.timings.train_model += watch.seconds();
        ++outcome.model_fits;
    }
    return outcome;
}

}  // namespace

Table replay_plan(const MergePlan& plan, const Table& base, const LakeCatalog& lake,
                  MemoryMeter* meter) {
    Table current = base;
    if (meter != nullptr) meter->observe(current);
    for (const JoinStep& step : plan.steps) {
        Table raw = load_candidate(lake, step.table_name, step.column_name, plan.target_column);
        Table agg = aggregate(raw, step.column_name, plan.aggregation);
        current = left_join(current, agg, step.base_key, step.column_name);
        if (meter != nullptr) {
            meter->observe(agg);
            meter->observe(current);
        }
    }
    return current;
}

SelectorOutcome select_highest_containment(const SelectorInput& in) {
    in.validate();
    SelectorOutcome outcome;
    outcome.plan = make_plan(in, SelectorKind::HighestContainment);

    Stopwatch prepare;
    const auto ranked = rerank_by_containment(in);
    outcome.timings.prepare += prepare.seconds();

    outcome.plan.steps.push_back(to_step(in, ranked.front()));
    return finish(in, std::move(outcome));
}

SelectorOutcome select_best_single(const SelectorInput& in) {
    in.validate();
    SelectorOutcome outcome;
    outcome.plan = make_plan(in, SelectorKind::BestSingle);

    Stopwatch prepare;
    auto [train_idx, valid_idx] = split_indices(in.base_train->num_rows(),
                                                in.inner_train_fraction, in.seed);
    const Table inner_train = in.base_train->take("inner_train", train_idx);
    const Table inner_valid = in.base_train->take("inner_valid", valid_idx);
    outcome.timings.prepare += prepare.seconds();

    struct Slot {
        double score = kFailedScore;
        double join_seconds = 0.0;
        double fit_seconds = 0.0;
        int fits = 0;
    };
    std::vector<Slot> slots(in.candidates.size());
    parallel_for(in.candidates.size(), [&](std::size_t i) {
        Slot& slot = slots[i];
        try {
            const JoinStep step = to_step(in, in.candidates[i]);
            Stopwatch join_watch;
            const Table agg = prepare_candidate(in, step);
            const Table joined_train =
                left_join(inner_train, agg, step.base_key, step.column_name);
            const Table joined_valid =
                left_join(inner_valid, agg, step.base_key, step.column_name);
            slot.join_seconds = join_watch.seconds();
            if (in.meter != nullptr) in.meter->observe(joined_train);
            slot.score = fit_and_score(in, joined_train, joined_valid, &slot.fit_seconds,
                                       &slot.fits);
        } catch (const DataError&) {
            slot.score = kFailedScore;  // unusable candidate, cannot win
        }
    });

    std::size_t best = SIZE_MAX;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        outcome.timings.train_join += slots[i].join_seconds;
        outcome.timings.train_model += slots[i].fit_seconds;
        outcome.model_fits += slots[i].fits;
        outcome.candidate_scores.emplace_back(
            candidate_id(in.candidates[i].table_name, in.candidates[i].column_name),
            slots[i].score);
        if (std::isfinite(slots[i].score) && (best == SIZE_MAX || slots[i].score > slots[best].score)) {
            best = i;
        }
    }
    if (best != SIZE_MAX) outcome.plan.steps.push_back(to_step(in, in.candidates[best]));
    return finish(in, std::move(outcome));
}

SelectorOutcome select_full_join(const SelectorInput& in) {
    in.validate();
    SelectorOutcome outcome;
    outcome.plan = make_plan(in, SelectorKind::FullJoin);
    for (const CandidateJoin& c : in.candidates) {
        outcome.plan.steps.push_back(to_step(in, c));
    }
    return finish(in, std::move(outcome));
}

SelectorOutcome select_stepwise_greedy(const SelectorInput& in) {
    in.validate();
    SelectorOutcome outcome;
    outcome.plan = make_plan(in, SelectorKind::StepwiseGreedy);

    Stopwatch prepare;
    auto [train_idx, valid_idx] = split_indices(in.base_train->num_rows(),
                                                in.inner_train_fraction, in.seed);
    Table current_train = in.base_train->take("inner_train", train_idx);
    Table current_valid = in.base_train->take("inner_valid", valid_idx);
    const auto ranked = rerank_by_containment(in);
    outcome.timings.prepare += prepare.seconds();

    double best_score = fit_and_score(in, current_train, current_valid,
                                      &outcome.timings.train_model, &outcome.model_fits);
    outcome.baseline_score = best_score;

    const std::size_t budget = std::min<std::size_t>(ranked.size(),
                                                     static_cast<std::size_t>(in.max_iter));
    outcome.untested_candidates = static_cast<int>(ranked.size() - budget);

    for (std::size_t i = 0; i < budget; ++i) {
        const JoinStep step = to_step(in, ranked[i]);
        double candidate_score = kFailedScore;
        try {
            Stopwatch join_watch;
            const Table agg = prepare_candidate(in, step);
            Table joined_train = left_join(current_train, agg, step.base_key, step.column_name);
            Table joined_valid = left_join(current_valid, agg, step.base_key, step.column_name);
            outcome.timings.train_join += join_watch.seconds();
            if (in.meter != nullptr) in.meter->observe(joined_train);
            candidate_score = fit_and_score(in, joined_train, joined_valid,
                                            &outcome.timings.train_model, &outcome.model_fits);
            if (candidate_score > best_score) {
                best_score = candidate_score;
                current_train = std::move(joined_train);
                current_valid = std::move(joined_valid);
                outcome.plan.steps.push_back(step);
                outcome.accepted_scores.push_back(candidate_score);
            }
        } catch (const DataError&) {
            candidate_score = kFailedScore;  // discarded
        }
        outcome.candidate_scores.emplace_back(
            candidate_id(step.table_name, step.column_name), candidate_score);
    }
    return finish(in, std::move(outcome));
}

SelectorOutcome run_selector(SelectorKind kind, const SelectorInput& in) {
    switch (kind) {
        case SelectorKind::HighestContainment: return select_highest_containment(in);
        case SelectorKind::BestSingle: return select_best_single(in);
        case SelectorKind::FullJoin: return select_full_join(in);
        case SelectorKind::StepwiseGreedy: return select_stepwise_greedy(in);
    }
    throw DataError("unknown selector kind");
}

// ---------------------------------------------------------------------------
// Plan persistence
// ---------------------------------------------------------------------------

void save_plan(const MergePlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write plan '" + path.string() + "'");
    out << "lakejoin-plan\t1\n";
    out << "selector\t" << plan.selector << "\n";
    out << "aggregation\t" << aggregation_name(plan.aggregation) << "\n";
    out << "query_column\t" << plan.query_column << "\n";
    out << "target_column\t" << plan.target_column << "\n";
    for (const JoinStep& s : plan.steps) {
        out << "join\t" << s.table_name << "\t" << s.column_name << "\t" << s.base_key << "\n";
    }
}

MergePlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open plan '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "lakejoin-plan\t1") {
        throw DataError("'" + path.string() + "' is not a lakejoin plan (v1)");
    }
    MergePlan plan;
    auto split_tabs = [](const std::string& l) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        for (;;) {
            std::size_t tab = l.find('\t', start);
            parts.push_back(l.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        return parts;
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto parts = split_tabs(line);
        if (parts[0] == "selector" && parts.size() == 2) {
            plan.selector = parts[1];
        } else if (parts[0] == "aggregation" && parts.size() == 2) {
            plan.aggregation = parse_aggregation(parts[1]);
        } else if (parts[0] == "query_column" && parts.size() == 2) {
            plan.query_column = parts[1];
        } else if (parts[0] == "target_column" && parts.size() == 2) {
            plan.target_column = parts[1];
        } else if (parts[0] == "join" && parts.size() == 4) {
            plan.steps.push_back(JoinStep{parts[1], parts[2], parts[3]});
        } else {
            throw DataError("plan: unrecognized line '" + line + "'");
        }
    }
    return plan;
}

}  // namespace lakejoin
