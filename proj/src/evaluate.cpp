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
#include "lakejoin/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace lakejoin {

std::string ExperimentConfig::config_id() const {
    std::string id = retrieval_method_name(retrieval);
    id += '/';
    id += selector_name(selector);
    id += '/';
    id += aggregation_name(aggregation);
    id += '/';
    id += predictor_kind_name(predictor);
    id += "/k" + std::to_string(top_k);
    id += "/s" + std::to_string(seed);
    return id;
}

void ExperimentConfig::validate() const {
    if (query_column.empty() || target_column.empty()) {
        throw DataError("experiment: query_column and target_column are required");
    }
    if (query_column == target_column) {
        throw DataError("experiment: query and target columns must differ");
    }
    if (n_outer_folds < 2) throw DataError("experiment: folds must be >= 2");
    if (top_k < 1) throw DataError("experiment: top_k must be >= 1");
    if (!(inner_train_fraction > 0.0 && inner_train_fraction < 1.0)) {
        throw DataError("experiment: inner split fraction must be in (0,1)");
    }
}

Table deplete(const Table& base, const std::string& key, const std::string& target) {
    if (key == target) throw DataError("deplete: key and target must differ");
    return base.select(base.name(), {key, target});
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k, uint64_t seed) {
    if (k < 2) throw DataError("make_folds: k must be >= 2");
    if (n < static_cast<std::size_t>(k)) throw DataError("make_folds: fewer rows than folds");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed ^ 0x71C9B75E135F2D31ull);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t small = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t at = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = small + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        folds[f].assign(order.begin() + at, order.begin() + at + size);
        std::sort(folds[f].begin(), folds[f].end());
        at += size;
    }
    return folds;
}

namespace {

std::vector<CandidateJoin> run_retrieval(const ExperimentConfig& cfg, const ExperimentEnv& env,
                                         const Table& train) {
    QuerySpec q;
    q.base_table = &train;
    q.query_column = cfg.query_column;
    q.top_k = cfg.top_k;
    q.method = cfg.retrieval;
    q.threshold = cfg.threshold;
    switch (cfg.retrieval) {
        case RetrievalMethod::Exact:
            return exact_match(q, *env.lake);
        case RetrievalMethod::MinHash:
            if (env.index == nullptr) throw DataError("experiment: minhash needs an index");
            return minhash_query(*env.index, q);
        case RetrievalMethod::Hybrid:
            if (env.index == nullptr) throw DataError("experiment: hybrid needs an index");
            return hybrid_query(*env.index, q, *env.lake);
    }
    throw DataError("experiment: unknown retrieval method");
}

// Mean exact containment of the retrieved pool (reporting only); unranked
// candidates are measured against the fold's training key set.
double pool_containment(const std::vector<CandidateJoin>& pool, const LakeCatalog& lake,
                        const std::unordered_set<std::string>& train_keys) {
    if (pool.empty()) return 0.0;
    double sum = 0.0;
    for (const CandidateJoin& c : pool) {
        if (c.score) {
            sum += *c.score;
            continue;
        }
        auto entry = lake.find(c.table_name);
        if (!entry) continue;
        auto t = lake.table(*entry);
        sum += containment(train_keys, distinct_values(t->column(c.column_name)));
    }
    return sum / static_cast<double>(pool.size());
}

PredictorConfig predictor_config(const ExperimentConfig& cfg, uint64_t fold_seed) {
    PredictorConfig pc;
    pc.kind = cfg.predictor;
    pc.task = cfg.task;
    pc.seed = fold_seed;
    return pc;
}

}  // namespace

std::vector<EvalRecord> run_experiment(const ExperimentConfig& cfg, const ExperimentEnv& env) {
    cfg.validate();
    if (env.base == nullptr || env.lake == nullptr) {
        throw DataError("experiment: base table and lake are required");
    }

    const Table depleted = deplete(*env.base, cfg.query_column, cfg.target_column);
    const auto folds = make_folds(depleted.num_rows(), cfg.n_outer_folds, cfg.seed);

    std::vector<EvalRecord> records;
    records.reserve(folds.size());

    for (int fold = 0; fold < cfg.n_outer_folds; ++fold) {
        EvalRecord rec;
        rec.config = cfg;
        rec.fold = fold;
        MemoryMeter meter;
        const uint64_t fold_seed = cfg.seed * 1000003ull + static_cast<uint64_t>(fold);

        std::vector<std::size_t> train_idx;
        for (int f = 0; f < cfg.n_outer_folds; ++f) {
            if (f == fold) continue;
            train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
        }
        std::sort(train_idx.begin(), train_idx.end());
        const Table train = depleted.take("train", train_idx);
        const Table test = depleted.take("test", folds[fold]);
        meter.observe(train);
        meter.observe(test);

        // Fold hygiene: retrieval sees only the training split's keys.
        Stopwatch prepare_watch;
        std::vector<CandidateJoin> pool = run_retrieval(cfg, env, train);
        rec.timings.prepare += prepare_watch.seconds();
        rec.candidate_count = static_cast<int>(pool.size());
        rec.mean_containment =
            pool_containment(pool, *env.lake,
                             distinct_values(train.column(cfg.query_column)));

        std::unique_ptr<FittedModel> model;
        MergePlan plan;
        if (pool.empty()) {
            rec.flagged = true;
            rec.flag_reason = "no candidates retrieved";
            plan.selector = selector_name(cfg.selector);
            plan.aggregation = cfg.aggregation;
            plan.query_column = cfg.query_column;
            plan.target_column = cfg.target_column;
            Stopwatch fit_watch;
            model = fit_model(predictor_config(cfg, fold_seed), train, cfg.target_column);
            rec.timings.train_model += fit_watch.seconds();
        } else {
            SelectorInput in;
            in.base_train = &train;
            in.query_column = cfg.query_column;
            in.target_column = cfg.target_column;
            in.candidates = std::move(pool);
            in.lake = env.lake;
            in.aggregation = cfg.aggregation;
            in.predictor = predictor_config(cfg, fold_seed);
            in.inner_train_fraction = cfg.inner_train_fraction;
            in.seed = fold_seed;
            in.max_iter = cfg.max_iter;
            in.meter = &meter;
            SelectorOutcome outcome = run_selector(cfg.selector, in);
            rec.timings.prepare += outcome.timings.prepare;
            rec.timings.train_join += outcome.timings.train_join;
            rec.timings.train_model += outcome.timings.train_model;
            plan = std::move(outcome.plan);
            model = std::move(outcome.model);
        }

        Stopwatch predict_join_watch;
        const Table joined_test = replay_plan(plan, test, *env.lake, &meter);
        rec.timings.predict_join += predict_join_watch.seconds();

        Stopwatch predict_watch;
        rec.metric = score(*model, joined_test, cfg.target_column,
                           default_metric(cfg.task)).value;
        rec.timings.predict_model += predict_watch.seconds();
        rec.peak_bytes = meter.peak_bytes();
        records.push_back(std::move(rec));
    }
    return records;
}

LoadedInputs load_experiment_inputs(const ExperimentConfig& cfg) {
    LoadedInputs li;
    li.base = read_csv(cfg.base_table_path);
    li.lake = scan_lake(cfg.lake_path);
    if (cfg.retrieval != RetrievalMethod::Exact) {
        li.index = build_lsh_index(li.lake, cfg.threshold, 256, 8, cfg.seed);
    }
    return li;
}

std::vector<EvalRecord> topk_sweep(const ExperimentConfig& cfg, const std::vector<int>& k_values,
                                   const ExperimentEnv& env) {
    if (cfg.selector != SelectorKind::FullJoin) {
        throw DataError("topk_sweep: selector must be full_join");
    }
    std::vector<EvalRecord> all;
    for (int k : k_values) {
        ExperimentConfig c = cfg;
        c.top_k = k;
        auto records = run_experiment(c, env);
        all.insert(all.end(), std::make_move_iterator(records.begin()),
                   std::make_move_iterator(records.end()));
    }
    return all;
}

// ---------------------------------------------------------------------------
// Experiment files
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(value);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        const auto begin = piece.find_first_not_of(" \t");
        const auto end = piece.find_last_not_of(" \t");
        if (begin == std::string::npos) continue;
        parts.push_back(piece.substr(begin, end - begin + 1));
    }
    return parts;
}

}  // namespace

std::vector<ExperimentConfig> parse_experiment_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("experiment file line " + std::to_string(lineno) +
                            ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    ExperimentConfig base;
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    if (auto v = take("lake")) base.lake_path = *v;
    if (auto v = take("base_table")) base.base_table_path = *v;
    if (auto v = take("query_column")) base.query_column = *v;
    if (auto v = take("target_column")) base.target_column = *v;
    if (auto v = take("task")) {
        if (*v == "regression") {
            base.task = Task::Regression;
        } else if (*v == "classification") {
            base.task = Task::BinaryClassification;
        } else {
            throw DataError("experiment: unknown task '" + *v + "'");
        }
    }
    if (auto v = take("folds")) base.n_outer_folds = std::stoi(*v);
    if (auto v = take("inner_train_fraction")) base.inner_train_fraction = std::stod(*v);
    if (auto v = take("threshold")) base.threshold = std::stod(*v);
    if (auto v = take("max_iter")) base.max_iter = std::stoi(*v);

    const std::vector<std::string> retrievals = split_list(take("retrieval").value_or("exact"));
    const std::vector<std::string> selectors = split_list(take("selector").value_or("best_single"));
    const std::vector<std::string> aggregations = split_list(take("aggregation").value_or("any"));
    const std::vector<std::string> predictors = split_list(take("predictor").value_or("gbdt"));
    const std::vector<std::string> top_ks = split_list(take("top_k").value_or("30"));
    const std::vector<std::string> seeds = split_list(take("seed").value_or("0"));
    if (!kv.empty()) {
        throw DataError("experiment file: unknown key '" + kv.begin()->first + "'");
    }

    std::vector<ExperimentConfig> out;
    for (const auto& r : retrievals) {
        for (const auto& s : selectors) {
            for (const auto& a : aggregations) {
                for (const auto& p : predictors) {
                    for (const auto& k : top_ks) {
                        for (const auto& seed : seeds) {
                            ExperimentConfig c = base;
                            c.retrieval = parse_retrieval_method(r);
                            c.selector = parse_selector(s);
                            c.aggregation = parse_aggregation(a);
                            c.predictor = parse_predictor_kind(p);
                            c.top_k = std::stoi(k);
                            c.seed = std::stoull(seed);
                            out.push_back(std::move(c));
                        }
                    }
                }
            }
        }
    }
    return out;
}

std::vector<ExperimentConfig> parse_experiment_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open experiment file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_text(buf.str());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

double median(std::vector<double> v) {
    if (v.empty()) throw DataError("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Records keyed by everything except the ablated dimensions, for
// fold-vs-fold pairing.
std::string pairing_key(const EvalRecord& r) {
    return r.config.lake_path + "|" + r.config.base_table_path + "|" +
           std::to_string(r.config.top_k) + "|" + std::to_string(r.config.seed) + "|f" +
           std::to_string(r.fold);
}

bool matches_reference(const ExperimentConfig& c, const ReferenceConfig& ref) {
    return c.retrieval == ref.retrieval && c.selector == ref.selector &&
           c.aggregation == ref.aggregation && c.predictor == ref.predictor;
}

}  // namespace

std::vector<AblationRow> ablation_report(const std::vector<EvalRecord>& records,
                                         const ReferenceConfig& ref) {
    std::map<std::string, const EvalRecord*> reference_by_key;
    for (const EvalRecord& r : records) {
        if (matches_reference(r.config, ref)) reference_by_key[pairing_key(r)] = &r;
    }
    if (reference_by_key.empty()) {
        throw DataError("ablation_report: no records match the reference configuration");
    }

    struct DimSpec {
        const char* name;
        std::function<std::string(const ExperimentConfig&)> value_of;
        std::function<bool(const ExperimentConfig&)> same_others;
    };
    const ReferenceConfig R = ref;
    std::vector<DimSpec> dims = {
        {"retrieval",
         [](const ExperimentConfig& c) { return std::string(retrieval_method_name(c.retrieval)); },
         [R](const ExperimentConfig& c) {
             return c.selector == R.selector && c.aggregation == R.aggregation &&
                    c.predictor == R.predictor;
         }},
        {"selector",
         [](const ExperimentConfig& c) { return std::string(selector_name(c.selector)); },
         [R](const ExperimentConfig& c) {
             return c.retrieval == R.retrieval && c.aggregation == R.aggregation &&
                    c.predictor == R.predictor;
         }},
        {"aggregation",
         [](const ExperimentConfig& c) { return std::string(aggregation_name(c.aggregation)); },
         [R](const ExperimentConfig& c) {
             return c.retrieval == R.retrieval && c.selector == R.selector &&
                    c.predictor == R.predictor;
         }},
        {"predictor",
         [](const ExperimentConfig& c) { return std::string(predictor_kind_name(c.predictor)); },
         [R](const ExperimentConfig& c) {
             return c.retrieval == R.retrieval && c.selector == R.selector &&
                    c.aggregation == R.aggregation;
         }},
    };

    std::vector<AblationRow> rows;
    for (const auto& dim : dims) {
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_method;
        for (const EvalRecord& r : records) {
            if (!dim.same_others(r.config)) continue;
            auto it = reference_by_key.find(pairing_key(r));
            if (it == reference_by_key.end()) continue;
            const EvalRecord& ref_rec = *it->second;
            auto& [diffs, ratios] = by_method[dim.value_of(r.config)];
            diffs.push_back((r.metric - ref_rec.metric) * 100.0);
            const double ref_time = ref_rec.timings.total();
            ratios.push_back(ref_time > 0.0 ? r.timings.total() / ref_time : 1.0);
        }
        for (auto& [method, data] : by_method) {
            AblationRow row;
            row.dimension = dim.name;
            row.method = method;
            row.median_diff_pct = median(data.first);
            row.median_time_ratio = median(data.second);
            row.pairs = static_cast<int>(data.first.size());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<ParetoRow> pareto_report(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw DataError("pareto_report: no records");
    struct Agg {
        double metric_sum = 0.0;
        double time_sum = 0.0;
        std::size_t peak = 0;
        int n = 0;
    };
    std::map<std::string, Agg> by_config;  // ordered for stable output
    for (const EvalRecord& r : records) {
        Agg& a = by_config[r.config.config_id()];
        a.metric_sum += r.metric;
        a.time_sum += r.timings.total();
        a.peak = std::max(a.peak, r.peak_bytes);
        ++a.n;
    }
    std::vector<ParetoRow> rows;
    for (const auto& [id, a] : by_config) {
        ParetoRow row;
        row.config_id = id;
        row.mean_metric = a.metric_sum / a.n;
        row.mean_total_seconds = a.time_sum / a.n;
        row.peak_bytes = a.peak;
        rows.push_back(std::move(row));
    }
    for (auto& row : rows) {
        bool dominated_time = false;
        bool dominated_bytes = false;
        for (const auto& other : rows) {
            if (&other == &row) continue;
            const bool metric_geq = other.mean_metric >= row.mean_metric;
            const bool metric_gt = other.mean_metric > row.mean_metric;
            if (metric_geq && other.mean_total_seconds <= row.mean_total_seconds &&
                (metric_gt || other.mean_total_seconds < row.mean_total_seconds)) {
                dominated_time = true;
            }
            if (metric_geq && other.peak_bytes <= row.peak_bytes &&
                (metric_gt || other.peak_bytes < row.peak_bytes)) {
                dominated_bytes = true;
            }
        }
        row.pareto_time = !dominated_time;
        row.pareto_bytes = !dominated_bytes;
    }
    return rows;
}

std::string records_csv(const std::vector<EvalRecord>& records, bool include_timings) {
    std::string out =
        "config_id,retrieval,selector,aggregation,predictor,top_k,seed,fold,metric,flagged,"
        "flag_reason,candidate_count,mean_containment,peak_bytes";
    if (include_timings) {
        out += ",prepare_s,train_join_s,train_model_s,predict_join_s,predict_model_s";
    }
    out += '\n';
    for (const EvalRecord& r : records) {
        out += r.config.config_id();
        out += ',';
        out += retrieval_method_name(r.config.retrieval);
        out += ',';
        out += selector_name(r.config.selector);
        out += ',';
        out += aggregation_name(r.config.aggregation);
        out += ',';
        out += predictor_kind_name(r.config.predictor);
        out += ',' + std::to_string(r.config.top_k);
        out += ',' + std::to_string(r.config.seed);
        out += ',' + std::to_string(r.fold);
        out += ',' + canonical_number(r.metric);
        out += r.flagged ? ",1," : ",0,";
        out += r.flag_reason;
        out += ',' + std::to_string(r.candidate_count);
        out += ',' + canonical_number(r.mean_containment);
        out += ',' + std::to_string(r.peak_bytes);
        if (include_timings) {
            out += ',' + canonical_number(r.timings.prepare);
            out += ',' + canonical_number(r.timings.train_join);
            out += ',' + canonical_number(r.timings.train_model);
            out += ',' + canonical_number(r.timings.predict_join);
            out += ',' + canonical_number(r.timings.predict_model);
        }
        out += '\n';
    }
    return out;
}

std::string pareto_csv(const std::vector<ParetoRow>& rows) {
    std::string out = "config_id,mean_metric,mean_total_seconds,peak_bytes,pareto_time,pareto_bytes\n";
    for (const ParetoRow& r : rows) {
        out += r.config_id;
        out += ',' + canonical_number(r.mean_metric);
        out += ',' + canonical_number(r.mean_total_seconds);
        out += ',' + std::to_string(r.peak_bytes);
        out += r.pareto_time ? ",1" : ",0";
        out += r.pareto_bytes ? ",1\n" : ",0\n";
    }
    return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string out = "dimension,method,median_diff_pct,median_time_ratio,pairs\n";
    for (const AblationRow& r : rows) {
        out += r.dimension + ',' + r.method;
        out += ',' + canonical_number(r.median_diff_pct);
        out += ',' + canonical_number(r.median_time_ratio);
        out += ',' + std::to_string(r.pairs) + '\n';
    }
    return out;
}

}  // namespace lakejoin
