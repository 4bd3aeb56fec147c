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
#include <algorithm>
#include <cmath>
#include <limits>

#include "lakejoin/model_io.hpp"
#include "lakejoin/parallel.hpp"
#include "lakejoin/predictor.hpp"

namespace lakejoin {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct FeatureMeta {
    std::string name;
    bool numeric = false;
    std::vector<std::string> levels;  // categorical dictionary, sorted
};

// Column-major feature arrays. Numeric nulls are NaN; categorical nulls and
// levels unseen at train time are id -1 and route like missing values.
struct FeatureArrays {
    std::vector<std::vector<double>> num;
    std::vector<std::vector<int32_t>> cat;
};

FeatureArrays extract_features(const std::vector<FeatureMeta>& meta, const Table& table) {
    FeatureArrays fa;
    fa.num.resize(meta.size());
    fa.cat.resize(meta.size());
    const std::size_t rows = table.num_rows();
    for (std::size_t f = 0; f < meta.size(); ++f) {
        const Column& col = table.column(meta[f].name);
        if (meta[f].numeric) {
            auto& v = fa.num[f];
            v.assign(rows, std::numeric_limits<double>::quiet_NaN());
            for (std::size_t r = 0; r < rows; ++r) {
                if (!col.at(r).is_null()) v[r] = col.at(r).as_number();
            }
        } else {
            auto& v = fa.cat[f];
            v.assign(rows, -1);
            const auto& levels = meta[f].levels;
            for (std::size_t r = 0; r < rows; ++r) {
                if (col.at(r).is_null()) continue;
                const std::string key = canonical_key(col.at(r));
                auto it = std::lower_bound(levels.begin(), levels.end(), key);
                if (it != levels.end() && *it == key) {
                    v[r] = static_cast<int32_t>(it - levels.begin());
                }
            }
        }
    }
    return fa;
}

struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    bool numeric_split = false;
    double threshold = 0.0;                 // numeric: value <= threshold goes left
    std::vector<int32_t> left_categories;   // categorical: sorted ids going left
    bool null_left = false;                 // learned missing-value direction
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;  // leaf
};

struct Tree {
    std::vector<TreeNode> nodes;
};

double tree_value(const Tree& tree, const FeatureArrays& fa, std::size_t row) {
    int32_t at = 0;
    for (;;) {
        const TreeNode& node = tree.nodes[at];
        if (node.feature < 0) return node.value;
        bool go_left;
        if (node.numeric_split) {
            const double v = fa.num[node.feature][row];
            go_left = std::isnan(v) ? node.null_left : v <= node.threshold;
        } else {
            const int32_t id = fa.cat[node.feature][row];
            go_left = id < 0 ? node.null_left
                             : std::binary_search(node.left_categories.begin(),
                                                  node.left_categories.end(), id);
        }
        at = go_left ? node.left : node.right;
    }
}

struct SplitChoice {
    double gain = 0.0;
    int32_t feature = -1;
    bool numeric_split = false;
    double threshold = 0.0;
    std::vector<int32_t> left_categories;
    bool null_left = false;
};

struct TreeBuilder {
    const FeatureArrays& fa;
    const std::vector<FeatureMeta>& meta;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const GbdtConfig& cfg;
    Tree tree;

    double leaf_weight(double g, double h) const { return -g / (h + cfg.l2); }
    double score_of(double g, double h) const { return g * g / (h + cfg.l2); }

    struct Item {
        double key;
        double g;
        double h;
    };

    // Best split of `rows` on one feature, or gain 0 when none is legal.
    SplitChoice best_split_on(int32_t f, const std::vector<uint32_t>& rows, double g_total,
                              double h_total) const {
        SplitChoice best;
        best.feature = f;
        const double parent = score_of(g_total, h_total);
        const std::size_t min_leaf = static_cast<std::size_t>(cfg.min_samples_leaf);

        std::vector<Item> items;
        items.reserve(rows.size());
        double g_null = 0.0;
        double h_null = 0.0;
        std::size_t n_null = 0;

        if (meta[f].numeric) {
            const auto& vals = fa.num[f];
            for (uint32_t r : rows) {
                if (std::isnan(vals[r])) {
                    g_null += grad[r];
                    h_null += hess[r];
                    ++n_null;
                } else {
                    items.push_back(Item{vals[r], grad[r], hess[r]});
                }
            }
            std::sort(items.begin(), items.end(),
                      [](const Item& a, const Item& b) { return a.key < b.key; });
        } else {
            const auto& ids = fa.cat[f];
            const std::size_t n_levels = meta[f].levels.size();
            std::vector<double> g_by(n_levels, 0.0);
            std::vector<double> h_by(n_levels, 0.0);
            std::vector<uint32_t> c_by(n_levels, 0);
            for (uint32_t r : rows) {
                const int32_t id = ids[r];
                if (id < 0) {
                    g_null += grad[r];
                    h_null += hess[r];
                    ++n_null;
                } else {
                    g_by[id] += grad[r];
                    h_by[id] += hess[r];
                    ++c_by[id];
                }
            }
            // Within-tree target statistics: order the node's categories by
            // their regularized mean gradient, then scan like a numeric
            // axis. Categories rarer than min_samples_leaf are pooled with
            // the missing bucket; their per-node statistics are pure target
            // leakage (a unique-key column would otherwise memorize the
            // training rows).
            std::vector<int32_t> present;
            std::vector<int32_t> rare_ids;
            for (std::size_t id = 0; id < n_levels; ++id) {
                if (c_by[id] == 0) continue;
                if (c_by[id] < min_leaf) {
                    g_null += g_by[id];
                    h_null += h_by[id];
                    n_null += c_by[id];
                    rare_ids.push_back(static_cast<int32_t>(id));
                    continue;
                }
                present.push_back(static_cast<int32_t>(id));
            }
            std::sort(present.begin(), present.end(), [&](int32_t a, int32_t b) {
                const double sa = g_by[a] / (h_by[a] + cfg.l2);
                const double sb = g_by[b] / (h_by[b] + cfg.l2);
                if (sa != sb) return sa < sb;
                return a < b;
            });
            items.reserve(present.size());
            for (int32_t id : present) {
                items.push_back(Item{static_cast<double>(id), g_by[id], h_by[id]});
            }
            std::vector<uint32_t> cat_counts;
            cat_counts.reserve(present.size());
            for (int32_t id : present) cat_counts.push_back(c_by[id]);

            best = scan_items(best, parent, items, cat_counts, g_total, h_total, g_null, h_null,
                              n_null, min_leaf, /*numeric=*/false);
            // Rows in pooled-rare categories were counted with the missing
            // bucket; keep the prediction-time routing identical by adding
            // their ids to the left set when that bucket goes left.
            if (best.gain > 0.0 && best.null_left && !rare_ids.empty()) {
                best.left_categories.insert(best.left_categories.end(), rare_ids.begin(),
                                            rare_ids.end());
                std::sort(best.left_categories.begin(), best.left_categories.end());
            }
            return best;
        }

        // Numeric scan: group equal keys so a threshold never splits ties.
        std::vector<uint32_t> unit_counts(items.size(), 1);
        return scan_items(best, parent, items, unit_counts, g_total, h_total, g_null, h_null,
                          n_null, min_leaf, /*numeric=*/true);
    }

    SplitChoice scan_items(SplitChoice best, double parent, const std::vector<Item>& items,
                           const std::vector<uint32_t>& counts, double g_total, double h_total,
                           double g_null, double h_null, std::size_t n_null,
                           std::size_t min_leaf, bool numeric) const {
        if (items.size() < 2) return best;
        std::size_t n_vals_total = 0;
        for (uint32_t c : counts) n_vals_total += c;

        double g_left = 0.0;
        double h_left = 0.0;
        std::size_t n_left = 0;
        std::size_t i = 0;
        std::vector<int32_t> left_ids;  // categorical prefix
        while (i < items.size()) {
            // advance over one key group (numeric ties share a group)
            const double key = items[i].key;
            while (i < items.size() && (!numeric || items[i].key == key)) {
                g_left += items[i].g;
                h_left += items[i].h;
                n_left += counts[i];
                if (!numeric) {
                    left_ids.push_back(static_cast<int32_t>(items[i].key));
                    ++i;
                    break;  // categorical: one category per step
                }
                ++i;
            }
            if (i >= items.size()) break;  // no right side remains

            const double g_right = g_total - g_left - g_null;
            const double h_right = h_total - h_left - h_null;
            const std::size_t n_right_vals = n_vals_total - n_left;

            for (int null_dir = 0; null_dir < (n_null > 0 ? 2 : 1); ++null_dir) {
                const bool null_left = null_dir == 0 && n_null > 0;
                const double gl = g_left + (null_left ? g_null : 0.0);
                const double hl = h_left + (null_left ? h_null : 0.0);
                const double gr = g_right + (!null_left ? g_null : 0.0);
                const double hr = h_right + (!null_left ? h_null : 0.0);
                const std::size_t nl = n_left + (null_left ? n_null : 0);
                const std::size_t nr = n_right_vals + (!null_left ? n_null : 0);
                if (nl < min_leaf || nr < min_leaf) continue;
                const double gain = score_of(gl, hl) + score_of(gr, hr) - parent;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.numeric_split = numeric;
                    best.null_left = null_left;
                    if (numeric) {
                        best.threshold = items[i - 1].key;  // left: value <= threshold
                    } else {
                        best.left_categories = left_ids;
                    }
                }
            }
        }
        if (!best.left_categories.empty()) {
            std::sort(best.left_categories.begin(), best.left_categories.end());
        }
        return best;
    }

    int32_t build(const std::vector<uint32_t>& rows, int depth) {
        double g = 0.0;
        double h = 0.0;
        for (uint32_t r : rows) {
            g += grad[r];
            h += hess[r];
        }
        const int32_t node_id = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].value = leaf_weight(g, h);

        if (depth >= cfg.max_depth ||
            rows.size() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
            return node_id;
        }

        std::vector<SplitChoice> per_feature(meta.size());
        // Parallel split search only pays off on big nodes; small ones would
        // drown in thread start-up cost.
        if (rows.size() >= 4096 && meta.size() >= 2) {
            parallel_for(meta.size(), [&](std::size_t f) {
                per_feature[f] = best_split_on(static_cast<int32_t>(f), rows, g, h);
            });
        } else {
            for (std::size_t f = 0; f < meta.size(); ++f) {
                per_feature[f] = best_split_on(static_cast<int32_t>(f), rows, g, h);
            }
        }
        SplitChoice best;
        for (const auto& c : per_feature) {
            if (c.gain > best.gain) best = c;
        }
        if (best.feature < 0 || best.gain <= 1e-12) return node_id;

        std::vector<uint32_t> left_rows;
        std::vector<uint32_t> right_rows;
        for (uint32_t r : rows) {
            bool go_left;
            if (best.numeric_split) {
                const double v = fa.num[best.feature][r];
                go_left = std::isnan(v) ? best.null_left : v <= best.threshold;
            } else {
                const int32_t id = fa.cat[best.feature][r];
                go_left = id < 0 ? best.null_left
                                 : std::binary_search(best.left_categories.begin(),
                                                      best.left_categories.end(), id);
            }
            (go_left ? left_rows : right_rows).push_back(r);
        }
        if (left_rows.empty() || right_rows.empty()) return node_id;

        TreeNode& node = tree.nodes[node_id];
        node.feature = best.feature;
        node.numeric_split = best.numeric_split;
        node.threshold = best.threshold;
        node.left_categories = std::move(best.left_categories);
        node.null_left = best.null_left;
        const int32_t left_id = build(left_rows, depth + 1);
        const int32_t right_id = build(right_rows, depth + 1);
        tree.nodes[node_id].left = left_id;
        tree.nodes[node_id].right = right_id;
        return node_id;
    }
};

class GbdtModel final : public FittedModel {
public:
    GbdtModel(FeatureSchema schema, std::vector<FeatureMeta> meta, double f0,
              double learning_rate, std::vector<Tree> trees)
        : schema_(std::move(schema)),
          meta_(std::move(meta)),
          f0_(f0),
          learning_rate_(learning_rate),
          trees_(std::move(trees)) {}

    std::vector<double> predict(const Table& table) const override {
        schema_.check(table);
        const FeatureArrays fa = extract_features(meta_, table);
        std::vector<double> out(table.num_rows(), f0_);
        for (const Tree& tree : trees_) {
            for (std::size_t r = 0; r < out.size(); ++r) {
                out[r] += learning_rate_ * tree_value(tree, fa, r);
            }
        }
        if (schema_.task == Task::BinaryClassification) {
            for (double& v : out) v = sigmoid(v);
        }
        return out;
    }

    const FeatureSchema& schema() const override { return schema_; }
    PredictorKind kind() const override { return PredictorKind::GbdtLite; }

    void serialize(std::ostream& out) const override {
        io::write_pod<uint8_t>(out, schema_.task == Task::Regression ? 0 : 1);
        io::write_string(out, schema_.target);
        io::write_pod<uint32_t>(out, static_cast<uint32_t>(schema_.features.size()));
        for (const auto& [name, dtype] : schema_.features) {
            io::write_string(out, name);
            io::write_pod<uint8_t>(out, dtype == Dtype::Numeric ? 0 : 1);
        }
        io::write_pod<uint32_t>(out, static_cast<uint32_t>(schema_.class_labels.size()));
        for (const auto& l : schema_.class_labels) io::write_string(out, l);

        io::write_pod<uint32_t>(out, static_cast<uint32_t>(meta_.size()));
        for (const auto& m : meta_) {
            io::write_string(out, m.name);
            io::write_pod<uint8_t>(out, m.numeric ? 1 : 0);
            io::write_pod<uint32_t>(out, static_cast<uint32_t>(m.levels.size()));
            for (const auto& l : m.levels) io::write_string(out, l);
        }
        io::write_pod<double>(out, f0_);
        io::write_pod<double>(out, learning_rate_);
        io::write_pod<uint32_t>(out, static_cast<uint32_t>(trees_.size()));
        for (const Tree& tree : trees_) {
            io::write_pod<uint32_t>(out, static_cast<uint32_t>(tree.nodes.size()));
            for (const TreeNode& n : tree.nodes) {
                io::write_pod<int32_t>(out, n.feature);
                io::write_pod<uint8_t>(out, n.numeric_split ? 1 : 0);
                io::write_pod<double>(out, n.threshold);
                io::write_pod<uint32_t>(out, static_cast<uint32_t>(n.left_categories.size()));
                for (int32_t c : n.left_categories) io::write_pod<int32_t>(out, c);
                io::write_pod<uint8_t>(out, n.null_left ? 1 : 0);
                io::write_pod<int32_t>(out, n.left);
                io::write_pod<int32_t>(out, n.right);
                io::write_pod<double>(out, n.value);
            }
        }
    }

private:
    FeatureSchema schema_;
    std::vector<FeatureMeta> meta_;
    double f0_ = 0.0;
    double learning_rate_ = 0.1;
    std::vector<Tree> trees_;
};

}  // namespace

std::unique_ptr<FittedModel> fit_gbdt_model(const PredictorConfig& config, const Table& table,
                                            const std::string& target);

std::unique_ptr<FittedModel> fit_gbdt_model(const PredictorConfig& config, const Table& table,
                                            const std::string& target) {
    const GbdtConfig& cfg = config.gbdt;

    FeatureSchema schema;
    schema.target = target;
    schema.task = config.task;
    std::vector<FeatureMeta> meta;
    for (const Column& col : table.columns()) {
        if (col.name() == target) continue;
        schema.features.emplace_back(col.name(), col.dtype());
        FeatureMeta m;
        m.name = col.name();
        m.numeric = col.dtype() == Dtype::Numeric;
        if (!m.numeric) {
            auto levels = distinct_values(col);
            m.levels.assign(levels.begin(), levels.end());
            std::sort(m.levels.begin(), m.levels.end());
        }
        meta.push_back(std::move(m));
    }

    std::vector<double> y_all = extract_target(table, target, config.task, &schema.class_labels);
    std::vector<uint32_t> fit_rows;
    for (std::size_t r = 0; r < y_all.size(); ++r) {
        if (!std::isnan(y_all[r])) fit_rows.push_back(static_cast<uint32_t>(r));
    }
    if (fit_rows.size() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf)) {
        throw DataError("gbdt: needs at least " + std::to_string(2 * cfg.min_samples_leaf) +
                        " labeled rows, got " + std::to_string(fit_rows.size()));
    }

    const Table fit_table = table.take(table.name(), {fit_rows.begin(), fit_rows.end()});
    const FeatureArrays fa = extract_features(meta, fit_table);
    std::vector<double> y;
    y.reserve(fit_rows.size());
    for (uint32_t r : fit_rows) y.push_back(y_all[r]);
    const std::size_t n = y.size();

    // Constant target: zero-tree model predicting the constant.
    const bool constant_y = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (constant_y && config.task == Task::Regression) {
        return std::make_unique<GbdtModel>(std::move(schema), std::move(meta), y[0],
                                           cfg.learning_rate, std::vector<Tree>{});
    }

    // Deterministic internal holdout for early stopping.
    std::vector<uint32_t> order(n);
    for (uint32_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(config.seed ^ 0x6A09E667F3BCC908ull);
    rng.shuffle(order);
    const std::size_t n_holdout = static_cast<std::size_t>(cfg.holdout_fraction * n);
    std::vector<uint32_t> holdout(order.begin(), order.begin() + n_holdout);
    std::vector<uint32_t> grow(order.begin() + n_holdout, order.end());
    std::sort(holdout.begin(), holdout.end());
    std::sort(grow.begin(), grow.end());

    double grow_mean = 0.0;
    for (uint32_t r : grow) grow_mean += y[r];
    grow_mean /= static_cast<double>(grow.size());
    double f0;
    if (config.task == Task::Regression) {
        f0 = grow_mean;
    } else {
        const double p = std::clamp(grow_mean, 1e-6, 1.0 - 1e-6);
        f0 = std::log(p / (1.0 - p));
    }

    std::vector<double> F(n, f0);
    std::vector<double> grad(n, 0.0);
    std::vector<double> hess(n, 1.0);

    auto holdout_loss = [&] {
        if (holdout.empty()) return 0.0;
        double loss = 0.0;
        for (uint32_t r : holdout) {
            if (config.task == Task::Regression) {
                const double d = F[r] - y[r];
                loss += d * d;
            } else {
                const double p = std::clamp(sigmoid(F[r]), 1e-12, 1.0 - 1e-12);
                loss += -(y[r] * std::log(p) + (1.0 - y[r]) * std::log(1.0 - p));
            }
        }
        return loss / static_cast<double>(holdout.size());
    };

    std::vector<Tree> trees;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_n_trees = 0;
    int stale = 0;

    for (int iter = 0; iter < cfg.n_iter; ++iter) {
        for (uint32_t r : grow) {
            if (config.task == Task::Regression) {
                grad[r] = F[r] - y[r];
                hess[r] = 1.0;
            } else {
                const double p = sigmoid(F[r]);
                grad[r] = p - y[r];
                hess[r] = std::max(p * (1.0 - p), 1e-12);
            }
        }

        TreeBuilder builder{fa, meta, grad, hess, cfg, {}};
        builder.build(grow, 0);
        Tree tree = std::move(builder.tree);

        for (uint32_t r : grow) F[r] += cfg.learning_rate * tree_value(tree, fa, r);
        for (uint32_t r : holdout) F[r] += cfg.learning_rate * tree_value(tree, fa, r);
        trees.push_back(std::move(tree));

        const double loss = holdout_loss();
        if (loss < best_loss - 1e-12) {
            best_loss = loss;
            best_n_trees = trees.size();
            stale = 0;
        } else if (++stale >= cfg.early_stop_patience) {
            break;
        }
    }
    if (holdout.empty()) best_n_trees = trees.size();
    trees.resize(best_n_trees);

    return std::make_unique<GbdtModel>(std::move(schema), std::move(meta), f0, cfg.learning_rate,
                                       std::move(trees));
}

std::unique_ptr<FittedModel> deserialize_gbdt(std::istream& in);

std::unique_ptr<FittedModel> deserialize_gbdt(std::istream& in) {
    FeatureSchema schema;
    schema.task = io::read_pod<uint8_t>(in) == 0 ? Task::Regression : Task::BinaryClassification;
    schema.target = io::read_string(in);
    const uint32_t n_features = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_features; ++i) {
        std::string name = io::read_string(in);
        const Dtype dtype = io::read_pod<uint8_t>(in) == 0 ? Dtype::Numeric : Dtype::Categorical;
        schema.features.emplace_back(std::move(name), dtype);
    }
    const uint32_t n_labels = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_labels; ++i) schema.class_labels.push_back(io::read_string(in));

    std::vector<FeatureMeta> meta;
    const uint32_t n_meta = io::read_pod<uint32_t>(in);
    for (uint32_t i = 0; i < n_meta; ++i) {
        FeatureMeta m;
        m.name = io::read_string(in);
        m.numeric = io::read_pod<uint8_t>(in) == 1;
        const uint32_t n_levels = io::read_pod<uint32_t>(in);
        for (uint32_t j = 0; j < n_levels; ++j) m.levels.push_back(io::read_string(in));
        meta.push_back(std::move(m));
    }
    const double f0 = io::read_pod<double>(in);
    const double lr = io::read_pod<double>(in);
    std::vector<Tree> trees;
    const uint32_t n_trees = io::read_pod<uint32_t>(in);
    for (uint32_t t = 0; t < n_trees; ++t) {
        Tree tree;
        const uint32_t n_nodes = io::read_pod<uint32_t>(in);
        for (uint32_t i = 0; i < n_nodes; ++i) {
            TreeNode n;
            n.feature = io::read_pod<int32_t>(in);
            n.numeric_split = io::read_pod<uint8_t>(in) == 1;
            n.threshold = io::read_pod<double>(in);
            const uint32_t n_cats = io::read_pod<uint32_t>(in);
            for (uint32_t j = 0; j < n_cats; ++j) {
                n.left_categories.push_back(io::read_pod<int32_t>(in));
            }
            n.null_left = io::read_pod<uint8_t>(in) == 1;
            n.left = io::read_pod<int32_t>(in);
            n.right = io::read_pod<int32_t>(in);
            n.value = io::read_pod<double>(in);
            tree.nodes.push_back(std::move(n));
        }
        trees.push_back(std::move(tree));
    }
    return std::make_unique<GbdtModel>(std::move(schema), std::move(meta), f0, lr,
                                       std::move(trees));
}

}  // namespace lakejoin
