#include "lakejoin/predictor.hpp"

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "lakejoin/common.hpp"
#include "lakejoin/encode.hpp"
#include "lakejoin/ridge.hpp"
#include "test_helpers.hpp"

using namespace lakejoin;
using namespace lakejoin::testing;

namespace {

// y = 2*x0 - 3*x1 + 1, exactly.
Table linear_table(std::size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Cell> x0, x1, y;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform() * 10.0;
        const double b = rng.uniform() * 10.0;
        x0.push_back(N(a));
        x1.push_back(N(b));
        y.push_back(N(2.0 * a - 3.0 * b + 1.0));
    }
    return Table("lin", {numeric_col("x0", x0), numeric_col("x1", x1), numeric_col("y", y)});
}

DesignMatrix matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    DesignMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = std::move(values);
    return m;
}

}  // namespace

TEST_CASE("encoder: mean imputation plus missingness indicator") {
    Table t("t", {numeric_col("x", {N(1), Nil(), N(3)}), numeric_col("y", {N(0), N(0), N(1)})});
    auto state = fit_encoder(t, "y", {0, 0, 1});
    auto m = apply_encoder(state, t);
    REQUIRE(m.cols == 2);
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(1, 0) == 2.0);  // imputed mean of {1,3}
    CHECK(m.at(2, 0) == 3.0);
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.at(1, 1) == 1.0);
    CHECK(m.at(2, 1) == 0.0);
}

TEST_CASE("encoder: one-hot with explicit null category") {
    Table t("t", {text_col("c", {T("a"), T("b"), Nil()}), numeric_col("y", {N(0), N(0), N(1)})});
    auto state = fit_encoder(t, "y", {0, 0, 1});
    auto m = apply_encoder(state, t);
    REQUIRE(m.cols == 3);  // 2 levels + null
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(1, 1) == 1.0);
    CHECK(m.at(2, 2) == 1.0);
}

TEST_CASE("encoder: high-cardinality target encoding with fallback") {
    std::vector<Cell> keys, ys;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        keys.push_back(T(key_name(i)));
        const double v = i % 2 == 0 ? 1.0 : 0.0;
        ys.push_back(N(v));
        y.push_back(v);
    }
    Table t("t", {text_col("k", keys), numeric_col("y", ys)});
    auto state = fit_encoder(t, "y", y);
    REQUIRE(state.columns[0].kind == ColumnEncoder::Kind::TargetMean);

    // Unseen category at apply time falls back to the global train mean.
    Table test("t", {text_col("k", {T("unseen")}), numeric_col("y", {N(0)})});
    auto m = apply_encoder(state, test);
    CHECK(m.at(0, 0) == doctest::Approx(0.5));

    // Replay is idempotent: encoding train twice gives identical matrices.
    auto m1 = apply_encoder(state, t);
    auto m2 = apply_encoder(state, t);
    CHECK(m1.values == m2.values);
}

TEST_CASE("encoder state never reads eval targets") {
    // Permuting targets outside the train table must not change encodings.
    std::vector<Cell> keys, ys;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        keys.push_back(T(key_name(i % 35)));
        ys.push_back(N(i % 3));
        y.push_back(i % 3);
    }
    Table train("t", {text_col("k", keys), numeric_col("y", ys)});
    auto state = fit_encoder(train, "y", y);

    Table eval1("t", {text_col("k", {T(key_name(1)), T(key_name(2))}),
                      numeric_col("y", {N(0), N(1)})});
    Table eval2("t", {text_col("k", {T(key_name(1)), T(key_name(2))}),
                      numeric_col("y", {N(1), N(0)})});  // permuted targets
    CHECK(apply_encoder(state, eval1).values == apply_encoder(state, eval2).values);
}

TEST_CASE("ridge recovers an exact linear relation") {
    Table t = linear_table(60, 3);
    PredictorConfig cfg;
    cfg.kind = PredictorKind::Ridge;
    auto model = fit_model(cfg, t, "y");
    Metric m = score(*model, t, "y", MetricKind::R2);
    CHECK(m.value >= 0.999);
}

TEST_CASE("ridge on all-zero design predicts the target mean") {
    DesignMatrix X = matrix(4, 1, {0, 0, 0, 0});
    RidgeSolution sol = ridge_solve(X, {1, 2, 3, 4}, RidgeConfig().alpha_grid);
    CHECK(sol.weights[0] == doctest::Approx(0.0));
    CHECK(sol.intercept == doctest::Approx(2.5));
}

TEST_CASE("two-point ridge slope matches the hand derivation") {
    DesignMatrix X = matrix(2, 1, {0.0, 1.0});
    RidgeSolution sol = ridge_solve(X, {0.0, 1.0}, {1e-3});
    CHECK(std::fabs(sol.weights[0] - 1.0) <= 1e-2);
    CHECK(sol.alpha == doctest::Approx(1e-3));
}

TEST_CASE("ridge closed form zeroes the regularized gradient") {
    // Finite-check against the normal equations on random problems.
    Rng rng(9);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 20;
        const std::size_t d = 5;
        DesignMatrix X;
        X.rows = n;
        X.cols = d;
        std::vector<double> y;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < d; ++c) X.values.push_back(rng.normal());
            y.push_back(rng.normal());
        }
        RidgeSolution sol = ridge_solve(X, y, RidgeConfig().alpha_grid);

        // Gradient on centered data: Xc' (Xc w - yc) + alpha w.
        std::vector<double> col_mean(d, 0.0);
        double y_mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            y_mean += y[r];
            for (std::size_t c = 0; c < d; ++c) col_mean[c] += X.at(r, c);
        }
        y_mean /= n;
        for (auto& m : col_mean) m /= n;

        std::vector<double> resid(n);
        for (std::size_t r = 0; r < n; ++r) {
            double pred = 0.0;
            for (std::size_t c = 0; c < d; ++c) pred += (X.at(r, c) - col_mean[c]) * sol.weights[c];
            resid[r] = pred - (y[r] - y_mean);
        }
        double grad_norm = 0.0;
        double ref_norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double g = sol.alpha * sol.weights[c];
            double xty = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                g += (X.at(r, c) - col_mean[c]) * resid[r];
                xty += (X.at(r, c) - col_mean[c]) * (y[r] - y_mean);
            }
            grad_norm += g * g;
            ref_norm += xty * xty;
        }
        CHECK(std::sqrt(grad_norm) <= 1e-8 * std::max(1.0, std::sqrt(ref_norm)));
    }
}

TEST_CASE("gbdt separates a single categorical level") {
    Rng rng(13);
    std::vector<Cell> c, y;
    for (int i = 0; i < 400; ++i) {
        const bool is_a = rng.below(3) == 0;
        c.push_back(T(is_a ? "a" : (rng.below(2) ? "b" : "d")));
        y.push_back(N(is_a ? 1.0 : 0.0));
    }
    Table t("t", {text_col("c", c), numeric_col("y", y)});
    PredictorConfig cfg;
    cfg.kind = PredictorKind::GbdtLite;
    auto model = fit_model(cfg, t, "y");
    auto preds = model->predict(t);
    int correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double truth = t.column("y").at(i).as_number();
        correct += (preds[i] > 0.5 ? 1.0 : 0.0) == truth;
    }
    CHECK(static_cast<double>(correct) / preds.size() >= 0.99);
}

TEST_CASE("gbdt exploits a planted missingness signal") {
    // Half the feature is nulled out; null rows carry their own target mean.
    Rng rng(17);
    std::vector<Cell> x, y;
    for (int i = 0; i < 600; ++i) {
        const bool missing = rng.below(2) == 0;
        const double v = rng.uniform() * 4.0;
        if (missing) {
            x.push_back(Nil());
            y.push_back(N(5.0 + rng.normal() * 0.1));
        } else {
            x.push_back(N(v));
            y.push_back(N(v > 2.0 ? 1.0 : -1.0 + rng.normal() * 0.1));
        }
    }
    Table t("t", {numeric_col("x", x), numeric_col("y", y)});
    Table train = t.take("train", [&] {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < 480; ++i) idx.push_back(i);
        return idx;
    }());
    Table valid = t.take("valid", [&] {
        std::vector<std::size_t> idx;
        for (std::size_t i = 480; i < 600; ++i) idx.push_back(i);
        return idx;
    }());

    PredictorConfig cfg;
    cfg.kind = PredictorKind::GbdtLite;
    auto model = fit_model(cfg, train, "y");
    Metric m = score(*model, valid, "y", MetricKind::R2);
    CHECK(m.value >= 0.5);
}

TEST_CASE("gbdt constant target gives a zero-tree constant model") {
    std::vector<Cell> x, y;
    for (int i = 0; i < 80; ++i) {
        x.push_back(N(i));
        y.push_back(N(7.25));
    }
    Table t("t", {numeric_col("x", x), numeric_col("y", y)});
    PredictorConfig cfg;
    cfg.kind = PredictorKind::GbdtLite;
    auto model = fit_model(cfg, t, "y");
    for (double p : model->predict(t)) CHECK(p == 7.25);
}

TEST_CASE("gbdt refuses too-small datasets") {
    std::vector<Cell> x, y;
    for (int i = 0; i < 10; ++i) {
        x.push_back(N(i));
        y.push_back(N(i));
    }
    Table t("t", {numeric_col("x", x), numeric_col("y", y)});
    PredictorConfig cfg;
    cfg.kind = PredictorKind::GbdtLite;
    CHECK_THROWS_AS(fit_model(cfg, t, "y"), DataError);
}

TEST_CASE("null-resilience: gbdt beats ridge on the 60%-null fixture") {
    int gbdt_wins = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(900 + seed);
        std::vector<Cell> x, y;
        for (int i = 0; i < 500; ++i) {
            const bool missing = rng.below(10) < 6;  // 60% nulls
            if (missing) {
                x.push_back(Nil());
                y.push_back(N(4.0 + rng.normal() * 0.2));
            } else {
                const double v = rng.uniform() * 6.283;
                x.push_back(N(v));
                y.push_back(N(std::sin(v) * 3.0 + rng.normal() * 0.2));
            }
        }
        Table t("t", {numeric_col("x", x), numeric_col("y", y)});
        std::vector<std::size_t> train_idx, valid_idx;
        for (std::size_t i = 0; i < 400; ++i) train_idx.push_back(i);
        for (std::size_t i = 400; i < 500; ++i) valid_idx.push_back(i);
        Table train = t.take("train", train_idx);
        Table valid = t.take("valid", valid_idx);

        PredictorConfig gb;
        gb.kind = PredictorKind::GbdtLite;
        gb.seed = seed;
        PredictorConfig ri;
        ri.kind = PredictorKind::Ridge;
        const double g = score(*fit_model(gb, train, "y"), valid, "y", MetricKind::R2).value;
        const double r = score(*fit_model(ri, train, "y"), valid, "y", MetricKind::R2).value;
        gbdt_wins += g > r ? 1 : 0;
    }
    CHECK(gbdt_wins >= 18);
}

TEST_CASE("classification: ridge threshold-0 scores and gbdt probabilities") {
    Rng rng(21);
    std::vector<Cell> x, y;
    for (int i = 0; i < 300; ++i) {
        const double v = rng.uniform() * 2.0 - 1.0;
        x.push_back(N(v));
        y.push_back(T(v + rng.normal() * 0.05 > 0 ? "pos" : "neg"));
    }
    Table t("t", {numeric_col("x", x), text_col("y", y)});
    for (PredictorKind kind : {PredictorKind::Ridge, PredictorKind::GbdtLite}) {
        PredictorConfig cfg;
        cfg.kind = kind;
        cfg.task = Task::BinaryClassification;
        auto model = fit_model(cfg, t, "y");
        Metric m = score(*model, t, "y", MetricKind::AUC);
        CHECK(m.value >= 0.95);
    }
}

TEST_CASE("metric definitions and error cases") {
    CHECK(r2_score({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(r2_score({2, 2, 2}, {1, 2, 3}) == doctest::Approx(0.0));  // mean predictor
    CHECK_THROWS_AS(r2_score({1, 1}, {5, 5}), DataError);           // constant target

    // All positive-negative pairs correctly ordered -> AUC 1.
    CHECK(auc_score({0.9, 0.8, 0.1}, {1, 1, 0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(auc_score({0.5, 0.6}, {1, 1}), DataError);  // single class
    // Tied scores get average ranks.
    CHECK(auc_score({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
}

TEST_CASE("gbdt holdout loss at the selected iteration never exceeds iteration 1") {
    // Equivalent observable: refitting with n_iter=1 cannot beat the
    // early-stopped model on its own internal objective; checked through
    // validation R2 on a noisy nonlinear task.
    Rng rng(29);
    std::vector<Cell> x, y;
    for (int i = 0; i < 500; ++i) {
        const double v = rng.uniform() * 10.0;
        x.push_back(N(v));
        y.push_back(N(std::floor(v) + rng.normal() * 0.1));
    }
    Table t("t", {numeric_col("x", x), numeric_col("y", y)});
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < 400; ++i) tr.push_back(i);
    for (std::size_t i = 400; i < 500; ++i) va.push_back(i);
    Table train = t.take("train", tr);
    Table valid = t.take("valid", va);

    PredictorConfig full;
    full.kind = PredictorKind::GbdtLite;
    PredictorConfig one = full;
    one.gbdt.n_iter = 1;
    one.gbdt.early_stop_patience = 1;
    const double r_full = score(*fit_model(full, train, "y"), valid, "y", MetricKind::R2).value;
    const double r_one = score(*fit_model(one, train, "y"), valid, "y", MetricKind::R2).value;
    CHECK(r_full >= r_one - 1e-9);
}

TEST_CASE("model serialization round trips predictions") {
    namespace fs = std::filesystem;
    Table t = linear_table(80, 31);
    const fs::path dir = fs::temp_directory_path() / "lakejoin_test_models";
    fs::create_directories(dir);
    for (PredictorKind kind : {PredictorKind::Ridge, PredictorKind::GbdtLite}) {
        PredictorConfig cfg;
        cfg.kind = kind;
        auto model = fit_model(cfg, t, "y");
        const fs::path file = dir / "m.bin";
        save_model(*model, file);
        auto back = load_model(file);
        CHECK(back->kind() == kind);
        CHECK(back->predict(t) == model->predict(t));
    }
    fs::remove_all(dir);
}

TEST_CASE("schema mismatch is rejected at predict time") {
    Table t = linear_table(50, 37);
    PredictorConfig cfg;
    cfg.kind = PredictorKind::Ridge;
    auto model = fit_model(cfg, t, "y");

    Table missing_col = t.select("m", {"x0", "y"});
    CHECK_THROWS_AS(model->predict(missing_col), DataError);

    std::vector<Cell> extra(t.num_rows(), N(0));
    std::vector<Column> cols = t.columns();
    cols.push_back(numeric_col("zz", extra));
    Table extra_col("m", cols);
    CHECK_THROWS_AS(model->predict(extra_col), DataError);
}
