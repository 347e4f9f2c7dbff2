#include "crossmap/errors.hpp"
#include "crossmap/synth.hpp"
#include "crossmap/training.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace crossmap;

namespace {

PairedDataset linear_task(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    const auto a = oracle::random_matrix(d, d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    const auto x = oracle::random_matrix(n, d, rng);
    Matrix y(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < d; ++o) {
            y(i, o) = dot(a.row(o), x.row(i));
        }
    }
    auto keys = oracle::numbered_keys(n);
    return {VectorSet(keys, x), VectorSet(keys, y)};
}

}  // namespace

TEST_SUITE("losses") {
    TEST_CASE("mse") {
        const std::vector<double> p{1, 2}, t{1, 2}, u{0, 0};
        CHECK(evaluate_loss(LossKind::mse, p, t).value == 0.0);
        const auto lv = evaluate_loss(LossKind::mse, p, u);
        CHECK(lv.value == 2.5);
        CHECK(lv.grad_pred == std::vector<double>{1, 2});
    }

    TEST_CASE("cosine extremes") {
        const std::vector<double> t{1, 2}, same{3, 6}, orth{-2, 1}, opp{-1, -2}, zero{0, 0};
        CHECK(evaluate_loss(LossKind::cosine, same, t).value == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(evaluate_loss(LossKind::cosine, orth, t).value == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(evaluate_loss(LossKind::cosine, opp, t).value == doctest::Approx(2.0).epsilon(1e-15));
        CHECK_THROWS_AS(evaluate_loss(LossKind::cosine, zero, t), ValidationError);
        CHECK_THROWS_AS(evaluate_loss(LossKind::cosine, t, zero), ValidationError);
    }

    TEST_CASE("max margin inactive hinge") {
        // ||f(x) - y|| = 1, ||f(x~) - y|| = 5, margin 2.
        const std::vector<double> y{0, 0}, fx{1, 0}, fneg{3, 4};
        const auto lv = evaluate_loss(LossKind::max_margin, fx, y, MarginContext{fneg, 2.0});
        CHECK(lv.value == 0.0);
        const auto active = evaluate_loss(LossKind::max_margin, fx, y, MarginContext{fneg, 6.0});
        CHECK(active.value == doctest::Approx(2.0));
        CHECK_THROWS_AS(evaluate_loss(LossKind::max_margin, fx, y), ValidationError);
    }

    TEST_CASE("dimension mismatch") {
        CHECK_THROWS_AS(evaluate_loss(LossKind::mse, std::vector<double>{1, 2}, std::vector<double>{1}),
                        ValidationError);
    }

    TEST_CASE("property: mse orthogonal invariance, cosine positive scaling") {
        Rng rng(4);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> p{rng.normal(), rng.normal()}, y{rng.normal(), rng.normal()};
            const double a = rng.uniform(0, 6.28);
            auto rot = [&](const std::vector<double>& v) {
                return std::vector<double>{std::cos(a) * v[0] - std::sin(a) * v[1],
                                           std::sin(a) * v[0] + std::cos(a) * v[1]};
            };
            CHECK(evaluate_loss(LossKind::mse, rot(p), rot(y)).value ==
                  doctest::Approx(evaluate_loss(LossKind::mse, p, y).value).epsilon(1e-12));
            auto scaled = p;
            const double factor = 0.1 + rng.uniform01() * 10.0;
            for (double& v : scaled) {
                v *= factor;
            }
            CHECK(evaluate_loss(LossKind::cosine, scaled, y).value ==
                  doctest::Approx(evaluate_loss(LossKind::cosine, p, y).value).epsilon(1e-12));
            CHECK(evaluate_loss(LossKind::cosine, p, y).value >= 0.0);
            CHECK(evaluate_loss(LossKind::cosine, p, y).value <= 2.0);
        }
    }
}

TEST_SUITE("negative selection") {
    TEST_CASE("no item of another class") {
        const auto preds = Matrix::from_rows({{0}, {1}, {2}});
        const std::vector<std::string> labels{"a", "a", "a"};
        CHECK_FALSE(select_negative(preds, preds, &labels, 0, 100.0).has_value());
    }

    TEST_CASE("first violator wins") {
        // Item 0 predicts perfectly; rows 3 and 7 are other-class violators, the rest are far or same class.
        Matrix preds(8, 1), targets(8, 1);
        const std::vector<std::string> labels{"a", "a", "b", "b", "a", "b", "a", "b"};
        for (std::size_t j = 0; j < 8; ++j) {
            preds(j, 0) = 100.0;
        }
        preds(0, 0) = 0.0;
        preds(3, 0) = 0.5;
        preds(7, 0) = 0.25;
        CHECK(select_negative(preds, targets, &labels, 0, 1.0) == std::optional<std::size_t>(3));
    }

    TEST_CASE("hand-built batch against an exhaustive scan") {
        Rng rng(6);
        for (int t = 0; t < 50; ++t) {
            const auto preds = oracle::random_matrix(4, 2, rng);
            const auto targets = oracle::random_matrix(4, 2, rng);
            const std::vector<std::string> labels{"a", "b", "a", "b"};
            const double margin = rng.uniform(0.0, 2.0);
            for (std::size_t i = 0; i < 4; ++i) {
                std::optional<std::size_t> expected;
                const double own = std::sqrt(squared_distance(preds.row(i), targets.row(i)));
                for (std::size_t j = 0; j < 4 && !expected; ++j) {
                    if (labels[j] != labels[i] &&
                        margin + own - std::sqrt(squared_distance(preds.row(j), targets.row(i))) > 0.0) {
                        expected = j;
                    }
                }
                CHECK(select_negative(preds, targets, &labels, i, margin) == expected);
            }
        }
    }

    TEST_CASE("labels required") {
        const auto preds = Matrix::from_rows({{0}, {1}});
        try {
            select_negative(preds, preds, nullptr, 0, 1.0);
            FAIL("expected an error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("mse") != std::string::npos);
        }
    }
}

TEST_SUITE("rmsprop") {
    TEST_CASE("zero gradient leaves parameters unchanged") {
        std::vector<double> w{1.5, -2.0}, acc{0.3, 0.0};
        const std::vector<double> g{0.0, 0.0};
        rmsprop_step(w, g, acc, 0.01, 0.9, 1e-8);
        CHECK(w == std::vector<double>{1.5, -2.0});
    }

    TEST_CASE("hand-stepped recurrence") {
        std::vector<double> w{0.0}, acc{0.0};
        const std::vector<double> g{1.0};
        rmsprop_step(w, g, acc, 0.001, 0.9, 1e-8);
        CHECK(acc[0] == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(w[0] == doctest::Approx(-0.001 / (std::sqrt(0.1) + 1e-8)).epsilon(1e-15));
        CHECK(w[0] == doctest::Approx(-0.0031623).epsilon(1e-4));
        rmsprop_step(w, g, acc, 0.001, 0.9, 1e-8);
        CHECK(acc[0] == doctest::Approx(0.19).epsilon(1e-15));
    }

    TEST_CASE("shape mismatch") {
        std::vector<double> w{0.0, 1.0}, acc{0.0};
        const std::vector<double> g{1.0, 1.0};
        CHECK_THROWS_AS(rmsprop_step(w, g, acc, 0.001, 0.9, 1e-8), ValidationError);
        auto m = init_model(2, 2, {}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        auto other = init_model(3, 2, {}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        auto state = RmspropState::for_model(m);
        CHECK_THROWS_AS(rmsprop_update(m, Gradients::zeros_like(other), state, 0.001, 0.9, 1e-8), ValidationError);
    }
}

TEST_SUITE("train") {
    TEST_CASE("zero epochs: model unchanged, empty history") {
        const auto data = linear_task(40, 4, 1);
        const auto m = init_model(4, 4, {}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        TrainConfig cfg;
        cfg.epochs = 0;
        const auto r = train(m, data, data, cfg);
        CHECK(r.model == m);
        CHECK(r.history.epochs.empty());
    }

    TEST_CASE("one record per epoch and a falling loss") {
        const auto data = linear_task(120, 4, 2);
        const auto folds = k_fold_split(data, 4, 0);
        TrainConfig cfg;
        cfg.epochs = 30;
        cfg.learning_rate = 0.01;
        cfg.neighbor_k = 5;
        const auto r = train(init_model(4, 4, {}, Activation::relu, InitScheme::fan_in_scaled(), 3), folds[0].train,
                             folds[0].test, cfg);
        REQUIRE(r.history.epochs.size() == 30);
        CHECK(r.history.epochs.back().epoch == 30);
        CHECK(r.history.epochs.back().train_loss < 0.25 * r.history.epochs.front().train_loss);
        for (const auto& e : r.history.epochs) {
            CHECK(e.mnno_x_test >= 0.0);
            CHECK(e.mnno_y_train <= 1.0);
        }
        std::ostringstream csv;
        r.history.write_csv(csv);
        CHECK(csv.str().rfind("epoch,train_loss,test_loss,mnno_x_train,mnno_x_test,mnno_y_train,mnno_y_test\n", 0) ==
              0);
    }

    TEST_CASE("untracked neighbours export as empty cells") {
        const auto data = linear_task(20, 2, 3);
        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.track_neighbors = false;
        const auto r = train(init_model(2, 2, {}, Activation::relu, InitScheme::fan_in_scaled(), 3), data, data, cfg);
        std::ostringstream csv;
        r.history.write_csv(csv);
        CHECK(csv.str().find(",,,,\n") != std::string::npos);
    }

    TEST_CASE("bit-reproducible with dropout and max-margin") {
        SynthSpec spec;
        spec.n_classes = 4;
        spec.items_per_class = 10;
        spec.d_x = 6;
        spec.d_y = 5;
        spec.seed = 2;
        const auto data = generate_synthetic_paired(spec);
        const auto folds = k_fold_split(data, 4, 1);
        TrainConfig cfg;
        cfg.loss = LossKind::max_margin;
        cfg.margin = 2.5;
        cfg.dropout = 0.25;
        cfg.epochs = 5;
        cfg.batch_size = 8;
        cfg.seed = 77;
        cfg.neighbor_k = 3;
        const auto m = init_model(6, 5, {16}, Activation::relu, InitScheme::fan_in_scaled(), 4);
        const auto a = train(m, folds[0].train, folds[0].test, cfg);
        const auto b = train(m, folds[0].train, folds[0].test, cfg);
        CHECK(a.model == b.model);
        std::ostringstream ha, hb;
        a.history.write_csv(ha);
        b.history.write_csv(hb);
        CHECK(ha.str() == hb.str());
        cfg.seed = 78;
        CHECK_FALSE(train(m, folds[0].train, folds[0].test, cfg).model == a.model);
    }

    TEST_CASE("divergence carries the epoch") {
        auto data = linear_task(64, 3, 4);
        Matrix big = data.y().values();
        for (double& v : big.values()) {
            v *= 1e7;
        }
        const PairedDataset huge(data.x(), VectorSet(data.keys(), big));
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.track_neighbors = false;
        try {
            train(init_model(3, 3, {}, Activation::relu, InitScheme::fan_in_scaled(), 1), huge, huge, cfg);
            FAIL("expected divergence");
        } catch (const TrainingDiverged& e) {
            CHECK(e.epoch() == 1);
        }
    }

    TEST_CASE("invalid configurations") {
        const auto data = linear_task(10, 2, 5);
        const auto m = init_model(2, 2, {}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        TrainConfig cfg;
        cfg.learning_rate = 0.0;
        CHECK_THROWS_AS(train(m, data, data, cfg), ValidationError);
        cfg = {};
        cfg.dropout = 1.0;
        CHECK_THROWS_AS(train(m, data, data, cfg), ValidationError);
        cfg = {};
        cfg.loss = LossKind::max_margin;
        CHECK_THROWS_AS(train(m, data, data, cfg), ValidationError);
        cfg = {};
        const auto wrong = init_model(3, 2, {}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        CHECK_THROWS_AS(train(wrong, data, data, cfg), ValidationError);
    }
}

TEST_SUITE("grid search") {
    TEST_CASE("single cell grid") {
        const auto data = linear_task(50, 3, 6);
        GridSpace grid;
        grid.learning_rates = {0.01};
        grid.hidden_units = {8};
        TrainConfig base;
        base.epochs = 5;
        const auto r = grid_search_cv(data, ModelSpace{1}, grid, base, 5, 1);
        REQUIRE(r.cells.size() == 1);
        CHECK(r.best == std::optional<std::size_t>(0));
        CHECK(r.cells[0].best_epoch >= 1);
        CHECK(r.cells[0].best_epoch <= 5);
    }

    TEST_CASE("a diverging cell is excluded") {
        auto data = linear_task(50, 3, 7);
        Matrix big = data.y().values();
        for (double& v : big.values()) {
            v *= 3e5;
        }
        const PairedDataset scaled(data.x(), VectorSet(data.keys(), big));
        GridSpace grid;
        grid.learning_rates = {1e6, 0.01};
        TrainConfig base;
        base.epochs = 3;
        const auto r = grid_search_cv(scaled, ModelSpace{0}, grid, base, 3, 1);
        REQUIRE(r.cells.size() == 2);
        CHECK(r.cells[0].failed);
        CHECK_FALSE(r.cells[0].failure.empty());
        CHECK_FALSE(r.cells[1].failed);
        CHECK(r.best == std::optional<std::size_t>(1));
        std::ostringstream csv;
        r.write_csv(csv);
        CHECK(csv.str().find("FAILED") != std::string::npos);
    }

    TEST_CASE("2x2 grid winner matches an independent rerun of each cell") {
        const auto data = linear_task(60, 3, 8);
        GridSpace grid;
        grid.learning_rates = {0.01, 0.001};
        grid.hidden_units = {4, 8};
        TrainConfig base;
        base.epochs = 6;
        const ModelSpace space{1, Activation::tanh};
        const std::uint64_t seed = 9;
        const auto r = grid_search_cv(data, space, grid, base, 3, seed);
        REQUIRE(r.cells.size() == 4);

        const auto folds = k_fold_split(data, 3, seed);
        std::optional<std::size_t> best;
        double best_loss = 0.0;
        for (std::size_t c = 0; c < 4; ++c) {
            const auto& cell = r.cells[c].cell;
            std::vector<double> mean(base.epochs, 0.0);
            for (std::size_t f = 0; f < 3; ++f) {
                TrainConfig cfg = config_for(base, cell);
                cfg.seed = derive_seed(seed, f);
                cfg.track_neighbors = false;
                auto m = init_model(3, 3, {cell.hidden_units}, Activation::tanh, InitScheme::fan_in_scaled(),
                                    fold_init_seed(seed, f));
                const auto h = train(std::move(m), folds[f].train, folds[f].test, cfg).history;
                for (std::size_t e = 0; e < base.epochs; ++e) {
                    mean[e] += h.epochs[e].test_loss / 3.0;
                }
            }
            const double cell_best = *std::min_element(mean.begin(), mean.end());
            CHECK(cell_best == r.cells[c].best_loss);
            const bool better = !best || cell_best < best_loss ||
                                (cell_best == best_loss && cell.hidden_units < r.cells[*best].cell.hidden_units);
            if (better) {
                best = c;
                best_loss = cell_best;
            }
        }
        CHECK(r.best == best);
    }

    TEST_CASE("linear models collapse the hidden-unit grid; mse collapses margins") {
        const auto data = linear_task(30, 2, 9);
        GridSpace grid;
        grid.learning_rates = {0.01};
        TrainConfig base;
        base.epochs = 2;
        CHECK(grid_search_cv(data, ModelSpace{0}, grid, base, 3, 1).cells.size() == 1);
        CHECK(grid_search_cv(data, ModelSpace{1}, grid, base, 3, 1).cells.size() == grid.hidden_units.size());
    }

    TEST_CASE("empty grid") {
        const auto data = linear_task(30, 2, 9);
        GridSpace grid;
        grid.learning_rates.clear();
        CHECK_THROWS_AS(grid_search_cv(data, ModelSpace{0}, grid, TrainConfig{}, 3, 1), ValidationError);
    }
}
