#include "crossmap/errors.hpp"
#include "crossmap/kernels.hpp"
#include "crossmap/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace crossmap;

namespace {

Layer layer(std::vector<std::vector<double>> w, std::vector<double> b) { return {Matrix::from_rows(w), std::move(b)}; }

}  // namespace

TEST_SUITE("model construction") {
    TEST_CASE("linear model is a single affine layer") {
        const auto m = init_model(5, 3, {}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        CHECK(m.layers().size() == 1);
        CHECK(m.layers()[0].weights.rows() == 3);
        CHECK(m.layers()[0].weights.cols() == 5);
        CHECK(m.hidden_layers() == 0);
    }

    TEST_CASE("one hidden layer shapes") {
        const auto m = init_model(7, 4, {128}, Activation::relu, InitScheme::fan_in_scaled(), 1);
        REQUIRE(m.layers().size() == 2);
        CHECK(m.layers()[0].weights.rows() == 128);
        CHECK(m.layers()[0].weights.cols() == 7);
        CHECK(m.layers()[1].weights.rows() == 4);
        CHECK(m.layers()[1].weights.cols() == 128);
        CHECK(m.parameter_count() == 128 * 7 + 128 + 4 * 128 + 4);
    }

    TEST_CASE("uniform scheme: weights in [-1, 1], biases zero") {
        const auto m = init_model(20, 30, {40, 40}, Activation::tanh, InitScheme::uniform(-1.0, 1.0), 9);
        double lo = 1.0, hi = -1.0;
        for (const auto& l : m.layers()) {
            for (double w : l.weights.values()) {
                CHECK(w >= -1.0);
                CHECK(w <= 1.0);
                lo = std::min(lo, w);
                hi = std::max(hi, w);
            }
            for (double b : l.bias) {
                CHECK(b == 0.0);
            }
        }
        CHECK(lo < -0.9);
        CHECK(hi > 0.9);
    }

    TEST_CASE("fan-in scaled bound") {
        const auto m = init_model(10, 6, {}, Activation::relu, InitScheme::fan_in_scaled(), 2);
        const double a = std::sqrt(6.0 / 16.0);
        for (double w : m.layers()[0].weights.values()) {
            CHECK(std::abs(w) <= a);
        }
    }

    TEST_CASE("seeded and distinct per seed") {
        const auto a = init_model(4, 4, {8}, Activation::relu, InitScheme::fan_in_scaled(), 5);
        CHECK(a == init_model(4, 4, {8}, Activation::relu, InitScheme::fan_in_scaled(), 5));
        CHECK_FALSE(a == init_model(4, 4, {8}, Activation::relu, InitScheme::fan_in_scaled(), 6));
    }

    TEST_CASE("invalid shapes and schemes") {
        CHECK_THROWS_AS(init_model(0, 3, {}, Activation::relu, InitScheme::fan_in_scaled(), 1), ValidationError);
        CHECK_THROWS_AS(init_model(3, 3, {0}, Activation::relu, InitScheme::fan_in_scaled(), 1), ValidationError);
        CHECK_THROWS_AS(InitScheme::uniform(1.0, 1.0), ValidationError);
        CHECK_THROWS_AS(MappingModel({layer({{1, 2}}, {0}), layer({{1, 2}}, {0})}, Activation::relu),
                        ValidationError);
        CHECK_THROWS_AS(MappingModel({layer({{1, 2}}, {0, 0})}, Activation::relu), ValidationError);
        CHECK_THROWS_AS(MappingModel({layer({{NAN}}, {0})}, Activation::relu), ValidationError);
    }
}

TEST_SUITE("forward") {
    TEST_CASE("identity and constant maps") {
        Rng rng(1);
        const auto x = oracle::random_matrix(5, 3, rng);
        const MappingModel id({layer({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {0, 0, 0})}, Activation::relu);
        CHECK(forward(id, x) == x);
        const MappingModel constant({layer({{0, 0, 0}, {0, 0, 0}}, {2.5, -1})}, Activation::relu);
        const auto out = forward(constant, x);
        for (std::size_t i = 0; i < out.rows(); ++i) {
            CHECK(out(i, 0) == 2.5);
            CHECK(out(i, 1) == -1.0);
        }
    }

    TEST_CASE("one hidden tanh unit") {
        const MappingModel m({layer({{1}}, {0}), layer({{2}}, {1})}, Activation::tanh);
        const auto out = forward(m, Matrix::from_rows({{1}}));
        CHECK(out(0, 0) == doctest::Approx(2.0 * std::tanh(1.0) + 1.0).epsilon(1e-15));
        CHECK(out(0, 0) == doctest::Approx(2.5232).epsilon(1e-4));
    }

    TEST_CASE("relu and sigmoid hidden units") {
        const MappingModel r({layer({{1}, {-1}}, {0, 0}), layer({{1, 1}}, {0})}, Activation::relu);
        CHECK(forward(r, Matrix::from_rows({{3}}))(0, 0) == 3.0);
        CHECK(forward(r, Matrix::from_rows({{-2}}))(0, 0) == 2.0);
        const MappingModel s({layer({{1}}, {0}), layer({{1}}, {0})}, Activation::sigmoid);
        CHECK(forward(s, Matrix::from_rows({{0}}))(0, 0) == 0.5);
    }

    TEST_CASE("vector set keeps keys; dimension mismatch throws") {
        const MappingModel m({layer({{1, 1}}, {0})}, Activation::relu);
        const VectorSet v({"a", "b"}, Matrix::from_rows({{1, 2}, {3, 4}}));
        const auto out = forward(m, v);
        CHECK(out.keys() == v.keys());
        CHECK(out.values() == Matrix::from_rows({{3}, {7}}));
        CHECK_THROWS_AS(forward(m, Matrix::from_rows({{1, 2, 3}})), ValidationError);
    }

    TEST_CASE("dropout off: training and eval passes coincide") {
        const auto m = init_model(6, 3, {16, 16}, Activation::relu, InitScheme::fan_in_scaled(), 4);
        Rng rng(8);
        const auto x = oracle::random_matrix(10, 6, rng);
        CHECK(forward_cached(m, x, 0.0, &rng).output == forward(m, x));
    }

    TEST_CASE("inverted dropout preserves the mean activation") {
        const MappingModel m({layer({{1}}, {0}), layer(std::vector<std::vector<double>>{std::vector<double>(1, 1.0)}, {0})},
                             Activation::relu);
        Rng rng(3);
        Matrix x(20000, 1, 1.0);
        const auto cache = forward_cached(m, x, 0.5, &rng);
        double mean = 0.0;
        for (double v : cache.output.values()) {
            CHECK((v == 0.0 || v == 2.0));
            mean += v;
        }
        CHECK(mean / 20000.0 == doctest::Approx(1.0).epsilon(0.03));
    }
}

TEST_SUITE("gradients") {
    TEST_CASE("linear model with mse upstream") {
        const MappingModel m({layer({{2}}, {0})}, Activation::relu);
        const auto x = Matrix::from_rows({{1}});
        const auto pred = forward(m, x);
        const auto upstream = Matrix::from_rows({{pred(0, 0) - 0.0}});
        const auto g = gradients(m, x, upstream);
        CHECK(g.layers[0].weights(0, 0) == 2.0);
        CHECK(g.layers[0].bias[0] == 2.0);
    }

    TEST_CASE("zero upstream gives zero gradients") {
        const auto m = init_model(4, 3, {5}, Activation::tanh, InitScheme::fan_in_scaled(), 1);
        Rng rng(2);
        const auto g = gradients(m, oracle::random_matrix(7, 4, rng), Matrix(7, 3));
        CHECK(g == Gradients::zeros_like(m));
    }

    TEST_CASE("shape mismatch") {
        const auto m = init_model(4, 3, {5}, Activation::tanh, InitScheme::fan_in_scaled(), 1);
        Rng rng(2);
        CHECK_THROWS_AS(gradients(m, oracle::random_matrix(7, 4, rng), Matrix(6, 3)), ValidationError);
        CHECK_THROWS_AS(gradients(m, oracle::random_matrix(7, 4, rng), Matrix(7, 2)), ValidationError);
    }

    TEST_CASE("relu derivative at zero is zero") {
        const MappingModel m({layer({{1}}, {0}), layer({{1}}, {0})}, Activation::relu);
        const auto g = gradients(m, Matrix::from_rows({{0}}), Matrix::from_rows({{1}}));
        CHECK(g.layers[0].weights(0, 0) == 0.0);
        CHECK(g.layers[0].bias[0] == 0.0);
    }

    TEST_CASE("finite differences on a small net") {
        for (auto act : {Activation::relu, Activation::tanh, Activation::sigmoid}) {
            for (auto loss : {LossKind::mse, LossKind::cosine, LossKind::max_margin}) {
                const auto r = oracle::check_gradients(2, act, loss, 101);
                CHECK(r.max_rel_error < 1e-5);
            }
        }
    }
}

TEST_SUITE("kernels") {
    TEST_CASE("serial and parallel dense kernels agree bit for bit") {
        Rng rng(12);
        for (std::size_t n : {3u, 200u}) {
            const auto in = oracle::random_matrix(n, 70, rng);
            const auto w = oracle::random_matrix(90, 70, rng);
            const auto bias = oracle::random_matrix(1, 90, rng);
            Matrix a(n, 90), b(n, 90);
            kernels::serial::affine_rows(in, w, bias.row(0), a);
            kernels::omp::affine_rows(in, w, bias.row(0), b);
            CHECK(a == b);
            Matrix ta(n, 70), tb(n, 70);
            kernels::serial::transpose_product_rows(a, w, ta);
            kernels::omp::transpose_product_rows(a, w, tb);
            CHECK(ta == tb);
            Matrix ga(90, 70), gb(90, 70);
            kernels::serial::accumulate_outer(a, in, 0.5, ga);
            kernels::omp::accumulate_outer(a, in, 0.5, gb);
            CHECK(ga == gb);
        }
    }
}

TEST_SUITE("checkpoints") {
    TEST_CASE("save and load round-trip exactly") {
        const auto m = init_model(5, 3, {7, 4}, Activation::sigmoid, InitScheme::uniform(-1.0, 1.0), 3);
        std::stringstream buf;
        save_model(buf, m);
        CHECK(load_model(buf) == m);
    }

    TEST_CASE("malformed checkpoint") {
        std::stringstream bad("{\"format\": \"something-else\"}");
        CHECK_THROWS_AS(load_model(bad), ValidationError);
        std::stringstream junk("not json");
        CHECK_THROWS_AS(load_model(junk), ValidationError);
    }
}
