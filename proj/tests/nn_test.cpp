#include <doctest.h>

#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/nn.hpp"
#include "test_util.hpp"

using namespace driftlab;
using namespace driftlab::testutil;

TEST_CASE("init_params parameter count and determinism") {
    ModelParams p = init_params({4, 3, 2}, 7);
    CHECK(p.parameter_count() == 23);  // 4*3+3 + 3*2+2

    ModelParams q = init_params({4, 3, 2}, 7);
    CHECK(params_equal(p, q));

    ModelParams r = init_params({4, 3, 2}, 8);
    CHECK_FALSE(params_equal(p, r));

    for (const auto& layer : p.layers)
        for (double b : layer.bias) CHECK(b == 0.0);
    CHECK(p.all_finite());
}

TEST_CASE("init_params rejects bad dims") {
    CHECK_THROWS_AS(init_params({}, 1), ConfigError);
    CHECK_THROWS_AS(init_params({4}, 1), ConfigError);
    CHECK_THROWS_AS(init_params({4, 0, 2}, 1), ConfigError);
    CHECK_THROWS_AS(init_params({4, -3, 2}, 1), ConfigError);
}

TEST_CASE("forward basics") {
    SUBCASE("all-zero params give zero logits") {
        ModelParams p = init_params({3, 2, 2}, 1);
        for (auto& layer : p.layers)
            for (double& w : layer.weights.data) w = 0.0;
        Matrix x(2, 3);
        x(0, 0) = 0.3;
        x(1, 2) = 0.9;
        Matrix logits = forward(p, x);
        for (double v : logits.data) CHECK(v == 0.0);
    }
    SUBCASE("single identity layer passes input through") {
        ModelParams p = init_params({2, 2}, 1);
        p.layers[0].weights(0, 0) = 1.0;
        p.layers[0].weights(0, 1) = 0.0;
        p.layers[0].weights(1, 0) = 0.0;
        p.layers[0].weights(1, 1) = 1.0;
        p.layers[0].bias = {0.0, 0.0};
        Matrix x(1, 2);
        x(0, 0) = -0.25;
        x(0, 1) = 0.75;
        Matrix logits = forward(p, x);
        CHECK(logits(0, 0) == -0.25);  // output layer is linear, no rectifier
        CHECK(logits(0, 1) == 0.75);
    }
    SUBCASE("hand-computed affine layer") {
        ModelParams p = init_params({2, 2}, 1);
        p.layers[0].weights(0, 0) = 1.0;
        p.layers[0].weights(0, 1) = 0.0;
        p.layers[0].weights(1, 0) = 0.0;
        p.layers[0].weights(1, 1) = 2.0;
        p.layers[0].bias = {0.5, 0.0};
        Matrix x(1, 2);
        x(0, 0) = 1.0;
        x(0, 1) = 1.0;
        Matrix logits = forward(p, x);
        CHECK(logits(0, 0) == doctest::Approx(1.5));
        CHECK(logits(0, 1) == doctest::Approx(2.0));
    }
    SUBCASE("dimension mismatch throws") {
        ModelParams p = init_params({4, 2}, 1);
        Matrix x(1, 3);
        CHECK_THROWS_AS(forward(p, x), ShapeError);
    }
}

TEST_CASE("loss_and_grad values") {
    SUBCASE("uniform logits give ln 2") {
        ModelParams p = init_params({2, 2}, 1);
        for (auto& layer : p.layers)
            for (double& w : layer.weights.data) w = 0.0;
        Batch batch;
        batch.inputs = Matrix(4, 2, 0.5);
        batch.labels = {0, 1, 0, 1};
        LossGrad lg = loss_and_grad(p, batch);
        CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("confident correct logits drive loss to zero") {
        ModelParams p = init_params({1, 2}, 1);
        p.layers[0].weights(0, 0) = 50.0;
        p.layers[0].weights(0, 1) = -50.0;
        p.layers[0].bias = {0.0, 0.0};
        Batch batch;
        batch.inputs = Matrix(1, 1, 1.0);
        batch.labels = {0};
        LossGrad lg = loss_and_grad(p, batch);
        CHECK(lg.loss < 1e-12);
        CHECK(lg.loss >= 0.0);
    }
    SUBCASE("label out of range throws") {
        ModelParams p = init_params({2, 2}, 1);
        Batch batch;
        batch.inputs = Matrix(1, 2, 0.5);
        batch.labels = {2};
        CHECK_THROWS_AS(loss_and_grad(p, batch), InvalidLabelError);
        batch.labels = {-1};
        CHECK_THROWS_AS(loss_and_grad(p, batch), InvalidLabelError);
    }
}

// Central finite differences as the independent gradient oracle.
static double loss_at(const ModelParams& params, const Batch& batch) {
    return loss_and_grad(params, batch).loss;
}

TEST_CASE("analytic gradients match central finite differences") {
    const double h = 1e-5;
    const double rel_tol = 1e-4;
    ModelParams params = init_params({6, 5, 3}, 42);
    Batch batch = random_batch(8, 6, 3, 99);
    LossGrad lg = loss_and_grad(params, batch);

    Rng probe_rng(4242);
    int probes = 0;
    while (probes < 120) {
        size_t layer = probe_rng.next_below(params.layers.size());
        bool probe_bias = probe_rng.next_unit() < 0.2;
        ModelParams plus = params;
        ModelParams minus = params;
        double analytic;
        if (probe_bias) {
            size_t i = probe_rng.next_below(params.layers[layer].bias.size());
            plus.layers[layer].bias[i] += h;
            minus.layers[layer].bias[i] -= h;
            analytic = lg.grads.layers[layer].bias[i];
        } else {
            size_t i = probe_rng.next_below(params.layers[layer].weights.data.size());
            plus.layers[layer].weights.data[i] += h;
            minus.layers[layer].weights.data[i] -= h;
            analytic = lg.grads.layers[layer].weights.data[i];
        }
        double fd = (loss_at(plus, batch) - loss_at(minus, batch)) / (2.0 * h);
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
        CHECK(std::abs(analytic - fd) / denom <= rel_tol);
        ++probes;
    }
}

TEST_CASE("loss is non-negative and computation is deterministic") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        ModelParams params = init_params({5, 4, 3}, seed);
        Batch batch = random_batch(6, 5, 3, seed * 31 + 7);
        LossGrad a = loss_and_grad(params, batch);
        LossGrad b = loss_and_grad(params, batch);
        CHECK(a.loss >= 0.0);
        CHECK(a.loss == b.loss);
        for (size_t l = 0; l < a.grads.layers.size(); ++l) {
            CHECK(a.grads.layers[l].weights.data == b.grads.layers[l].weights.data);
            CHECK(a.grads.layers[l].bias == b.grads.layers[l].bias);
        }
    }
}

TEST_CASE("forward and loss_and_grad never mutate their arguments") {
    ModelParams params = init_params({5, 4, 2}, 3);
    Batch batch = random_batch(4, 5, 2, 5);
    ModelParams params_copy = params;
    Matrix inputs_copy = batch.inputs;

    (void)forward(params, batch.inputs);
    LossGrad lg = loss_and_grad(params, batch);
    ModelParams stepped = sgd_step(params, lg.grads, 0.1);
    (void)stepped;

    CHECK(params_equal(params, params_copy));
    CHECK(batch.inputs.data == inputs_copy.data);
}

TEST_CASE("sgd_step arithmetic") {
    ModelParams p = init_params({1, 1}, 1);
    p.layers[0].weights(0, 0) = 1.0;
    p.layers[0].bias = {2.0};
    Gradients g;
    g.layers.resize(1);
    g.layers[0].weights = Matrix(1, 1, 0.5);
    g.layers[0].bias = {0.0};

    SUBCASE("p=1.0, g=0.5, lr=0.1 gives 0.95") {
        ModelParams stepped = sgd_step(p, g, 0.1);
        CHECK(stepped.layers[0].weights(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
        CHECK(p.layers[0].weights(0, 0) == 1.0);
    }
    SUBCASE("zero grads leave params unchanged") {
        g.layers[0].weights(0, 0) = 0.0;
        CHECK(params_equal(sgd_step(p, g, 0.1), p));
    }
    SUBCASE("lr 0 leaves params unchanged") {
        CHECK(params_equal(sgd_step(p, g, 0.0), p));
    }
    SUBCASE("shape mismatch throws") {
        g.layers[0].weights = Matrix(2, 1, 0.5);
        CHECK_THROWS_AS(sgd_step(p, g, 0.1), ShapeError);
    }
}
