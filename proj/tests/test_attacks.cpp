#include "doctest.h"

#include <cmath>

#include "lotos/attacks.hpp"

using namespace lotos;

namespace {

Model linear_softmax(std::uint64_t seed, std::size_t n = 6, std::size_t m = 3) {
    return build_model(ModelSpec::linear(n, m), seed);
}

double ce_at(const Model& model, const Vector& x, std::size_t y) {
    return cross_entropy_loss(model_forward(model, x).probabilities, y);
}

}  // namespace

TEST_CASE("epsilon zero returns the input unchanged") {
    Model model = linear_softmax(1);
    const Vector x = {0.2, 0.4, 0.6, 0.8, 0.5, 0.3};
    AttackConfig config;
    config.epsilon = 0.0;
    config.steps = 10;
    CHECK(pgd_attack(model, x, 0, config) == x);
}

TEST_CASE("zero steps returns the input without random start") {
    Model model = linear_softmax(2);
    const Vector x = {0.2, 0.4, 0.6, 0.8, 0.5, 0.3};
    AttackConfig config;
    config.epsilon = 0.5;
    config.steps = 0;
    CHECK(pgd_attack(model, x, 0, config) == x);

    // with random start the output stays inside ball and domain
    config.random_start = true;
    const Vector xr = pgd_attack(model, x, 0, config);
    Vector delta = xr;
    axpy(-1.0, x, delta);
    CHECK(norm2(delta) <= config.epsilon + 1e-9);
    for (double v : xr) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("one-step L2 attack strictly increases the loss of a linear model") {
    Model model = linear_softmax(3);
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Vector x(6);
        for (auto& v : x) v = rng.uniform(0.2, 0.8);
        const std::size_t y = rng.below(3);
        AttackConfig config;
        config.epsilon = 0.1;
        config.steps = 1;
        const auto [loss, grad] = loss_and_input_grad(model, x, y);
        if (norm2(grad) == 0.0) continue;
        const Vector x_adv = pgd_attack(model, x, y, config);
        CHECK(ce_at(model, x_adv, y) > loss);
    }
}

TEST_CASE("untargeted PGD loss never decreases on a linear model") {
    Model model = linear_softmax(5);
    Rng rng(11);
    Vector x(6);
    for (auto& v : x) v = rng.uniform(0.3, 0.7);
    const std::size_t y = 1;
    AttackConfig config;
    config.epsilon = 0.4;
    config.steps = 25;
    // prefixes of the deterministic iterate path are full runs of fewer steps
    double prev = ce_at(model, x, y);
    for (std::size_t steps = 1; steps <= config.steps; ++steps) {
        AttackConfig partial = config;
        partial.steps = steps;
        const double loss = ce_at(model, pgd_attack(model, x, y, partial), y);
        CHECK(loss >= prev - 1e-12);
        prev = loss;
    }
}

TEST_CASE("ball constraint holds for both norms on random runs") {
    Model model = build_model(ModelSpec::desk_cnn(12, 3), 9);
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        Vector x(12);
        for (auto& v : x) v = rng.uniform();
        const std::size_t y = rng.below(3);
        AttackConfig config;
        config.epsilon = 0.05 + 0.5 * rng.uniform();
        config.steps = 10;
        config.norm = (trial % 2 == 0) ? AttackNorm::L2 : AttackNorm::Linf;
        config.random_start = (trial % 3 == 0);
        config.seed = trial;
        const Vector x_adv = pgd_attack(model, x, y, config);
        Vector delta = x_adv;
        axpy(-1.0, x, delta);
        if (config.norm == AttackNorm::L2) {
            CHECK(norm2(delta) <= config.epsilon + 1e-9);
        } else {
            for (double d : delta) CHECK(std::abs(d) <= config.epsilon + 1e-9);
        }
        for (double v : x_adv) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("determinism: same seed and config give identical adversarial examples") {
    Model model = build_model(ModelSpec::desk_cnn(12, 3), 17);
    Vector x(12, 0.5);
    AttackConfig config;
    config.epsilon = 0.3;
    config.steps = 20;
    config.random_start = true;
    config.seed = 12345;
    CHECK(pgd_attack(model, x, 0, config) == pgd_attack(model, x, 0, config));
}

TEST_CASE("targeted attack drives prediction toward the target class") {
    // a linear model with huge margins so the attack has a clean signal
    Model model = build_model(ModelSpec::linear(4, 3), 1);
    auto& dense = std::get<DenseLayer>(model.layers[0]);
    dense.weights.data = {8.0, 0.0, 0.0, 0.0,
                          0.0, 8.0, 0.0, 0.0,
                          0.0, 0.0, 8.0, 0.0};
    std::fill(dense.bias->begin(), dense.bias->end(), 0.0);
    const Vector x = {0.9, 0.1, 0.1, 0.5};  // class 0 initially
    AttackConfig config;
    config.epsilon = 1.5;
    config.steps = 60;
    config.targeted = 2;
    const Vector x_adv = pgd_attack(model, x, 0, config);
    const auto probs = model_forward(model, x_adv).probabilities;
    CHECK(probs[2] > probs[0]);
}

TEST_CASE("ensemble loss reduces to the single model loss") {
    std::vector<Model> models;
    models.push_back(linear_softmax(31));
    const Vector x = {0.2, 0.7, 0.4, 0.1, 0.9, 0.5};
    const auto [el, eg] = ensemble_loss_for_attack(models, x, 2);
    const auto [sl, sg] = loss_and_input_grad(models[0], x, 2);
    CHECK(el == doctest::Approx(sl).epsilon(1e-12));
    for (std::size_t i = 0; i < eg.size(); ++i)
        CHECK(eg[i] == doctest::Approx(sg[i]).epsilon(1e-12));

    // two identical members behave like one
    models.push_back(models[0]);
    const auto [el2, eg2] = ensemble_loss_for_attack(models, x, 2);
    CHECK(el2 == doctest::Approx(sl).epsilon(1e-12));
    for (std::size_t i = 0; i < eg2.size(); ++i)
        CHECK(eg2[i] == doctest::Approx(sg[i]).epsilon(1e-12));
}

TEST_CASE("ensemble loss gradient matches finite differences") {
    std::vector<Model> models;
    models.push_back(build_model(ModelSpec::desk_cnn(8, 3), 41));
    models.push_back(build_model(ModelSpec::desk_cnn(8, 3), 42));
    Rng rng(19);
    Vector x(8);
    for (auto& v : x) v = rng.uniform();
    const std::size_t y = 1;
    const auto [loss, grad] = ensemble_loss_for_attack(models, x, y);
    const double h = 1e-5;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double lp = ensemble_loss_for_attack(models, xp, y).first;
        const double lm = ensemble_loss_for_attack(models, xm, y).first;
        CHECK(grad[i] == doctest::Approx((lp - lm) / (2.0 * h)).epsilon(1e-6).scale(1.0));
    }
    CHECK(loss > 0.0);
}

TEST_CASE("attack input validation") {
    Model model = linear_softmax(51);
    AttackConfig config;
    CHECK_THROWS_AS(pgd_attack(model, Vector(3, 0.5), 0, config), ShapeError);
    config.targeted = 7;
    CHECK_THROWS_AS(pgd_attack(model, Vector(6, 0.5), 0, config), InvalidInput);
}
