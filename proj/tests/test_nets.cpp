#include "doctest.h"

#include <cmath>

#include "lotos/attacks.hpp"
#include "lotos/nets.hpp"

using namespace lotos;

namespace {

Model tiny_model(std::uint64_t seed, std::size_t n = 6, std::size_t m = 3) {
    return build_model(ModelSpec::desk_cnn(n, m), seed);
}

double model_loss(const Model& model, const Vector& x, std::size_t y) {
    return cross_entropy_loss(model_forward(model, x).probabilities, y);
}

}  // namespace

TEST_CASE("zero-weight model gives uniform probabilities") {
    Model model = build_model(ModelSpec::linear(4, 5), 1);
    auto& dense = std::get<DenseLayer>(model.layers[0]);
    std::fill(dense.weights.data.begin(), dense.weights.data.end(), 0.0);
    std::fill(dense.bias->begin(), dense.bias->end(), 0.0);
    const auto cache = model_forward(model, {0.1, 0.9, 0.4, 0.2});
    for (double p : cache.probabilities) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("single dense identity layer reproduces the closed-form softmax") {
    Model model = build_model(ModelSpec::linear(2, 2), 1);
    auto& dense = std::get<DenseLayer>(model.layers[0]);
    dense.weights = Matrix::identity(2);
    std::fill(dense.bias->begin(), dense.bias->end(), 0.0);
    // domain aside, the map is exact for any input
    const auto cache = model_forward(model, {10.0, 0.0});
    CHECK(cache.probabilities[0] == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-12));
}

TEST_CASE("probabilities sum to one") {
    Rng rng(5);
    Model model = tiny_model(7);
    for (int trial = 0; trial < 1000; ++trial) {
        Vector x(6);
        for (auto& v : x) v = rng.uniform();
        const auto cache = model_forward(model, x);
        double sum = 0.0;
        for (double p : cache.probabilities) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("cross-entropy basics") {
    CHECK(cross_entropy_loss({0.25, 0.25, 0.25, 0.25}, 0) == doctest::Approx(std::log(4.0)));
    CHECK(cross_entropy_loss({1.0, 0.0}, 0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(cross_entropy_loss({0.5, 0.5}, 2), InvalidInput);
}

TEST_CASE("model_backward matches finite differences") {
    Model model = tiny_model(11);
    Rng rng(3);
    Vector x(6);
    for (auto& v : x) v = rng.uniform();
    const std::size_t y = 1;

    const auto cache = model_forward(model, x);
    const auto grads = model_backward(model, cache, y);

    const double h = 1e-5;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        Vector params = get_parameters(model.layers[li]);
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            Vector p = params;
            p[pi] = params[pi] + h;
            set_parameters(model.layers[li], p);
            const double lp = model_loss(model, x, y);
            p[pi] = params[pi] - h;
            set_parameters(model.layers[li], p);
            const double lm = model_loss(model, x, y);
            set_parameters(model.layers[li], params);
            const double fd = (lp - lm) / (2.0 * h);
            CHECK(grads.layer_grads[li][pi] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }

    // input gradient too
    for (std::size_t xi = 0; xi < x.size(); ++xi) {
        Vector xp = x, xm = x;
        xp[xi] += h;
        xm[xi] -= h;
        const double fd = (model_loss(model, xp, y) - model_loss(model, xm, y)) / (2.0 * h);
        CHECK(grads.input_grad[xi] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("perfectly confident prediction has zero loss and gradient") {
    Model model = build_model(ModelSpec::linear(2, 2), 1);
    auto& dense = std::get<DenseLayer>(model.layers[0]);
    dense.weights.data = {400.0, 0.0, -400.0, 0.0};
    std::fill(dense.bias->begin(), dense.bias->end(), 0.0);
    const auto cache = model_forward(model, {1.0, 0.0});
    CHECK(cross_entropy_loss(cache.probabilities, 0) == doctest::Approx(0.0));
    const auto grads = model_backward(model, cache, 0);
    for (double g : grads.input_grad) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("sgd_step basics") {
    Model model = tiny_model(21);
    const Vector before = get_parameters(model.layers[0]);

    TrainConfig config;
    config.momentum = 0.0;
    config.weight_decay = 0.0;
    OptimizerState opt;
    sgd_step(model, zero_grads(model), config, opt, 1.0);
    CHECK(get_parameters(model.layers[0]) == before);

    // decay-only step shrinks uniformly
    config.weight_decay = 0.1;
    sgd_step(model, zero_grads(model), config, opt, 1.0);
    const Vector after = get_parameters(model.layers[0]);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(after[i] == doctest::Approx(before[i] * 0.9).epsilon(1e-12));
}

TEST_CASE("sgd_step with clipping keeps every layer under the target") {
    Model model = tiny_model(31, 12, 3);
    // blow the weights up, then step with clipping enabled
    for (auto& layer : model.layers) {
        Vector p = get_parameters(layer);
        scale(p, 10.0);
        set_parameters(layer, p);
    }
    TrainConfig config;
    config.clip_to = 1.0;
    config.clip_tol = 1e-2;
    OptimizerState opt;
    sgd_step(model, zero_grads(model), config, opt, 0.01);
    for (const auto& layer : model.layers) {
        const auto svd = svd_oracle(materialize_operator(layer));
        CHECK(svd.singular_values[0] <= 1.01 + 1e-9);
    }
}

TEST_CASE("loss_lipschitz_bound is the sqrt(2)-scaled product of norms") {
    Model model = build_model(
        ModelSpec{4, 4, {LayerDesc::dense(4, Activation::Relu), LayerDesc::dense(4, Activation::None)}},
        3);
    for (auto& layer : model.layers) {
        auto& d = std::get<DenseLayer>(layer);
        d.weights = Matrix::identity(4);
        std::fill(d.bias->begin(), d.bias->end(), 0.0);
    }
    CHECK(loss_lipschitz_bound(model) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-5));

    std::get<DenseLayer>(model.layers[0]).weights = Matrix::diagonal({2.0, 2.0, 2.0, 2.0});
    std::get<DenseLayer>(model.layers[1]).weights = Matrix::diagonal({3.0, 3.0, 3.0, 3.0});
    CHECK(loss_lipschitz_bound(model) == doctest::Approx(6.0 * std::sqrt(2.0)).epsilon(1e-5));

    std::get<DenseLayer>(model.layers[1]).weights = Matrix(4, 4);
    CHECK(loss_lipschitz_bound(model) == doctest::Approx(0.0));
}

TEST_CASE("softmax-CE logit gradient norm never exceeds sqrt(2)") {
    Rng rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t m = 2 + rng.below(6);
        Vector z(m);
        for (auto& v : z) v = rng.uniform(-20.0, 20.0);
        Vector p(m);
        double zmax = *std::max_element(z.begin(), z.end()), sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) sum += (p[i] = std::exp(z[i] - zmax));
        for (auto& v : p) v /= sum;
        const std::size_t y = rng.below(m);
        p[y] -= 1.0;
        CHECK(norm2(p) <= std::sqrt(2.0) + 1e-12);
    }
}

TEST_CASE("per-sample loss respects the Lipschitz bound") {
    Model model = tiny_model(41, 8, 3);
    const double bound = loss_lipschitz_bound(model);
    Rng rng(19);
    std::size_t checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        Vector x(8), x2(8);
        for (auto& v : x) v = rng.uniform();
        Vector dir = rng.unit_vector(8);
        const double r = 0.1 * rng.uniform();
        for (std::size_t i = 0; i < 8; ++i) x2[i] = std::clamp(x[i] + r * dir[i], 0.0, 1.0);
        Vector diff = x2;
        axpy(-1.0, x, diff);
        const double dist = norm2(diff);
        const std::size_t y = rng.below(3);
        const double gap = std::abs(model_loss(model, x, y) - model_loss(model, x2, y));
        CHECK(gap <= bound * dist + 1e-9);
        ++checked;
    }
    CHECK(checked == 10000);
}

TEST_CASE("adversarial_train_step edge cases reduce to the plain step") {
    TrainConfig config;
    config.momentum = 0.9;
    AttackConfig attack;
    attack.epsilon = 0.0;
    attack.steps = 5;

    Rng rng(23);
    Vector x1(6), x2(6);
    for (auto& v : x1) v = rng.uniform();
    for (auto& v : x2) v = rng.uniform();
    Batch batch;
    batch.inputs = {&x1, &x2};
    batch.labels = {0, 2};

    // epsilon = 0: identical to a plain step
    {
        Model a = tiny_model(51), b = tiny_model(51);
        OptimizerState oa, ob;
        AdvTrainConfig adv;
        adv.enabled = true;
        adv.attack = attack;
        adv.mix_ratio = 0.5;
        adversarial_train_step(a, batch, adv, config, oa, 0.05);
        AdvTrainConfig off;
        off.enabled = false;
        adversarial_train_step(b, batch, off, config, ob, 0.05);
        for (std::size_t li = 0; li < a.layers.size(); ++li) {
            const Vector pa = get_parameters(a.layers[li]);
            const Vector pb = get_parameters(b.layers[li]);
            for (std::size_t i = 0; i < pa.size(); ++i)
                CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
        }
    }

    // mix ratio 0: identical to a plain step even with a live attack
    {
        Model a = tiny_model(52), b = tiny_model(52);
        OptimizerState oa, ob;
        AdvTrainConfig adv;
        adv.enabled = true;
        adv.attack.epsilon = 0.3;
        adv.attack.steps = 5;
        adv.mix_ratio = 0.0;
        adversarial_train_step(a, batch, adv, config, oa, 0.05);
        AdvTrainConfig off;
        adversarial_train_step(b, batch, off, config, ob, 0.05);
        for (std::size_t li = 0; li < a.layers.size(); ++li)
            CHECK(get_parameters(a.layers[li]) == get_parameters(b.layers[li]));
    }
}

TEST_CASE("model spec validation") {
    CHECK_THROWS_AS(build_model(ModelSpec{}, 1), ConfigError);
    ModelSpec bad{8, 3, {LayerDesc::dense(5, Activation::None)}};
    CHECK_THROWS_AS(build_model(bad, 1), ConfigError);  // 5 != 3 logits
    CHECK_THROWS_AS(model_forward(tiny_model(1), Vector(7, 0.0)), ShapeError);
}
