#include "lotos/nets.hpp"

#include <algorithm>

#include "lotos/attacks.hpp"

namespace lotos {

void ModelSpec::validate() const {
    if (input_dim == 0 || classes == 0 || layers.empty())
        throw ConfigError("ModelSpec: empty model");
    std::size_t dim = input_dim;
    for (const auto& l : layers) {
        if (l.kind == LayerDesc::Kind::Conv1d) {
            if (l.taps == 0 || l.taps > dim) throw ConfigError("ModelSpec: bad conv taps");
        } else {
            if (l.out_dim == 0) throw ConfigError("ModelSpec: bad dense size");
            dim = l.out_dim;
        }
        if (l.activation != Activation::Relu && l.activation != Activation::None)
            throw ConfigError("ModelSpec: unsupported activation");
    }
    if (dim != classes) throw ConfigError("ModelSpec: final layer must emit class logits");
}

ModelSpec ModelSpec::desk_cnn(std::size_t input_dim, std::size_t classes) {
    ModelSpec s;
    s.input_dim = input_dim;
    s.classes = classes;
    s.layers = {LayerDesc::conv1d(3, Activation::Relu), LayerDesc::conv1d(3, Activation::Relu),
                LayerDesc::dense(classes, Activation::None)};
    return s;
}

ModelSpec ModelSpec::linear(std::size_t input_dim, std::size_t classes) {
    ModelSpec s;
    s.input_dim = input_dim;
    s.classes = classes;
    s.layers = {LayerDesc::dense(classes, Activation::None)};
    return s;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model model;
    model.spec = spec;
    Rng rng(seed);
    std::size_t dim = spec.input_dim;
    for (const auto& desc : spec.layers) {
        if (desc.kind == LayerDesc::Kind::Conv1d) {
            Conv1dCircular c{ConvFilter{Vector(desc.taps)}, dim, 0.1};
            // positive-mean taps plus a positive bias keep early ReLU
            // pre-activations alive on [0,1] inputs
            for (auto& t : c.filter.taps)
                t = 1.0 / static_cast<double>(desc.taps) + 0.25 * rng.gaussian();
            model.layers.emplace_back(std::move(c));
        } else {
            DenseLayer d{Matrix(desc.out_dim, dim), Vector(desc.out_dim, 0.0)};
            const double s = 1.0 / std::sqrt(static_cast<double>(dim));
            for (auto& w : d.weights.data) w = s * rng.gaussian();
            model.layers.emplace_back(std::move(d));
            dim = desc.out_dim;
        }
        model.spectral.emplace_back();
    }
    return model;
}

namespace {

Vector softmax(const Vector& logits) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    Vector p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - zmax);
        sum += p[i];
    }
    for (auto& x : p) x /= sum;
    return p;
}

}  // namespace

ForwardCache model_forward(const Model& model, const Vector& x) {
    if (x.size() != model.input_dim()) throw ShapeError("model_forward: input size mismatch");
    ForwardCache cache;
    Vector cur = x;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        cache.inputs.push_back(cur);
        Vector z = forward(model.layers[li], cur);
        cache.preacts.push_back(z);
        if (model.spec.layers[li].activation == Activation::Relu)
            for (auto& v : z) v = std::max(v, 0.0);
        cur = std::move(z);
    }
    cache.logits = cur;
    cache.probabilities = softmax(cache.logits);
    return cache;
}

double cross_entropy_loss(const Vector& probabilities, std::size_t label) {
    if (label >= probabilities.size()) throw InvalidInput("cross_entropy_loss: label out of range");
    return -std::log(std::max(probabilities[label], 1e-300));
}

void ModelGrads::add_scaled(const ModelGrads& other, double t) {
    for (std::size_t i = 0; i < layer_grads.size(); ++i)
        axpy(t, other.layer_grads[i], layer_grads[i]);
    if (!input_grad.empty() && !other.input_grad.empty()) axpy(t, other.input_grad, input_grad);
}

void ModelGrads::scale_all(double t) {
    for (auto& g : layer_grads) scale(g, t);
    scale(input_grad, t);
}

ModelGrads zero_grads(const Model& model) {
    ModelGrads g;
    for (const auto& layer : model.layers) g.layer_grads.emplace_back(parameter_count(layer), 0.0);
    g.input_grad.assign(model.input_dim(), 0.0);
    return g;
}

ModelGrads model_backward(const Model& model, const ForwardCache& cache, std::size_t label) {
    if (label >= model.classes()) throw InvalidInput("model_backward: label out of range");
    ModelGrads grads;
    grads.layer_grads.resize(model.layers.size());

    // dCE/dlogits = p - e_y
    Vector upstream = cache.probabilities;
    upstream[label] -= 1.0;

    for (std::size_t li = model.layers.size(); li-- > 0;) {
        if (model.spec.layers[li].activation == Activation::Relu)
            for (std::size_t i = 0; i < upstream.size(); ++i)
                if (cache.preacts[li][i] <= 0.0) upstream[i] = 0.0;
        auto b = backward(model.layers[li], cache.inputs[li], upstream);
        grads.layer_grads[li] = std::move(b.weight_grads);
        upstream = std::move(b.input_grad);
    }
    grads.input_grad = std::move(upstream);
    return grads;
}

std::pair<double, Vector> loss_and_input_grad(const Model& model, const Vector& x,
                                              std::size_t label) {
    const auto cache = model_forward(model, x);
    const double loss = cross_entropy_loss(cache.probabilities, label);
    auto grads = model_backward(model, cache, label);
    return {loss, std::move(grads.input_grad)};
}

void sgd_step(Model& model, const ModelGrads& grads, const TrainConfig& config,
              OptimizerState& opt, double lr) {
    if (opt.velocity.size() != model.layers.size()) {
        opt.velocity.clear();
        for (const auto& layer : model.layers)
            opt.velocity.emplace_back(parameter_count(layer), 0.0);
    }
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        Vector params = get_parameters(model.layers[li]);
        auto& vel = opt.velocity[li];
        const auto& g = grads.layer_grads[li];
        for (std::size_t i = 0; i < params.size(); ++i) {
            vel[i] = config.momentum * vel[i] + g[i] + config.weight_decay * params[i];
            params[i] -= lr * vel[i];
        }
        set_parameters(model.layers[li], params);
    }
    if (config.clip_to) {
        ClipOptions copts;
        copts.tol = config.clip_tol;
        copts.power = {.max_iters = 500, .tol = 1e-8, .seed = 1};
        for (std::size_t li = 0; li < model.layers.size(); ++li)
            clip_spectral_norm(model.layers[li], *config.clip_to, copts, &model.spectral[li]);
    }
}

double loss_lipschitz_bound(const Model& model) {
    double product = std::sqrt(2.0);
    for (const auto& layer : model.layers) {
        auto top = power_iteration(as_operator(layer), std::nullopt,
                                   {.max_iters = 5000, .tol = 1e-6});
        product *= top.sigma;
    }
    return product;
}

double scheduled_lr(const TrainConfig& config, std::size_t iter, std::size_t total_iters) {
    const double base = config.learning_rate;
    const auto warm_until = static_cast<std::size_t>(config.warmup_frac * total_iters);
    const auto decay_from = static_cast<std::size_t>(config.decay_frac * total_iters);
    if (iter < warm_until) return base * 0.1;
    if (iter >= decay_from) return base * 0.1;
    return base;
}

void adversarial_train_step(Model& model, const Batch& batch, const AdvTrainConfig& adv_config,
                            const TrainConfig& config, OptimizerState& opt, double lr) {
    if (batch.inputs.empty()) throw InvalidInput("adversarial_train_step: empty batch");
    auto grads = zero_grads(model);
    const double clean_w = adv_config.enabled ? 1.0 - adv_config.mix_ratio : 1.0;
    const double adv_w = adv_config.enabled ? adv_config.mix_ratio : 0.0;
    const double inv = 1.0 / static_cast<double>(batch.inputs.size());

    for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
        const Vector& x = *batch.inputs[i];
        const std::size_t y = batch.labels[i];
        if (clean_w != 0.0) {
            const auto cache = model_forward(model, x);
            grads.add_scaled(model_backward(model, cache, y), clean_w * inv);
        }
        if (adv_w != 0.0) {
            const Vector x_adv = pgd_attack(model, x, y, adv_config.attack);
            const auto cache = model_forward(model, x_adv);
            grads.add_scaled(model_backward(model, cache, y), adv_w * inv);
        }
    }
    sgd_step(model, grads, config, opt, lr);
}

}  // namespace lotos
