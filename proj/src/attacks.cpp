#include "lotos/attacks.hpp"

#include <algorithm>

namespace lotos {

namespace {

void project_ball(Vector& x, const Vector& origin, const AttackConfig& config) {
    if (config.norm == AttackNorm::L2) {
        Vector delta = x;
        axpy(-1.0, origin, delta);
        const double d = norm2(delta);
        if (d > config.epsilon && d > 0.0) {
            const double s = config.epsilon / d;
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = origin[i] + s * delta[i];
        }
    } else {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = std::clamp(x[i], origin[i] - config.epsilon, origin[i] + config.epsilon);
    }
}

void clamp_domain(Vector& x) {
    for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
}

template <typename LossGrad>
Vector pgd_core(std::size_t dim, const Vector& x0, const AttackConfig& config, LossGrad&& lg) {
    if (x0.size() != dim) throw ShapeError("pgd_attack: input size mismatch");
    if (config.epsilon < 0.0) throw InvalidInput("pgd_attack: negative epsilon");
    if (config.epsilon == 0.0) return x0;

    Vector x = x0;
    if (config.random_start) {
        Rng rng(config.seed);
        if (config.norm == AttackNorm::L2) {
            Vector dir = rng.unit_vector(dim);
            const double r = config.epsilon * std::pow(rng.uniform(), 1.0 / dim);
            axpy(r, dir, x);
        } else {
            for (auto& v : x) v += config.epsilon * rng.uniform(-1.0, 1.0);
        }
        project_ball(x, x0, config);
        clamp_domain(x);
    }

    const double step = config.effective_step();
    const bool targeted = config.targeted.has_value();
    for (std::size_t it = 0; it < config.steps; ++it) {
        Vector g = lg(x);
        // untargeted ascends l(x, y); targeted descends l(x, y_t)
        const double sign = targeted ? -1.0 : 1.0;
        if (config.norm == AttackNorm::L2) {
            const double gn = norm2(g);
            if (gn == 0.0) continue;
            axpy(sign * step / gn, g, x);
        } else {
            bool nonzero = false;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (g[i] != 0.0) nonzero = true;
                x[i] += sign * step * (g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0));
            }
            if (!nonzero) continue;
        }
        project_ball(x, x0, config);
        clamp_domain(x);
    }
    return x;
}

}  // namespace

std::pair<double, Vector> ensemble_loss_for_attack(std::span<const Model> models, const Vector& x,
                                                   std::size_t label) {
    if (models.empty()) throw InvalidInput("ensemble_loss_for_attack: empty ensemble");
    const std::size_t m = models[0].classes();
    std::vector<ForwardCache> caches;
    caches.reserve(models.size());
    Vector mean_probs(m, 0.0);
    for (const auto& model : models) {
        caches.push_back(model_forward(model, x));
        axpy(1.0 / static_cast<double>(models.size()), caches.back().probabilities, mean_probs);
    }
    const double loss = cross_entropy_loss(mean_probs, label);

    // dCE/dz_i = (p_i[y] / (N * pbar[y])) * (p_i - e_y), then backprop each member
    Vector grad(x.size(), 0.0);
    const double pbar_y = std::max(mean_probs[label], 1e-300);
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto& p = caches[mi].probabilities;
        Vector upstream(m);
        const double c = p[label] / (static_cast<double>(models.size()) * pbar_y);
        for (std::size_t j = 0; j < m; ++j)
            upstream[j] = c * (p[j] - (j == label ? 1.0 : 0.0));
        // reuse the model backward pass through the cached activations
        const auto& model = models[mi];
        Vector up = std::move(upstream);
        for (std::size_t li = model.layers.size(); li-- > 0;) {
            if (model.spec.layers[li].activation == Activation::Relu)
                for (std::size_t i = 0; i < up.size(); ++i)
                    if (caches[mi].preacts[li][i] <= 0.0) up[i] = 0.0;
            up = backward(model.layers[li], caches[mi].inputs[li], up).input_grad;
        }
        axpy(1.0, up, grad);
    }
    return {loss, std::move(grad)};
}

Vector pgd_attack(const Model& model, const Vector& x, std::size_t label,
                  const AttackConfig& config) {
    const std::size_t cls = config.targeted.value_or(label);
    if (cls >= model.classes()) throw InvalidInput("pgd_attack: class out of range");
    return pgd_core(model.input_dim(), x, config, [&](const Vector& xi) {
        return loss_and_input_grad(model, xi, cls).second;
    });
}

Vector pgd_attack(std::span<const Model> models, const Vector& x, std::size_t label,
                  const AttackConfig& config) {
    if (models.empty()) throw InvalidInput("pgd_attack: empty ensemble");
    const std::size_t cls = config.targeted.value_or(label);
    if (cls >= models[0].classes()) throw InvalidInput("pgd_attack: class out of range");
    return pgd_core(models[0].input_dim(), x, config, [&](const Vector& xi) {
        return ensemble_loss_for_attack(models, xi, cls).second;
    });
}

}  // namespace lotos
