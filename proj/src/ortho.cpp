#include "lotos/ortho.hpp"

#include <algorithm>

#include "lotos/attacks.hpp"

namespace lotos {

Vector LotosConfig::effective_weights() const {
    if (!weights.empty()) return weights;
    Vector w(k);
    double cur = 1.0;
    for (std::size_t i = 0; i < k; ++i, cur *= 0.25) w[i] = cur;
    return w;
}

void LotosConfig::validate() const {
    if (k == 0) throw ConfigError("LotosConfig: k must be at least 1");
    if (mal < 0.0 || lambda < 0.0) throw ConfigError("LotosConfig: mal and lambda must be >= 0");
    const Vector w = effective_weights();
    if (w.size() != k) throw ConfigError("LotosConfig: weights must have k entries");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) throw ConfigError("LotosConfig: weights must be positive");
        if (i > 0 && w[i] > w[i - 1]) throw ConfigError("LotosConfig: weights must be non-increasing");
    }
}

namespace {

// gradient of relu(|A v| - mal) in layer parameter space, vectors frozen;
// returns the measured |A v| and accumulates w * d/dA into grad
double cross_response_grad(const Layer& layer, const Vector& v, double mal, double w,
                           Vector* grad) {
    const auto op = as_operator(layer);
    const Vector h = op.apply(v);
    const double response = norm2(h);
    if (grad && response > mal && response > 0.0) {
        Vector upstream = h;
        scale(upstream, 1.0 / response);
        auto b = backward(layer, v, upstream);
        // |A v| does not depend on the bias; drop those entries
        const std::size_t nw = b.weight_grads.size();
        std::size_t bias_from = nw;
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            if (d->bias) bias_from = d->weights.data.size();
        } else if (const auto* c = std::get_if<Conv1dCircular>(&layer)) {
            if (c->bias) bias_from = c->filter.taps.size();
        } else if (const auto* c2 = std::get_if<Conv2dLayer>(&layer)) {
            if (c2->bias) bias_from = c2->kernel.size();
        }
        for (std::size_t i = bias_from; i < nw; ++i) b.weight_grads[i] = 0.0;
        axpy(w, b.weight_grads, *grad);
    }
    return response;
}

}  // namespace

PairSimilarity pair_similarity(const Layer& layer_f, const Layer& layer_g,
                               const SpectralState& spectral_f, const SpectralState& spectral_g,
                               const LotosConfig& config) {
    config.validate();
    if (layer_in_dim(layer_f) != layer_in_dim(layer_g))
        throw ShapeError("pair_similarity: layer input dimensions differ");
    if (spectral_f.triples.size() < config.k || spectral_g.triples.size() < config.k)
        throw ShapeError("pair_similarity: spectral states hold fewer than k vectors");

    PairSimilarity out;
    out.grad_f.assign(parameter_count(layer_f), 0.0);
    out.grad_g.assign(parameter_count(layer_g), 0.0);
    const Vector w = config.effective_weights();

    for (std::size_t i = 0; i < config.k; ++i) {
        const Vector& v_g = spectral_g.triples[i].v;  // fed through f
        const Vector& v_f = spectral_f.triples[i].v;  // fed through g
        const double rf = cross_response_grad(layer_f, v_g, config.mal, w[i], &out.grad_f);
        const double rg = cross_response_grad(layer_g, v_f, config.mal, w[i], &out.grad_g);
        out.value += w[i] * (std::max(rf - config.mal, 0.0) + std::max(rg - config.mal, 0.0));
        out.cross_norms.push_back(rf);
        out.cross_norms.push_back(rg);
    }
    return out;
}

std::vector<std::size_t> EnsembleTrainState::selected_layers() const {
    if (models.empty()) return {};
    if (lotos.selection == LayerSelection::FirstOnly) return {0};
    std::vector<std::size_t> idx(models[0].layers.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

void EnsembleTrainState::validate() const {
    if (models.empty()) throw ConfigError("EnsembleTrainState: no models");
    lotos.validate();
    for (const std::size_t li : selected_layers())
        for (const auto& model : models) {
            if (li >= model.layers.size())
                throw ShapeError("EnsembleTrainState: selected layer missing in a model");
            if (layer_in_dim(model.layers[li]) != layer_in_dim(models[0].layers[li]))
                throw ShapeError("EnsembleTrainState: selected layers not shape-compatible");
        }
}

EnsembleTrainState make_ensemble(const ModelSpec& spec, std::size_t n, const TrainConfig& train,
                                 const LotosConfig& lotos) {
    if (n == 0) throw ConfigError("make_ensemble: need at least one model");
    EnsembleTrainState state;
    state.train = train;
    state.lotos = lotos;
    for (std::size_t i = 0; i < n; ++i) {
        Rng mix(train.seed);
        const std::uint64_t model_seed = mix.next_u64() ^ (0x517cc1b727220a95ull * (i + 1));
        state.models.push_back(build_model(spec, model_seed));
        state.optimizer.emplace_back();
    }
    state.validate();
    return state;
}

namespace {

struct OrthoTerm {
    double value = 0.0;                     // pair sum of S_k over selected layers
    std::vector<ModelGrads> grads;          // d(pair sum)/d(theta_i), Eq. 4 coefficient excluded
    std::vector<double> cross_norms;
};

// Pair sum with gradients; `vectors(model, layer, slot)` supplies the frozen
// input vectors (singular vectors normally, random ones in control mode).
template <typename VectorSource>
OrthoTerm ortho_pair_sum(const EnsembleTrainState& state, VectorSource&& vectors) {
    OrthoTerm term;
    const std::size_t n = state.size();
    for (const auto& model : state.models) term.grads.push_back(zero_grads(model));
    const Vector w = state.lotos.effective_weights();

    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t j = z + 1; j < n; ++j)
            for (const std::size_t li : state.selected_layers())
                for (std::size_t i = 0; i < state.lotos.k; ++i) {
                    const Vector& v_from_j = vectors(j, li, i);
                    const Vector& v_from_z = vectors(z, li, i);
                    const double rf =
                        cross_response_grad(state.models[z].layers[li], v_from_j, state.lotos.mal,
                                            w[i], &term.grads[z].layer_grads[li]);
                    const double rg =
                        cross_response_grad(state.models[j].layers[li], v_from_z, state.lotos.mal,
                                            w[i], &term.grads[j].layer_grads[li]);
                    term.value += w[i] * (std::max(rf - state.lotos.mal, 0.0) +
                                          std::max(rg - state.lotos.mal, 0.0));
                    term.cross_norms.push_back(rf);
                    term.cross_norms.push_back(rg);
                }
    return term;
}

double eq4_coefficient(const EnsembleTrainState& state) {
    const std::size_t n = state.size();
    const std::size_t m = state.selected_layers().size();
    if (n < 2 || m == 0 || state.lotos.lambda == 0.0) return 0.0;
    return state.lotos.lambda /
           (static_cast<double>(m) * static_cast<double>(n) * static_cast<double>(n - 1));
}

std::pair<LossBreakdown, std::vector<ModelGrads>> loss_gradients_impl(
    const EnsembleTrainState& state, const Batch& batch, const OrthoTerm& term) {
    if (batch.inputs.empty()) throw InvalidInput("lotos_loss: empty batch");
    LossBreakdown loss;
    std::vector<ModelGrads> grads;
    const double inv_n = 1.0 / static_cast<double>(state.size());
    const double inv_batch = 1.0 / static_cast<double>(batch.inputs.size());

    for (const auto& model : state.models) grads.push_back(zero_grads(model));
    for (std::size_t mi = 0; mi < state.size(); ++mi) {
        double ce = 0.0;
        for (std::size_t bi = 0; bi < batch.inputs.size(); ++bi) {
            const auto cache = model_forward(state.models[mi], *batch.inputs[bi]);
            ce += cross_entropy_loss(cache.probabilities, batch.labels[bi]);
            grads[mi].add_scaled(model_backward(state.models[mi], cache, batch.labels[bi]),
                                 inv_n * inv_batch);
        }
        loss.ce += inv_n * ce * inv_batch;
    }

    const double coeff = eq4_coefficient(state);
    loss.ortho = coeff * term.value;
    loss.total = loss.ce + loss.ortho;
    if (coeff != 0.0)
        for (std::size_t mi = 0; mi < state.size(); ++mi)
            grads[mi].add_scaled(term.grads[mi], coeff);
    return {loss, std::move(grads)};
}

OrthoTerm singular_vector_term(const EnsembleTrainState& state) {
    return ortho_pair_sum(state, [&state](std::size_t model, std::size_t layer, std::size_t slot)
                                     -> const Vector& {
        return state.models[model].spectral[layer].triples[slot].v;
    });
}

// one warm power-iteration step per triple, deflating the triples above it
void warm_refresh_layer(const Layer& layer, SpectralState& spectral, std::size_t k,
                        std::size_t steps) {
    const auto op = as_operator(layer);
    if (spectral.triples.size() < k) {
        // first touch: converge properly so the vectors mean something
        spectral = deflated_topk(op, k, {.max_iters = 2000, .tol = 1e-8});
        spectral.stale_counter = 0;
        return;
    }
    spectral.k = std::max(spectral.k, k);
    for (std::size_t step = 0; step < steps; ++step) {
        for (std::size_t i = 0; i < k; ++i) {
            auto& t = spectral.triples[i];
            Vector u = op.apply(t.v);
            for (std::size_t j = 0; j < i; ++j)
                axpy(-spectral.triples[j].sigma * dot(spectral.triples[j].v, t.v),
                     spectral.triples[j].u, u);
            const double sigma = norm2(u);
            if (sigma == 0.0) {
                t.sigma = 0.0;
                continue;
            }
            scale(u, 1.0 / sigma);
            Vector v = op.apply_adjoint(u);
            for (std::size_t j = 0; j < i; ++j)
                axpy(-spectral.triples[j].sigma * dot(spectral.triples[j].u, u),
                     spectral.triples[j].v, v);
            const double vn = norm2(v);
            if (vn > 0.0) {
                scale(v, 1.0 / vn);
                t.v = std::move(v);
            }
            t.u = std::move(u);
            t.sigma = sigma;
        }
    }
    spectral.stale_counter += 1;
}

void refresh_spectral_states(EnsembleTrainState& state) {
    const auto selected = state.selected_layers();
    for (auto& model : state.models) {
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            const bool is_selected =
                std::find(selected.begin(), selected.end(), li) != selected.end();
            const std::size_t k = is_selected ? state.lotos.k : 1;
            auto& spectral = model.spectral[li];
            const bool full = spectral.triples.size() < k ||
                              spectral.stale_counter >= state.lotos.full_refresh_every;
            if (full) {
                spectral = deflated_topk(as_operator(model.layers[li]), k,
                                         {.max_iters = 3000, .tol = state.lotos.full_refresh_tol});
                spectral.stale_counter = 0;
            } else {
                warm_refresh_layer(model.layers[li], spectral, k, state.lotos.refresh_steps);
            }
        }
    }
}

Batch sample_batch(const LabeledDataset& data, const std::vector<std::size_t>& train_idx,
                   std::size_t batch_size, Rng& rng) {
    Batch batch;
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t idx = train_idx[rng.below(train_idx.size())];
        batch.inputs.push_back(&data.inputs[idx]);
        batch.labels.push_back(data.labels[idx]);
    }
    return batch;
}

double max_top_sigma(const EnsembleTrainState& state) {
    double s = 0.0;
    for (const auto& model : state.models)
        for (const auto& spectral : model.spectral)
            if (!spectral.triples.empty()) s = std::max(s, spectral.triples[0].sigma);
    return s;
}

History train_loop(EnsembleTrainState& state, const LabeledDataset& data, std::size_t iterations,
                   bool control_mode) {
    state.validate();
    data.validate();
    const auto train_idx = data.indices_of(Split::Train);
    if (train_idx.empty()) throw InvalidInput("train_ensemble: empty training split");

    Rng batch_rng(state.train.seed ^ 0xba7c4ull);
    // the control draws its vectors from a dedicated stream so that an
    // inactive penalty leaves the trajectory bitwise identical to clip-only
    Rng control_rng(state.train.seed ^ 0xc0017001ull);

    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, train_idx.size() / std::max<std::size_t>(1, state.train.batch_size));
    const auto selected = state.selected_layers();
    // control vectors: [model][selected-layer][slot]
    std::vector<std::vector<std::vector<Vector>>> control_vectors;

    History history;
    history.reserve(iterations);

    for (std::size_t iter = 0; iter < iterations; ++iter) {
        refresh_spectral_states(state);

        if (control_mode && state.size() > 1 && iter % steps_per_epoch == 0) {
            control_vectors.assign(state.size(), {});
            for (std::size_t mi = 0; mi < state.size(); ++mi) {
                control_vectors[mi].resize(selected.size());
                for (std::size_t si = 0; si < selected.size(); ++si)
                    for (std::size_t slot = 0; slot < state.lotos.k; ++slot)
                        control_vectors[mi][si].push_back(control_rng.unit_vector(
                            layer_in_dim(state.models[mi].layers[selected[si]])));
            }
        }

        const Batch batch = sample_batch(data, train_idx, state.train.batch_size, batch_rng);

        OrthoTerm term;
        if (state.size() > 1 && state.lotos.lambda > 0.0) {
            if (control_mode) {
                term = ortho_pair_sum(
                    state, [&](std::size_t model, std::size_t layer, std::size_t slot)
                               -> const Vector& {
                        const auto it = std::find(selected.begin(), selected.end(), layer);
                        return control_vectors[model][static_cast<std::size_t>(
                            it - selected.begin())][slot];
                    });
            } else {
                term = singular_vector_term(state);
            }
        }

        auto [loss, grads] = loss_gradients_impl(state, batch, term);
        if (!std::isfinite(loss.total))
            throw Error("train_ensemble: non-finite loss at iteration " + std::to_string(iter));

        // per-model step: CE gradient at full scale plus the Eq. 4 ortho term
        // scaled by N (pure learning-rate convention; lambda = 0 then matches
        // N independent runs exactly)
        const double lr = scheduled_lr(state.train, iter, iterations);
        const double n_scale = static_cast<double>(state.size());
        for (std::size_t mi = 0; mi < state.size(); ++mi) {
            grads[mi].scale_all(n_scale);
            if (state.adv.enabled) {
                // replace the CE part with the adversarial-mixed gradient
                auto adv_grads = zero_grads(state.models[mi]);
                const double inv_batch = 1.0 / static_cast<double>(batch.inputs.size());
                for (std::size_t bi = 0; bi < batch.inputs.size(); ++bi) {
                    const Vector& x = *batch.inputs[bi];
                    const std::size_t y = batch.labels[bi];
                    if (state.adv.mix_ratio < 1.0) {
                        const auto cache = model_forward(state.models[mi], x);
                        adv_grads.add_scaled(model_backward(state.models[mi], cache, y),
                                             (1.0 - state.adv.mix_ratio) * inv_batch);
                    }
                    if (state.adv.mix_ratio > 0.0) {
                        const Vector x_adv = pgd_attack(state.models[mi], x, y, state.adv.attack);
                        const auto cache = model_forward(state.models[mi], x_adv);
                        adv_grads.add_scaled(model_backward(state.models[mi], cache, y),
                                             state.adv.mix_ratio * inv_batch);
                    }
                }
                if (!term.grads.empty())
                    adv_grads.add_scaled(term.grads[mi], eq4_coefficient(state) * n_scale);
                sgd_step(state.models[mi], adv_grads, state.train, state.optimizer[mi], lr);
            } else {
                sgd_step(state.models[mi], grads[mi], state.train, state.optimizer[mi], lr);
            }
        }
        state.iteration += 1;

        HistoryRow row;
        row.iter = state.iteration;
        row.total_loss = loss.total;
        row.ce_loss = loss.ce;
        row.ortho_loss = loss.ortho;
        row.max_sigma = max_top_sigma(state);
        if (!term.cross_norms.empty()) {
            double s = 0.0;
            for (double v : term.cross_norms) s += v;
            row.mean_cross_norm = s / static_cast<double>(term.cross_norms.size());
        }
        history.push_back(row);
    }
    return history;
}

}  // namespace

LossBreakdown lotos_loss(const EnsembleTrainState& state, const Batch& batch) {
    return lotos_loss_gradients(state, batch).first;
}

std::pair<LossBreakdown, std::vector<ModelGrads>> lotos_loss_gradients(
    const EnsembleTrainState& state, const Batch& batch) {
    state.validate();
    OrthoTerm term;
    if (state.size() > 1 && state.lotos.lambda > 0.0) term = singular_vector_term(state);
    return loss_gradients_impl(state, batch, term);
}

History train_ensemble(EnsembleTrainState& state, const LabeledDataset& data,
                       std::size_t iterations) {
    return train_loop(state, data, iterations, false);
}

History random_vector_control(EnsembleTrainState& state, const LabeledDataset& data,
                              std::size_t iterations) {
    return train_loop(state, data, iterations, true);
}

std::size_t iterations_for(const TrainConfig& config, std::size_t train_count) {
    const std::size_t steps =
        std::max<std::size_t>(1, (train_count + config.batch_size - 1) / config.batch_size);
    return config.epochs * steps;
}

}  // namespace lotos
