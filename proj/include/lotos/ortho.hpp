#pragma once

#include "lotos/datasets.hpp"
#include "lotos/nets.hpp"

namespace lotos {

enum class LayerSelection { AllAffine, FirstOnly };

struct LotosConfig {
    std::size_t k = 1;
    Vector weights;     // w_1..w_k, non-increasing; empty means w_i = 4^(1-i)
    double mal = 0.8;   // maximum allowed length of a cross response
    double lambda = 1.0;
    LayerSelection selection = LayerSelection::FirstOnly;
    std::size_t refresh_steps = 1;         // warm power-iteration steps per training step
    std::size_t full_refresh_every = 100;  // full re-convergence cadence (iterations)
    double full_refresh_tol = 1e-4;

    Vector effective_weights() const;
    void validate() const;
};

struct PairSimilarity {
    double value = 0.0;
    Vector grad_f;  // parameter-space gradient for layer_f (bias entries zero)
    Vector grad_g;
    Vector cross_norms;  // the 2k monitored |A v'_i| and |B v_i| values
};

// S_k of Eq. 3 for one pair of corresponding layers. Singular vectors are
// taken from the other model's SpectralState and treated as constants.
PairSimilarity pair_similarity(const Layer& layer_f, const Layer& layer_g,
                               const SpectralState& spectral_f, const SpectralState& spectral_g,
                               const LotosConfig& config);

struct EnsembleTrainState {
    std::vector<Model> models;
    LotosConfig lotos;
    TrainConfig train;
    AdvTrainConfig adv;
    std::vector<OptimizerState> optimizer;
    std::size_t iteration = 0;

    std::size_t size() const { return models.size(); }
    std::vector<std::size_t> selected_layers() const;
    void validate() const;
};

// N models from one spec; model i is seeded from (config seed, i).
EnsembleTrainState make_ensemble(const ModelSpec& spec, std::size_t n, const TrainConfig& train,
                                 const LotosConfig& lotos);

struct LossBreakdown {
    double total = 0.0;
    double ce = 0.0;     // (1/N) sum_i mean-batch CE
    double ortho = 0.0;  // lambda / (M N (N-1)) * pair sum of S_k
};

// The training loss of Eq. 4 on one batch, with its exact parameter gradients
// (singular vectors frozen). N = 1 or lambda = 0 gives a zero ortho term.
LossBreakdown lotos_loss(const EnsembleTrainState& state, const Batch& batch);
std::pair<LossBreakdown, std::vector<ModelGrads>> lotos_loss_gradients(
    const EnsembleTrainState& state, const Batch& batch);

struct HistoryRow {
    std::size_t iter = 0;
    double total_loss = 0.0;
    double ce_loss = 0.0;
    double ortho_loss = 0.0;
    double max_sigma = 0.0;        // max top singular value over models and layers
    double mean_cross_norm = 0.0;  // mean monitored |A v'| over pairs (0 when N = 1)
};

using History = std::vector<HistoryRow>;

// Full ensemble training: per iteration refresh spectral states, exchange
// singular vectors, step every model on CE + orthogonalization gradients,
// clip when configured.
History train_ensemble(EnsembleTrainState& state, const LabeledDataset& data,
                       std::size_t iterations);

// Ablation control: the other model's singular vectors are replaced by fixed
// random unit vectors per ordered pair, resampled each epoch. Everything else
// (batch stream, refresh, clipping) is bitwise identical to train_ensemble.
History random_vector_control(EnsembleTrainState& state, const LabeledDataset& data,
                              std::size_t iterations);

std::size_t iterations_for(const TrainConfig& config, std::size_t train_count);

}  // namespace lotos
