#pragma once

#include "lotos/attacks_fwd.hpp"
#include "lotos/spectral.hpp"

namespace lotos {

enum class Activation { Relu, None };

// Layer descriptor for the model zoo: dense and circular 1-D conv stacks.
struct LayerDesc {
    enum class Kind { Dense, Conv1d } kind = Kind::Dense;
    std::size_t out_dim = 0;  // dense output size
    std::size_t taps = 0;     // conv filter length
    Activation activation = Activation::None;

    static LayerDesc dense(std::size_t out, Activation act) { return {Kind::Dense, out, 0, act}; }
    static LayerDesc conv1d(std::size_t taps, Activation act) { return {Kind::Conv1d, 0, taps, act}; }
};

struct ModelSpec {
    std::size_t input_dim = 0;
    std::size_t classes = 0;
    std::vector<LayerDesc> layers;  // last layer must output `classes` logits

    void validate() const;

    // conv(T=3) -> relu -> conv(T=3) -> relu -> dense(m): the desk CNN
    static ModelSpec desk_cnn(std::size_t input_dim, std::size_t classes);
    static ModelSpec linear(std::size_t input_dim, std::size_t classes);
};

struct Model {
    ModelSpec spec;
    std::vector<Layer> layers;
    std::vector<SpectralState> spectral;  // one per layer

    std::size_t input_dim() const { return spec.input_dim; }
    std::size_t classes() const { return spec.classes; }
};

Model build_model(const ModelSpec& spec, std::uint64_t seed);

struct TrainConfig {
    double learning_rate = 0.02;
    double weight_decay = 1e-5;
    double momentum = 0.9;
    std::size_t epochs = 96;
    std::size_t batch_size = 64;
    std::optional<double> clip_to;  // spectral norm target C
    double clip_tol = 1e-2;
    std::uint64_t seed = 1;
    // schedule: lr/10 during the first warmup fraction, lr/10 after the decay point
    double warmup_frac = 0.1;
    double decay_frac = 0.8;
};

struct AdvTrainConfig {
    bool enabled = false;
    AttackConfig attack;
    double mix_ratio = 0.5;  // fraction of the loss taken on adversarial samples
};

struct ForwardCache {
    std::vector<Vector> inputs;   // input to each layer
    std::vector<Vector> preacts;  // affine outputs before activation
    Vector logits;
    Vector probabilities;
};

ForwardCache model_forward(const Model& model, const Vector& x);

double cross_entropy_loss(const Vector& probabilities, std::size_t label);

struct ModelGrads {
    std::vector<Vector> layer_grads;  // aligned with get_parameters per layer
    Vector input_grad;

    void add_scaled(const ModelGrads& other, double t);
    void scale_all(double t);
};

ModelGrads zero_grads(const Model& model);

// Gradients of cross_entropy_loss(model_forward(x), label) for one sample.
ModelGrads model_backward(const Model& model, const ForwardCache& cache, std::size_t label);

// Per-sample loss and its input gradient (attack side; parameters untouched).
std::pair<double, Vector> loss_and_input_grad(const Model& model, const Vector& x,
                                              std::size_t label);

struct OptimizerState {
    std::vector<Vector> velocity;  // per layer, same shape as parameters
};

// W <- W - lr (grad + wd W), optional momentum; clips every layer afterwards
// when config.clip_to is set.
void sgd_step(Model& model, const ModelGrads& grads, const TrainConfig& config,
              OptimizerState& opt, double lr);

// sqrt(2) * prod of per-layer spectral norms; sqrt(2) bounds the gradient of
// softmax cross-entropy in the logits (|p - e_y| <= sqrt(2)).
double loss_lipschitz_bound(const Model& model);

struct Batch {
    std::vector<const Vector*> inputs;
    std::vector<std::size_t> labels;
};

// Mean CE gradient over a batch, mixed clean/adversarial per adv_config, then
// one sgd_step.
void adversarial_train_step(Model& model, const Batch& batch, const AdvTrainConfig& adv_config,
                            const TrainConfig& config, OptimizerState& opt, double lr);

double scheduled_lr(const TrainConfig& config, std::size_t iter, std::size_t total_iters);

}  // namespace lotos
