#pragma once

#include "lotos/checkpoint.hpp"
#include "lotos/evaluation.hpp"
#include "lotos/ortho.hpp"

namespace lotos {

inline constexpr const char* kToolkitVersion = "1.0.0";

enum class TrainMethod { Orig, Clip, Lotos, RandomControl };

std::string to_string(TrainMethod m);
TrainMethod train_method_from_string(const std::string& s);

struct ExperimentConfig {
    DatasetSpec dataset;       // used when dataset_path is empty
    std::string dataset_path;  // optional path to a saved dataset
    ModelSpec model;           // empty layers means desk CNN sized from the dataset
    std::size_t ensemble_size = 3;
    TrainMethod method = TrainMethod::Clip;
    double clip_value = 1.0;  // C for clip / lotos / random_control
    TrainConfig train;
    LotosConfig lotos;
    AttackConfig attack;  // evaluation attack
    AdvTrainConfig adv;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string outdir = "out";

    void validate() const;
    static ExperimentConfig desk_default();
};

ExperimentConfig experiment_config_from_json_file(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

LabeledDataset dataset_for(const ExperimentConfig& config, std::uint64_t seed);
ModelSpec model_spec_for(const ExperimentConfig& config, const LabeledDataset& data);

// Applies the method to the configs (clip target, lambda) and trains one
// ensemble for `seed`; returns the trained state and its history.
struct TrainedEnsemble {
    EnsembleTrainState state;
    History history;
};
TrainedEnsemble train_for_seed(const ExperimentConfig& config, const LabeledDataset& data,
                               std::uint64_t seed);

// independently seeded single model, `orig` method, used as black-box surrogate
Model train_surrogate(const ExperimentConfig& config, const LabeledDataset& data,
                      std::uint64_t seed);

struct SeedEvaluation {
    std::uint64_t seed = 0;
    double individual_accuracy = 0.0;
    std::optional<double> individual_robust_accuracy;
    std::optional<double> transfer_rate;
    std::optional<double> blackbox_robust_accuracy;
};

SeedEvaluation evaluate_ensemble(const ExperimentConfig& config, const EnsembleTrainState& state,
                                 const Model* surrogate, const LabeledDataset& data,
                                 std::uint64_t seed);

// --- command runners (CLI surface); each writes a manifest into outdir ---

int run_train(const ExperimentConfig& config);
int run_sweep_clip(const ExperimentConfig& config, const std::vector<double>& clip_values,
                   const std::string& csv_path);

void write_history_csv(const History& history, const std::string& path);
History read_history_csv(const std::string& path);

void write_manifest(const std::string& command, const std::string& config_json,
                    const std::string& outdir);

// mean and sample standard deviation
std::pair<double, double> mean_and_stddev(const std::vector<double>& xs);

}  // namespace lotos
