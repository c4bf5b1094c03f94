#pragma once

#include "lotos/attacks.hpp"
#include "lotos/datasets.hpp"

namespace lotos {

struct EnsemblePrediction {
    std::size_t cls = 0;
    Vector probabilities;  // arithmetic mean of member softmax outputs
};

// mean-probability aggregation, argmax with lowest-index tie-break
EnsemblePrediction ensemble_predict(std::span<const Model> models, const Vector& x);

struct PairTransferRecord {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t eligible_count = 0;
    std::size_t transferred_count = 0;
    std::optional<double> rate;  // empty when no sample was eligible
};

struct TransferReport {
    std::vector<PairTransferRecord> pairs;  // all ordered pairs
    std::optional<double> mean_rate;        // over defined pairs only
    AttackConfig attack;
};

// Definition of the conditional transfer rate: eligible samples are those both
// models classify correctly clean and the source attack fools the source;
// transferred are the eligible ones where the target is fooled too (targeted
// attacks: fooled means predicting the target class).
PairTransferRecord transfer_rate(const Model& source, const Model& target,
                                 const LabeledDataset& data, Split split,
                                 const AttackConfig& config);

TransferReport ensemble_transfer_rate(std::span<const Model> models, const LabeledDataset& data,
                                      Split split, const AttackConfig& config);

struct RobustAccuracyReport {
    double clean_accuracy = 0.0;
    std::size_t eligible_count = 0;  // clean-correct under ensemble_predict
    std::size_t robust_correct_count = 0;
    std::optional<double> robust_accuracy;
    std::string surrogate;
    AttackConfig attack;
};

// adversarial examples crafted against the surrogate only
RobustAccuracyReport blackbox_robust_accuracy(const Model& surrogate,
                                              std::span<const Model> ensemble,
                                              const LabeledDataset& data, Split split,
                                              const AttackConfig& config);

struct RiskGapBatch {
    double lhs = 0.0;  // |R_F(adv) - R_G(adv)|
    double rhs = 0.0;  // 2 L eps + |R_F(x) - R_G(x)|
    bool holds = false;
};

struct RiskGapReport {
    std::vector<RiskGapBatch> batches;
    double lipschitz = 0.0;
    double epsilon = 0.0;
    bool all_hold() const;
};

// Empirical two-sided risk-gap inequality with L from loss_lipschitz_bound and
// adversarial inputs generated against model_f. Requires an L2 attack.
RiskGapReport proposition1_check(const Model& model_f, const Model& model_g,
                                 const LabeledDataset& data, Split split,
                                 const AttackConfig& config, std::size_t batch_count);

double clean_accuracy(const Model& model, const LabeledDataset& data, Split split);

// mean over members of accuracy-on-adversarial among clean-correct samples,
// each member attacked white-box
std::optional<double> individual_robust_accuracy(std::span<const Model> models,
                                                 const LabeledDataset& data, Split split,
                                                 const AttackConfig& config);

}  // namespace lotos
