#include "lotos/evaluation.hpp"

namespace lotos {

EnsemblePrediction ensemble_predict(std::span<const Model> models, const Vector& x) {
    if (models.empty()) throw InvalidInput("ensemble_predict: empty ensemble");
    EnsemblePrediction pred;
    pred.probabilities.assign(models[0].classes(), 0.0);
    for (const auto& model : models)
        axpy(1.0 / static_cast<double>(models.size()), model_forward(model, x).probabilities,
             pred.probabilities);
    pred.cls = 0;
    for (std::size_t i = 1; i < pred.probabilities.size(); ++i)
        if (pred.probabilities[i] > pred.probabilities[pred.cls]) pred.cls = i;
    return pred;
}

namespace {

std::size_t model_predict(const Model& model, const Vector& x) {
    const auto probs = model_forward(model, x).probabilities;
    std::size_t cls = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[cls]) cls = i;
    return cls;
}

// per-sample per-config seed so random starts reproduce regardless of order
AttackConfig seeded_for(const AttackConfig& config, std::size_t sample_index) {
    AttackConfig c = config;
    c.seed = config.seed ^ (0x9e3779b97f4a7c15ull * (sample_index + 1));
    return c;
}

bool fooled(const Model& model, const Vector& x_adv, std::size_t y, const AttackConfig& config) {
    const std::size_t pred = model_predict(model, x_adv);
    if (config.targeted) return pred == *config.targeted;
    return pred != y;
}

}  // namespace

PairTransferRecord transfer_rate(const Model& source, const Model& target,
                                 const LabeledDataset& data, Split split,
                                 const AttackConfig& config) {
    PairTransferRecord rec;
    for (const std::size_t idx : data.indices_of(split)) {
        const Vector& x = data.inputs[idx];
        const std::size_t y = data.labels[idx];
        if (model_predict(source, x) != y || model_predict(target, x) != y) continue;
        const Vector x_adv = pgd_attack(source, x, y, seeded_for(config, idx));
        if (!fooled(source, x_adv, y, config)) continue;
        rec.eligible_count += 1;
        if (fooled(target, x_adv, y, config)) rec.transferred_count += 1;
    }
    if (rec.eligible_count > 0)
        rec.rate = static_cast<double>(rec.transferred_count) /
                   static_cast<double>(rec.eligible_count);
    return rec;
}

TransferReport ensemble_transfer_rate(std::span<const Model> models, const LabeledDataset& data,
                                      Split split, const AttackConfig& config) {
    TransferReport report;
    report.attack = config;
    const auto indices = data.indices_of(split);

    // per-source work shared across targets
    std::vector<std::vector<std::size_t>> clean_pred(models.size());
    std::vector<std::vector<Vector>> adv(models.size());
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        for (const std::size_t idx : indices)
            clean_pred[mi].push_back(model_predict(models[mi], data.inputs[idx]));
        adv[mi].resize(indices.size());
    }
    for (std::size_t si = 0; si < models.size(); ++si)
        for (std::size_t ii = 0; ii < indices.size(); ++ii) {
            const std::size_t idx = indices[ii];
            if (clean_pred[si][ii] == data.labels[idx])
                adv[si][ii] =
                    pgd_attack(models[si], data.inputs[idx], data.labels[idx], seeded_for(config, idx));
        }

    double rate_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t si = 0; si < models.size(); ++si)
        for (std::size_t ti = 0; ti < models.size(); ++ti) {
            if (si == ti) continue;
            PairTransferRecord rec;
            rec.source = si;
            rec.target = ti;
            for (std::size_t ii = 0; ii < indices.size(); ++ii) {
                const std::size_t idx = indices[ii];
                const std::size_t y = data.labels[idx];
                if (clean_pred[si][ii] != y || clean_pred[ti][ii] != y) continue;
                if (!fooled(models[si], adv[si][ii], y, config)) continue;
                rec.eligible_count += 1;
                if (fooled(models[ti], adv[si][ii], y, config)) rec.transferred_count += 1;
            }
            if (rec.eligible_count > 0) {
                rec.rate = static_cast<double>(rec.transferred_count) /
                           static_cast<double>(rec.eligible_count);
                rate_sum += *rec.rate;
                defined += 1;
            }
            report.pairs.push_back(rec);
        }
    if (defined > 0) report.mean_rate = rate_sum / static_cast<double>(defined);
    return report;
}

RobustAccuracyReport blackbox_robust_accuracy(const Model& surrogate,
                                              std::span<const Model> ensemble,
                                              const LabeledDataset& data, Split split,
                                              const AttackConfig& config) {
    RobustAccuracyReport report;
    report.attack = config;
    const auto indices = data.indices_of(split);
    if (indices.empty()) throw InvalidInput("blackbox_robust_accuracy: empty split");

    std::size_t clean_correct = 0;
    for (const std::size_t idx : indices) {
        const Vector& x = data.inputs[idx];
        const std::size_t y = data.labels[idx];
        if (ensemble_predict(ensemble, x).cls != y) continue;
        clean_correct += 1;
        const Vector x_adv = pgd_attack(surrogate, x, y, seeded_for(config, idx));
        if (ensemble_predict(ensemble, x_adv).cls == y) report.robust_correct_count += 1;
    }
    report.clean_accuracy =
        static_cast<double>(clean_correct) / static_cast<double>(indices.size());
    report.eligible_count = clean_correct;
    if (clean_correct > 0)
        report.robust_accuracy = static_cast<double>(report.robust_correct_count) /
                                 static_cast<double>(clean_correct);
    return report;
}

bool RiskGapReport::all_hold() const {
    return std::all_of(batches.begin(), batches.end(),
                       [](const RiskGapBatch& b) { return b.holds; });
}

RiskGapReport proposition1_check(const Model& model_f, const Model& model_g,
                                 const LabeledDataset& data, Split split,
                                 const AttackConfig& config, std::size_t batch_count) {
    if (config.norm != AttackNorm::L2)
        throw InvalidInput("proposition1_check: stated for L2 attacks");
    if (batch_count == 0) throw InvalidInput("proposition1_check: need at least one batch");

    RiskGapReport report;
    report.epsilon = config.epsilon;
    report.lipschitz = std::max(loss_lipschitz_bound(model_f), loss_lipschitz_bound(model_g));

    const auto indices = data.indices_of(split);
    if (indices.empty()) throw InvalidInput("proposition1_check: empty split");

    const std::size_t per_batch = std::max<std::size_t>(1, indices.size() / batch_count);
    for (std::size_t b = 0; b < batch_count; ++b) {
        const std::size_t from = b * per_batch;
        if (from >= indices.size()) break;
        const std::size_t to = (b + 1 == batch_count) ? indices.size()
                                                      : std::min(indices.size(), from + per_batch);
        double rf_clean = 0.0, rg_clean = 0.0, rf_adv = 0.0, rg_adv = 0.0;
        for (std::size_t ii = from; ii < to; ++ii) {
            const std::size_t idx = indices[ii];
            const Vector& x = data.inputs[idx];
            const std::size_t y = data.labels[idx];
            rf_clean += cross_entropy_loss(model_forward(model_f, x).probabilities, y);
            rg_clean += cross_entropy_loss(model_forward(model_g, x).probabilities, y);
            const Vector x_adv = pgd_attack(model_f, x, y, seeded_for(config, idx));
            rf_adv += cross_entropy_loss(model_forward(model_f, x_adv).probabilities, y);
            rg_adv += cross_entropy_loss(model_forward(model_g, x_adv).probabilities, y);
        }
        const double count = static_cast<double>(to - from);
        RiskGapBatch batch;
        batch.lhs = std::abs(rf_adv - rg_adv) / count;
        batch.rhs = 2.0 * report.lipschitz * config.epsilon +
                    std::abs(rf_clean - rg_clean) / count;
        batch.holds = batch.lhs <= batch.rhs + 1e-9;
        report.batches.push_back(batch);
    }
    return report;
}

double clean_accuracy(const Model& model, const LabeledDataset& data, Split split) {
    const auto indices = data.indices_of(split);
    if (indices.empty()) throw InvalidInput("clean_accuracy: empty split");
    std::size_t correct = 0;
    for (const std::size_t idx : indices)
        if (model_predict(model, data.inputs[idx]) == data.labels[idx]) correct += 1;
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

std::optional<double> individual_robust_accuracy(std::span<const Model> models,
                                                 const LabeledDataset& data, Split split,
                                                 const AttackConfig& config) {
    const auto indices = data.indices_of(split);
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& model : models) {
        std::size_t eligible = 0, robust = 0;
        for (const std::size_t idx : indices) {
            const Vector& x = data.inputs[idx];
            const std::size_t y = data.labels[idx];
            if (model_predict(model, x) != y) continue;
            eligible += 1;
            const Vector x_adv = pgd_attack(model, x, y, seeded_for(config, idx));
            if (model_predict(model, x_adv) == y) robust += 1;
        }
        if (eligible > 0) {
            sum += static_cast<double>(robust) / static_cast<double>(eligible);
            defined += 1;
        }
    }
    if (defined == 0) return std::nullopt;
    return sum / static_cast<double>(defined);
}

}  // namespace lotos
