#pragma once

#include <span>

#include "lotos/nets.hpp"

namespace lotos {

// CE of the averaged member probabilities, with its exact input gradient.
std::pair<double, Vector> ensemble_loss_for_attack(std::span<const Model> models, const Vector& x,
                                                   std::size_t label);

// Projected gradient descent in an epsilon ball around x, clamped to [0,1]^d.
// Untargeted ascends the loss at the true label; targeted descends the loss at
// the target class. Zero gradient keeps the iterate.
Vector pgd_attack(const Model& model, const Vector& x, std::size_t label,
                  const AttackConfig& config);
Vector pgd_attack(std::span<const Model> models, const Vector& x, std::size_t label,
                  const AttackConfig& config);

}  // namespace lotos
