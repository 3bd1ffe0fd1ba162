#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aeic/tensor.hpp"

namespace aeic {

// Probabilities below this floor are clamped inside the loss so a
// confident wrong prediction never yields -inf.
inline constexpr double kProbFloor = 1e-15;

// Categorical cross-entropy -log p[target] for one probability column.
double cross_entropy(std::span<const double> probs, std::size_t target);

// Mean categorical cross-entropy over a batch of probability columns.
double cross_entropy(const Tensor& probs, std::span<const std::size_t> targets);

// Gradient of the mean cross-entropy w.r.t. the pre-softmax logits:
// (probs - one_hot(target)) / batch_size, column by column.
Tensor softmax_cross_entropy_grad(const Tensor& probs,
                                  std::span<const std::size_t> targets);

// One-hot encoding, one message per column: (num_classes x batch).
Tensor one_hot(std::span<const std::size_t> messages, std::size_t num_classes);

}  // namespace aeic
