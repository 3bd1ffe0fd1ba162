#include "aeic/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace aeic {

double cross_entropy(std::span<const double> probs, std::size_t target) {
    if (target >= probs.size()) {
        throw std::invalid_argument("cross_entropy: target " + std::to_string(target) +
                                    " out of range for " + std::to_string(probs.size()) +
                                    " classes");
    }
    return -std::log(std::max(probs[target], kProbFloor));
}

double cross_entropy(const Tensor& probs, std::span<const std::size_t> targets) {
    if (targets.size() != probs.cols) {
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(probs.cols) +
                                    " columns");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < probs.cols; ++j) {
        if (targets[j] >= probs.rows) {
            throw std::invalid_argument("cross_entropy: target " +
                                        std::to_string(targets[j]) + " out of range");
        }
        total += -std::log(std::max(probs(targets[j], j), kProbFloor));
    }
    return total / static_cast<double>(probs.cols);
}

Tensor softmax_cross_entropy_grad(const Tensor& probs,
                                  std::span<const std::size_t> targets) {
    if (targets.size() != probs.cols) {
        throw std::invalid_argument("softmax_cross_entropy_grad: " +
                                    std::to_string(targets.size()) + " targets for " +
                                    std::to_string(probs.cols) + " columns");
    }
    Tensor g = probs;
    const double inv_b = 1.0 / static_cast<double>(probs.cols);
    for (double& x : g.v) x *= inv_b;
    for (std::size_t j = 0; j < probs.cols; ++j) {
        g(targets[j], j) -= inv_b;
    }
    return g;
}

Tensor one_hot(std::span<const std::size_t> messages, std::size_t num_classes) {
    Tensor x(num_classes, messages.size());
    for (std::size_t j = 0; j < messages.size(); ++j) {
        if (messages[j] >= num_classes) {
            throw std::invalid_argument("one_hot: message " + std::to_string(messages[j]) +
                                        " out of range for " + std::to_string(num_classes) +
                                        " classes");
        }
        x(messages[j], j) = 1.0;
    }
    return x;
}

}  // namespace aeic
