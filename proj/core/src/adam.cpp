#include "aeic/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "aeic/errors.hpp"

namespace aeic {

AdamOptimizer::AdamOptimizer(AdamConfig config, std::size_t parameter_count)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
    if (config_.learning_rate <= 0.0) {
        throw std::invalid_argument("adam: learning rate must be positive");
    }
    if (config_.beta1 <= 0.0 || config_.beta1 >= 1.0 || config_.beta2 <= 0.0 ||
        config_.beta2 >= 1.0) {
        throw std::invalid_argument("adam: betas must lie in (0, 1)");
    }
}

void AdamOptimizer::update_range(std::span<double> params,
                                 std::span<const double> grads, std::size_t offset,
                                 double bc1, double bc2, const std::string& name) {
    const double lr = config_.learning_rate;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double eps = config_.epsilon;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g)) {
            throw NumericError("adam: non-finite gradient in " + name);
        }
        double& m = m_[offset + i];
        double& v = v_[offset + i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("adam: parameter count mismatch");
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    update_range(params, grads, 0, bc1, bc2, "params");
}

void AdamOptimizer::step(const std::vector<ParamView>& views) {
    std::size_t total = 0;
    for (const auto& view : views) {
        if (view.tensor == nullptr) {
            throw std::invalid_argument("adam: null parameter view");
        }
        if (!view.tensor->has_grad()) {
            throw std::logic_error("adam: parameter " + view.name + " has no gradient");
        }
        total += view.tensor->size();
    }
    if (total != m_.size()) {
        throw std::invalid_argument("adam: parameter count mismatch (" +
                                    std::to_string(total) + " vs " +
                                    std::to_string(m_.size()) + ")");
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
    std::size_t offset = 0;
    for (const auto& view : views) {
        update_range(view.tensor->v, view.tensor->grad, offset, bc1, bc2, view.name);
        offset += view.tensor->size();
    }
}

}  // namespace aeic
