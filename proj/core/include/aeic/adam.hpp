#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aeic/tensor.hpp"

namespace aeic {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Named view of one parameter tensor; the optimizer reads tensor->grad and
// updates tensor->v. The name appears in diagnostics.
struct ParamView {
    std::string name;
    Tensor* tensor = nullptr;
};

// Adam with bias correction over a fixed-size flat parameter vector.
// Moment arrays are sized once at construction; step_count increases by
// one per update. A non-finite gradient aborts with a NumericError naming
// the offending parameter.
class AdamOptimizer {
public:
    AdamOptimizer(AdamConfig config, std::size_t parameter_count);

    const AdamConfig& config() const { return config_; }
    std::uint64_t step_count() const { return step_count_; }
    std::size_t parameter_count() const { return m_.size(); }

    // Flat update; params and grads must both match parameter_count.
    void step(std::span<double> params, std::span<const double> grads);

    // Updates a list of parameter tensors laid out in view order.
    void step(const std::vector<ParamView>& views);

private:
    AdamConfig config_;
    std::uint64_t step_count_ = 0;
    std::vector<double> m_, v_;

    void update_range(std::span<double> params, std::span<const double> grads,
                      std::size_t offset, double bc1, double bc2,
                      const std::string& name);
};

}  // namespace aeic
