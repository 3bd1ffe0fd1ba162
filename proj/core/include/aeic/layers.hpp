#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "aeic/rng.hpp"
#include "aeic/tensor.hpp"

namespace aeic {

enum class Activation { relu, elu, tanh, linear, softmax };

std::string_view activation_name(Activation a);
std::optional<Activation> activation_from_name(std::string_view name);

// Column-wise softmax with max-subtraction, so any finite input is safe.
// Each output column sums to 1 and every entry lies in (0, 1).
Tensor softmax(const Tensor& logits);

// Fully connected layer: out = act(W * in + b), one sample per column.
// W is (out x in), b is (out x 1). forward() caches what backward() needs;
// apply() is the cache-free const path for frozen evaluation.
class DenseLayer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act);

    std::size_t in_dim() const { return in_; }
    std::size_t out_dim() const { return out_; }
    Activation activation() const { return act_; }

    // Glorot-uniform weights, zero biases.
    void init_weights(RngStream& rng);

    Tensor forward(const Tensor& input);
    Tensor apply(const Tensor& input) const;

    // Fills weight/bias gradients and returns the gradient w.r.t. the
    // layer input. grad_out is w.r.t. the activation output, unless
    // wrt_preactivation is set (used for the fused softmax/cross-entropy
    // path, where the caller already folded the activation derivative in).
    // Throws std::logic_error if no forward pass has been cached.
    Tensor backward(const Tensor& grad_out, bool wrt_preactivation = false);

    Tensor& weights() { return w_; }
    const Tensor& weights() const { return w_; }
    Tensor& bias() { return b_; }
    const Tensor& bias() const { return b_; }

    std::size_t parameter_count() const { return w_.size() + b_.size(); }

private:
    std::size_t in_, out_;
    Activation act_;
    Tensor w_, b_;  // gradients live in Tensor::grad

    Tensor cache_in_, cache_pre_, cache_out_;
    bool has_cache_ = false;

    Tensor activate(const Tensor& pre) const;
};

// ELU constant used by Activation::elu.
inline constexpr double kEluAlpha = 1.0;

// Ordered stack of dense layers sharing one forward/backward pass.
class LayerStack {
public:
    LayerStack() = default;
    explicit LayerStack(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

    void push_back(DenseLayer layer) { layers_.push_back(std::move(layer)); }

    std::size_t depth() const { return layers_.size(); }
    DenseLayer& layer(std::size_t i) { return layers_[i]; }
    const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::size_t in_dim() const { return layers_.front().in_dim(); }
    std::size_t out_dim() const { return layers_.back().out_dim(); }
    std::size_t parameter_count() const;

    void init_weights(RngStream& rng);

    Tensor forward(const Tensor& input);
    Tensor apply(const Tensor& input) const;

    // Backpropagates through every layer, filling parameter gradients and
    // returning the gradient w.r.t. the stack input.
    Tensor backward(const Tensor& grad_out, bool wrt_last_preactivation = false);

private:
    std::vector<DenseLayer> layers_;
};

// Rescales each column (one codeword of 2n reals) to squared norm
// n_channel_uses, so the average power per real component is exactly 0.5.
// Direction is preserved. Throws NumericError on an all-zero column.
Tensor power_normalize(const Tensor& batch, std::size_t n_channel_uses);

// Differentiable wrapper used inside the transmitter stack.
class PowerNormLayer {
public:
    explicit PowerNormLayer(std::size_t n_channel_uses = 0) : n_(n_channel_uses) {}

    std::size_t channel_uses() const { return n_; }

    Tensor forward(const Tensor& input);
    Tensor apply(const Tensor& input) const { return power_normalize(input, n_); }
    Tensor backward(const Tensor& grad_out);

private:
    std::size_t n_;
    Tensor cache_in_;
    std::vector<double> cache_scale_;     // sqrt(n) / ||x||, per column
    std::vector<double> cache_inv_sqnorm_;
    bool has_cache_ = false;
};

}  // namespace aeic
