#include "aeic/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "aeic/errors.hpp"

namespace aeic {

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::elu: return "elu";
        case Activation::tanh: return "tanh";
        case Activation::linear: return "linear";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

std::optional<Activation> activation_from_name(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "elu") return Activation::elu;
    if (name == "tanh") return Activation::tanh;
    if (name == "linear") return Activation::linear;
    if (name == "softmax") return Activation::softmax;
    return std::nullopt;
}

Tensor softmax(const Tensor& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    Tensor out(logits.rows, logits.cols);
    for (std::size_t j = 0; j < logits.cols; ++j) {
        double mx = logits(0, j);
        for (std::size_t i = 1; i < logits.rows; ++i) mx = std::max(mx, logits(i, j));
        double sum = 0.0;
        for (std::size_t i = 0; i < logits.rows; ++i) {
            const double e = std::exp(logits(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t i = 0; i < logits.rows; ++i) out(i, j) *= inv;
    }
    return out;
}

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
    : in_(in_dim), out_(out_dim), act_(act), w_(out_dim, in_dim), b_(out_dim, 1) {
    if (in_ == 0 || out_ == 0) {
        throw std::invalid_argument("DenseLayer: dimensions must be positive");
    }
    w_.alloc_grad();
    b_.alloc_grad();
}

void DenseLayer::init_weights(RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_ + out_));
    for (double& x : w_.v) x = (2.0 * rng.uniform() - 1.0) * limit;
    for (double& x : b_.v) x = 0.0;
}

Tensor DenseLayer::activate(const Tensor& pre) const {
    switch (act_) {
        case Activation::linear:
            return pre;
        case Activation::relu: {
            Tensor a = pre;
            for (double& x : a.v) x = x > 0.0 ? x : 0.0;
            return a;
        }
        case Activation::elu: {
            Tensor a = pre;
            for (double& x : a.v) x = x > 0.0 ? x : kEluAlpha * std::expm1(x);
            return a;
        }
        case Activation::tanh: {
            Tensor a = pre;
            for (double& x : a.v) x = std::tanh(x);
            return a;
        }
        case Activation::softmax:
            return softmax(pre);
    }
    throw std::logic_error("DenseLayer: unknown activation");
}

Tensor DenseLayer::apply(const Tensor& input) const {
    if (input.rows != in_) {
        throw std::invalid_argument("dense: input shape " + input.shape_str() +
                                    " does not match layer " + w_.shape_str());
    }
    Tensor pre = matmul(w_, input);
    add_column_inplace(pre, b_);
    return activate(pre);
}

Tensor DenseLayer::forward(const Tensor& input) {
    if (input.rows != in_) {
        throw std::invalid_argument("dense: input shape " + input.shape_str() +
                                    " does not match layer " + w_.shape_str());
    }
    cache_in_ = input;
    Tensor pre = matmul(w_, input);
    add_column_inplace(pre, b_);
    cache_pre_ = pre;
    cache_out_ = activate(pre);
    has_cache_ = true;
    return cache_out_;
}

Tensor DenseLayer::backward(const Tensor& grad_out, bool wrt_preactivation) {
    if (!has_cache_) {
        throw std::logic_error("dense backward: no cached forward pass");
    }
    if (grad_out.rows != out_ || grad_out.cols != cache_in_.cols) {
        throw std::invalid_argument("dense backward: gradient shape " +
                                    grad_out.shape_str() + " does not match output " +
                                    cache_out_.shape_str());
    }

    Tensor dpre;
    if (wrt_preactivation) {
        dpre = grad_out;
    } else {
        switch (act_) {
            case Activation::linear:
                dpre = grad_out;
                break;
            case Activation::relu:
                dpre = grad_out;
                for (std::size_t i = 0; i < dpre.size(); ++i) {
                    if (cache_pre_.v[i] <= 0.0) dpre.v[i] = 0.0;
                }
                break;
            case Activation::elu:
                dpre = grad_out;
                for (std::size_t i = 0; i < dpre.size(); ++i) {
                    if (cache_pre_.v[i] <= 0.0) {
                        dpre.v[i] *= cache_out_.v[i] + kEluAlpha;
                    }
                }
                break;
            case Activation::tanh:
                dpre = grad_out;
                for (std::size_t i = 0; i < dpre.size(); ++i) {
                    const double a = cache_out_.v[i];
                    dpre.v[i] *= 1.0 - a * a;
                }
                break;
            case Activation::softmax: {
                // Full Jacobian-vector product, column-wise:
                // dpre_i = p_i * (g_i - sum_j g_j p_j)
                dpre = Tensor(out_, grad_out.cols);
                for (std::size_t j = 0; j < grad_out.cols; ++j) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < out_; ++i) {
                        dot += grad_out(i, j) * cache_out_(i, j);
                    }
                    for (std::size_t i = 0; i < out_; ++i) {
                        dpre(i, j) = cache_out_(i, j) * (grad_out(i, j) - dot);
                    }
                }
                break;
            }
        }
    }

    Tensor dw = matmul_a_bt(dpre, cache_in_);
    Tensor db = row_sums(dpre);
    w_.grad = std::move(dw.v);
    b_.grad = std::move(db.v);
    return matmul_at_b(w_, dpre);
}

std::size_t LayerStack::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
}

void LayerStack::init_weights(RngStream& rng) {
    for (auto& l : layers_) l.init_weights(rng);
}

Tensor LayerStack::forward(const Tensor& input) {
    Tensor x = input;
    for (auto& l : layers_) x = l.forward(x);
    return x;
}

Tensor LayerStack::apply(const Tensor& input) const {
    Tensor x = input;
    for (const auto& l : layers_) x = l.apply(x);
    return x;
}

Tensor LayerStack::backward(const Tensor& grad_out, bool wrt_last_preactivation) {
    Tensor g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const bool fused = wrt_last_preactivation && i + 1 == layers_.size();
        g = layers_[i].backward(g, fused);
    }
    return g;
}

Tensor power_normalize(const Tensor& batch, std::size_t n_channel_uses) {
    if (batch.empty()) throw std::invalid_argument("power_normalize: empty batch");
    Tensor out(batch.rows, batch.cols);
    const double target = static_cast<double>(n_channel_uses);
    for (std::size_t j = 0; j < batch.cols; ++j) {
        double sq = 0.0;
        for (std::size_t i = 0; i < batch.rows; ++i) sq += batch(i, j) * batch(i, j);
        if (sq == 0.0) {
            throw NumericError("power_normalize: all-zero codeword (column " +
                               std::to_string(j) + ")");
        }
        const double scale = std::sqrt(target / sq);
        for (std::size_t i = 0; i < batch.rows; ++i) out(i, j) = batch(i, j) * scale;
    }
    return out;
}

Tensor PowerNormLayer::forward(const Tensor& input) {
    if (input.empty()) throw std::invalid_argument("power_normalize: empty batch");
    cache_in_ = input;
    cache_scale_.assign(input.cols, 0.0);
    cache_inv_sqnorm_.assign(input.cols, 0.0);
    Tensor out(input.rows, input.cols);
    const double target = static_cast<double>(n_);
    for (std::size_t j = 0; j < input.cols; ++j) {
        double sq = 0.0;
        for (std::size_t i = 0; i < input.rows; ++i) sq += input(i, j) * input(i, j);
        if (sq == 0.0) {
            throw NumericError("power_normalize: all-zero codeword (column " +
                               std::to_string(j) + ")");
        }
        const double scale = std::sqrt(target / sq);
        cache_scale_[j] = scale;
        cache_inv_sqnorm_[j] = 1.0 / sq;
        for (std::size_t i = 0; i < input.rows; ++i) out(i, j) = input(i, j) * scale;
    }
    has_cache_ = true;
    return out;
}

Tensor PowerNormLayer::backward(const Tensor& grad_out) {
    if (!has_cache_) {
        throw std::logic_error("power_normalize backward: no cached forward pass");
    }
    if (grad_out.rows != cache_in_.rows || grad_out.cols != cache_in_.cols) {
        throw std::invalid_argument("power_normalize backward: gradient shape " +
                                    grad_out.shape_str() + " does not match input " +
                                    cache_in_.shape_str());
    }
    // y = s * x with s = sqrt(n)/||x||:
    //   dx = s * (dy - x * (x . dy) / ||x||^2)
    Tensor dx(grad_out.rows, grad_out.cols);
    for (std::size_t j = 0; j < grad_out.cols; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < grad_out.rows; ++i) {
            dot += cache_in_(i, j) * grad_out(i, j);
        }
        const double s = cache_scale_[j];
        const double proj = dot * cache_inv_sqnorm_[j];
        for (std::size_t i = 0; i < grad_out.rows; ++i) {
            dx(i, j) = s * (grad_out(i, j) - cache_in_(i, j) * proj);
        }
    }
    return dx;
}

}  // namespace aeic
