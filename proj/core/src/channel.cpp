#include "aeic/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace aeic {

double ebn0_to_sigma2(const ChannelSpec& spec) {
    if (!std::isfinite(spec.ebn0_db)) {
        throw std::invalid_argument("ebn0_to_sigma2: ebn0_db must be finite");
    }
    if (spec.n == 0 || spec.k == 0) {
        throw std::invalid_argument("ebn0_to_sigma2: n and k must be positive");
    }
    const double ebn0 = std::pow(10.0, spec.ebn0_db / 10.0);
    return static_cast<double>(spec.n) / (2.0 * static_cast<double>(spec.k) * ebn0);
}

double linear_snr(const ChannelSpec& spec) {
    return 0.5 / ebn0_to_sigma2(spec);
}

double inr_from_snr(double snr, double alpha) {
    if (snr <= 0.0) {
        throw std::invalid_argument("inr_from_snr: snr must be positive");
    }
    return std::pow(snr, alpha);
}

double mixing_coefficient(const ChannelSpec& spec) {
    return std::pow(linear_snr(spec), (spec.alpha - 1.0) / 2.0);
}

void add_awgn(std::span<double> x, double sigma2, RngStream& rng) {
    const double sigma = std::sqrt(sigma2);
    for (double& c : x) c += sigma * rng.normal();
}

std::vector<std::vector<double>> interference_apply(
    const std::vector<std::vector<double>>& x_all, const ChannelSpec& spec,
    RngStream& rng) {
    if (x_all.size() != spec.m) {
        throw std::invalid_argument("interference_apply: got " +
                                    std::to_string(x_all.size()) + " codewords for m=" +
                                    std::to_string(spec.m));
    }
    const std::size_t len = 2 * spec.n;
    for (const auto& x : x_all) {
        if (x.size() != len) {
            throw std::invalid_argument("interference_apply: codeword length " +
                                        std::to_string(x.size()) + ", expected " +
                                        std::to_string(len));
        }
    }
    const double sigma2 = ebn0_to_sigma2(spec);
    const double coeff = spec.m > 1 ? mixing_coefficient(spec) : 0.0;

    std::vector<std::vector<double>> y(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        y[i] = x_all[i];
        if (spec.m > 1) {
            for (std::size_t j = 0; j < spec.m; ++j) {
                if (j == i) continue;
                for (std::size_t c = 0; c < len; ++c) y[i][c] += coeff * x_all[j][c];
            }
        }
        add_awgn(y[i], sigma2, rng);
    }
    return y;
}

Tensor receive_user1(const Tensor& user1, const std::vector<Tensor>& interferers,
                     double coefficient, double sigma2, RngStream& rng) {
    Tensor y = user1;
    for (const auto& xj : interferers) {
        if (xj.rows != y.rows || xj.cols != y.cols) {
            throw std::invalid_argument("receive_user1: interferer shape " +
                                        xj.shape_str() + " does not match " +
                                        y.shape_str());
        }
        for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += coefficient * xj.v[i];
    }
    const double sigma = std::sqrt(sigma2);
    for (std::size_t j = 0; j < y.cols; ++j) {
        for (std::size_t i = 0; i < y.rows; ++i) y(i, j) += sigma * rng.normal();
    }
    return y;
}

std::string_view regime_name(Regime r) {
    switch (r) {
        case Regime::noisy: return "noisy";
        case Regime::weak: return "weak";
        case Regime::moderate: return "moderate";
        case Regime::boundary_alpha_1: return "boundary_alpha_1";
        case Regime::strong: return "strong";
        case Regime::very_strong: return "very_strong";
    }
    return "?";
}

RegimeLabel classify_regime(double alpha, std::size_t m) {
    if (alpha < 0.0) {
        throw std::invalid_argument("classify_regime: alpha must be >= 0");
    }
    if (m == 0) {
        throw std::invalid_argument("classify_regime: m must be >= 1");
    }
    if (alpha < 0.5) return {Regime::noisy, 1.0 - alpha};
    if (alpha < 2.0 / 3.0) return {Regime::weak, alpha};
    if (alpha < 1.0) return {Regime::moderate, 1.0 - alpha / 2.0};
    if (alpha == 1.0) return {Regime::boundary_alpha_1, 1.0 / static_cast<double>(m)};
    if (alpha < 2.0) return {Regime::strong, alpha / 2.0};
    return {Regime::very_strong, 1.0};
}

double qpsk_ser_oracle(double ebn0_db) {
    const double ebn0 = std::pow(10.0, ebn0_db / 10.0);
    // Q(x) = erfc(x / sqrt(2)) / 2
    const double q = 0.5 * std::erfc(std::sqrt(2.0 * ebn0) / std::sqrt(2.0));
    return 2.0 * q * (1.0 - 0.5 * q);
}

}  // namespace aeic
