#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aeic/rng.hpp"
#include "aeic/tensor.hpp"

namespace aeic {

// Symmetric m-user Gaussian interference channel. Every user transmits a
// codeword of 2n reals with per-component average power 0.5 (the
// transmitter normalization fixes codeword energy to n); the noise
// variance is scaled to meet the requested Eb/N0, and interference
// couples through alpha via INR = SNR^alpha.
struct ChannelSpec {
    std::size_t m = 2;       // transmitter/receiver pairs
    double alpha = 0.0;      // interference coupling
    double ebn0_db = 7.0;    // energy per bit over noise density
    std::size_t n = 4;       // channel uses per message
    std::size_t k = 4;       // bits per message
    std::uint64_t seed = 0;  // stream seed used when the caller has none

    // Codebooks the m-1 interfering users draw their codewords from, one
    // (2n x 2^k) tensor per interferer. Empty means every interferer reuses
    // the decoding user's own codebook (a single shared transmitter);
    // otherwise exactly m-1 entries are required.
    std::vector<Tensor> interference_codebooks;
};

// Per-real-component noise variance under the convention: codeword energy
// = n, so Eb = n/k and N0 = 2*sigma^2, giving
//   sigma^2 = n / (2 * k * 10^(ebn0_db/10)).
double ebn0_to_sigma2(const ChannelSpec& spec);

// Linear SNR = Es / sigma^2 with per-component signal power Es = 0.5.
double linear_snr(const ChannelSpec& spec);

// INR = SNR^alpha, linear scale. Throws std::invalid_argument if snr <= 0.
double inr_from_snr(double snr, double alpha);

// Amplitude applied to the interference sum: sqrt(INR/SNR) = SNR^((alpha-1)/2).
double mixing_coefficient(const ChannelSpec& spec);

// Adds i.i.d. zero-mean Gaussian noise of variance sigma2 per component.
void add_awgn(std::span<double> x, double sigma2, RngStream& rng);

// Receiver i observes  y_i = x_i + sqrt(INR/SNR) * sum_{j != i} x_j + noise.
// Expects exactly spec.m codewords of length 2*spec.n; returns all m
// received vectors. With m = 1 this reduces to plain AWGN and consumes the
// RNG stream identically to add_awgn.
std::vector<std::vector<double>> interference_apply(
    const std::vector<std::vector<double>>& x_all, const ChannelSpec& spec,
    RngStream& rng);

// Batched single-receiver path used by training and evaluation: user 1's
// codewords per column, plus the interferers' codeword batches. Noise is
// drawn column by column, component by component.
Tensor receive_user1(const Tensor& user1, const std::vector<Tensor>& interferers,
                     double coefficient, double sigma2, RngStream& rng);

// Interference-regime classifier with its degrees-of-freedom value d(alpha).
enum class Regime { noisy, weak, moderate, boundary_alpha_1, strong, very_strong };

struct RegimeLabel {
    Regime name;
    double dof;
};

std::string_view regime_name(Regime r);

// Piecewise classification over alpha >= 0; at alpha = 1 the singular
// point carries dof = 1/m. Throws std::invalid_argument for alpha < 0.
RegimeLabel classify_regime(double alpha, std::size_t m);

// Closed-form QPSK symbol error rate 2*Q(sqrt(2*Eb/N0)) * (1 - Q(...)/2),
// used as an independent sanity check of the Eb/N0 -> sigma^2 convention.
double qpsk_ser_oracle(double ebn0_db);

}  // namespace aeic
