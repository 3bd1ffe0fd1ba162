#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aeic/adam.hpp"
#include "aeic/channel.hpp"
#include "aeic/layers.hpp"
#include "aeic/rng.hpp"

namespace aeic {

// Training setup for an (n, k) system: M = 2^k messages over n channel
// uses (2n reals on the wire). train_alpha present means the channel law
// with that coupling is simulated during training; absent means blind
// training over plain AWGN.
struct AeConfig {
    std::size_t n = 4;
    std::size_t k = 4;
    double train_ebn0_db = 7.0;
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    std::size_t train_steps = 10000;
    std::optional<double> train_alpha;
    std::size_t m_users = 2;

    std::size_t message_count() const { return std::size_t{1} << k; }
};

// Transmitter: Dense(M->M)+ELU, Dense(M->2n)+Linear, power normalization.
// Receiver: Dense(2n->M)+ReLU, Dense(M->M)+Softmax.
struct AeModel {
    std::size_t n = 0;
    std::size_t k = 0;
    LayerStack transmitter;
    PowerNormLayer norm;
    LayerStack receiver;

    std::size_t message_count() const { return std::size_t{1} << k; }
};

// Fresh model with Glorot-uniform weights drawn from rng.
AeModel make_ae_model(std::size_t n, std::size_t k, RngStream& rng);

// Parameter views in fixed order (transmitter layers, then receiver), or
// receiver only for decoder adaptation.
std::vector<ParamView> trainable_params(AeModel& model, bool receiver_only = false);
std::size_t parameter_count(const AeModel& model, bool receiver_only = false);

struct TrainResult {
    AeModel model;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    // Codebooks of the co-trained partner transmitters (coupled training
    // only, see train_end_to_end); pass them along as
    // ChannelSpec::interference_codebooks when evaluating the model.
    std::vector<Tensor> interferer_codebooks;
};

// End-to-end training at the configured Eb/N0. Three regimes:
//
//  - Blind (train_alpha absent): plain AWGN, no interference simulated.
//  - Coupled pairs (train_alpha <= 1): all m transmitter/receiver pairs
//    are trained jointly on the interference channel, minimizing the mean
//    of the per-user losses with full gradients through the mixing. At
//    weak coupling the pairs learn to stay out of each other's way; the
//    partners' codebooks come back in TrainResult::interferer_codebooks.
//  - Shared transmitter (train_alpha > 1): every user transmits from the
//    one trained codebook. Interferer messages ride as extra columns of
//    the same forward pass, so one backward pass yields the exact
//    gradient, including the paths through the mixing. Strong coupling
//    rewards codebooks whose scaled copies the receiver can cancel.
//    Training runs the configured steps at (learning_rate, batch_size)
//    and then anneals: ceil(8/15 * steps) at lr/5 and ceil(4/15 * steps)
//    at lr/50, both at 4x the batch, each phase with a fresh optimizer.
//
// Throws NumericError, naming the step, if the loss goes non-finite.
TrainResult train_end_to_end(const AeConfig& config, RngStream& rng);

// Receiver-only fine-tuning against the channel law in config (transmitter,
// hence the codebook, stays frozen). interference_codebooks follows the
// ChannelSpec convention: empty = interferers reuse the model's own
// codebook, otherwise one (2n x 2^k) tensor per interferer. steps = 0 is a
// no-op.
void adapt_receiver(AeModel& model, const AeConfig& config, std::size_t steps,
                    RngStream& rng,
                    std::span<const Tensor> interference_codebooks = {});

// One-hot message through the transmitter stack; result has squared norm n.
std::vector<double> encode_message(const AeModel& model, std::size_t message);

// All M codewords as a (2n x M) tensor, one column per message.
Tensor codebook(const AeModel& model);

struct DecodeResult {
    std::vector<double> probs;  // length M, sums to 1
    std::size_t message;        // argmax, ties broken by lowest index
};

DecodeResult decode(const AeModel& model, std::span<const double> received);

// Allocation-free argmax decode for Monte Carlo loops; the scratch buffers
// are resized on first use and reused across calls.
std::size_t decode_argmax(const AeModel& model, std::span<const double> received,
                          std::vector<double>& scratch_a,
                          std::vector<double>& scratch_b);

// Natural binary expansion, most significant bit first, length k.
std::vector<int> bits_from_message(std::size_t message, std::size_t k);

// One Monte Carlo SER/BER measurement. seed records the stream that
// produced it.
struct SerPoint {
    double ebn0_db = 0.0;
    double ser = 0.0;
    double ber = 0.0;
    std::uint64_t n_symbols = 0;
    std::uint64_t seed = 0;
};

// Draws uniform messages for all users, sends them through the channel at
// eval_alpha (absent = no interference), and decodes user 1. Bit errors
// use the natural-binary labeling of message indices.
SerPoint evaluate_ser_point(const AeModel& model, const ChannelSpec& spec,
                            std::optional<double> eval_alpha, std::uint64_t symbols,
                            RngStream& rng);

// SER over an Eb/N0 grid. Each grid point draws from its own stream
// derived from (master_seed, label, point index), so results do not
// depend on how many worker threads run the sweep.
std::vector<SerPoint> evaluate_ser(const AeModel& model, const ChannelSpec& base,
                                   std::optional<double> eval_alpha,
                                   std::span<const double> ebn0_grid_db,
                                   std::uint64_t symbols_per_point,
                                   std::uint64_t master_seed, std::string_view label,
                                   int jobs = 1);

}  // namespace aeic
