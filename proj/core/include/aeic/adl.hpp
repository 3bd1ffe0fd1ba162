#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aeic/autoencoder.hpp"
#include "aeic/channel.hpp"
#include "aeic/rng.hpp"

namespace aeic {

// Grid search + reward settings for the adaptive estimator. The candidate
// grid covers every coupling regime; confidence_fraction = 0.40 means a
// grid point qualifies when its normalized reward is within 40% of the
// peak. adapt_steps is the receiver fine-tuning budget per bank candidate;
// online_adapt_steps (default off) additionally tunes candidates on the
// live pilot frames before scoring; final_adapt_steps refines the chosen
// receiver at the predicted coupling before payload decoding.
struct AdlConfig {
    double grid_min = 0.1;
    double grid_max = 3.0;
    double grid_step = 0.1;
    double confidence_fraction = 0.40;
    std::size_t group_count = 30;
    double pilot_ratio = 0.01;
    std::size_t adapt_steps = 2000;
    std::size_t online_adapt_steps = 0;
    std::size_t final_adapt_steps = 4000;
    double adapt_learning_rate = 1e-3;
    std::size_t adapt_batch = 256;
    std::size_t m_users = 2;
};

// Ascending candidate values grid_min, grid_min + step, ..., up to grid_max
// inclusive (within rounding).
std::vector<double> alpha_grid(const AdlConfig& config);

// One group of known transmissions: the receiver knows pilot_messages and
// observes the matching post-channel vectors.
struct PilotFrame {
    std::vector<std::size_t> pilot_messages;
    std::vector<std::vector<double>> received;
    std::size_t group_index = 0;
};

struct RewardTable {
    std::vector<double> grid;
    std::vector<double> raw_rewards;
    std::vector<double> normalized_rewards;
};

// One receiver per candidate coupling value, each fine-tuned against the
// simulated channel law at that candidate (transmitter frozen throughout).
// interference_codebooks follows the ChannelSpec convention: empty means
// the candidates simulate interferers on the base model's own codebook.
struct DecoderBank {
    std::vector<double> grid;
    std::vector<AeModel> decoders;
};

DecoderBank build_decoder_bank(const AeModel& base_model, const AdlConfig& config,
                               double train_ebn0_db, RngStream& rng,
                               std::span<const Tensor> interference_codebooks = {});

// Reward of one candidate: decode every pilot in every frame with the
// candidate's receiver and return R = 1 / max(meanBER, ber_floor) where
// ber_floor = 0.5 / (total pilot bits).
double compute_reward(double candidate_alpha, std::span<const PilotFrame> frames,
                      const DecoderBank& bank);

// Raw rewards scored for every candidate in grid order, normalized.
RewardTable score_candidates(const DecoderBank& bank, std::span<const PilotFrame> frames);

// Max-normalization: each value divided by the maximum, so the peak is 1.
std::vector<double> normalize_rewards(std::span<const double> raw);

// Mean of the grid points whose normalized reward is at least
// 1 - confidence_fraction. The peak always qualifies.
double predict_alpha(const RewardTable& table, const AdlConfig& config);

// Pilot groups plus payload, all passed through the true channel. Payload
// ground truth is kept for scoring the decoded stream.
struct TransmissionStream {
    std::vector<PilotFrame> pilot_frames;
    std::vector<std::size_t> payload_messages;
    std::vector<std::vector<double>> payload_received;
};

// Generates group_count pilot groups at pilot_ratio plus payload_symbols
// payload transmissions through true_channel using the model's codebook.
TransmissionStream simulate_stream(const AeModel& model, const ChannelSpec& true_channel,
                                   std::uint64_t payload_symbols, const AdlConfig& config,
                                   RngStream& rng);

struct AdlResult {
    double alpha_hat = 0.0;
    std::vector<std::size_t> decoded_payload;
    RewardTable rewards;
    AeModel model;  // receiver updated for alpha_hat
    double payload_ser = 0.0;
    double payload_ber = 0.0;
};

// Algorithm: score every candidate on the pilot frames, normalize, predict
// alpha_hat from the confidence set, update the receiver for alpha_hat, and
// decode the payload with it. A prebuilt bank may be supplied; otherwise one
// is built from base_model at true_channel's Eb/N0. rng drives bank
// construction and receiver updates only — the stream is already fixed.
AdlResult run_adl(const AeModel& base_model, const TransmissionStream& stream,
                  const ChannelSpec& true_channel, const AdlConfig& config,
                  RngStream& rng, const DecoderBank* bank = nullptr);

}  // namespace aeic
