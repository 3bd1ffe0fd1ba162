#include "aeic/adl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aeic/errors.hpp"
#include "aeic/loss.hpp"

namespace aeic {

namespace {

void validate_frames(std::span<const PilotFrame> frames) {
    if (frames.empty()) {
        throw std::invalid_argument("compute_reward: no pilot frames supplied");
    }
    for (const PilotFrame& frame : frames) {
        if (frame.pilot_messages.empty() ||
            frame.pilot_messages.size() != frame.received.size()) {
            throw std::invalid_argument(
                "pilot frame " + std::to_string(frame.group_index) +
                " is malformed: " + std::to_string(frame.pilot_messages.size()) +
                " messages vs " + std::to_string(frame.received.size()) +
                " received vectors");
        }
    }
}

// Raw reward of one receiver on the supplied frames.
double reward_for_decoder(const AeModel& decoder, std::span<const PilotFrame> frames) {
    std::vector<double> scratch_a, scratch_b;
    std::uint64_t bit_errors = 0;
    std::uint64_t total_pilots = 0;
    for (const PilotFrame& frame : frames) {
        for (std::size_t p = 0; p < frame.pilot_messages.size(); ++p) {
            const std::size_t decoded =
                decode_argmax(decoder, frame.received[p], scratch_a, scratch_b);
            bit_errors += static_cast<std::uint64_t>(std::popcount(
                static_cast<std::uint64_t>(decoded ^ frame.pilot_messages[p])));
            ++total_pilots;
        }
    }
    const double total_bits =
        static_cast<double>(total_pilots) * static_cast<double>(decoder.k);
    const double ber_floor = 0.5 / total_bits;
    const double mean_ber = static_cast<double>(bit_errors) / total_bits;
    return 1.0 / std::max(mean_ber, ber_floor);
}

// Receiver-only supervised steps directly on the live pilot observations.
void tune_on_pilots(AeModel& decoder, std::span<const PilotFrame> frames,
                    std::size_t steps, double learning_rate) {
    std::size_t total = 0;
    for (const PilotFrame& frame : frames) total += frame.pilot_messages.size();
    Tensor inputs(2 * decoder.n, total);
    std::vector<std::size_t> targets;
    targets.reserve(total);
    std::size_t column = 0;
    for (const PilotFrame& frame : frames) {
        for (std::size_t p = 0; p < frame.pilot_messages.size(); ++p, ++column) {
            for (std::size_t r = 0; r < inputs.rows; ++r) {
                inputs(r, column) = frame.received[p][r];
            }
            targets.push_back(frame.pilot_messages[p]);
        }
    }
    AdamOptimizer optimizer(AdamConfig{learning_rate, 0.9, 0.999, 1e-8},
                            parameter_count(decoder, true));
    std::vector<ParamView> params = trainable_params(decoder, true);
    for (std::size_t step = 0; step < steps; ++step) {
        const Tensor& probs = decoder.receiver.forward(inputs);
        const double loss = cross_entropy(probs, targets);
        if (!std::isfinite(loss)) {
            throw NumericError("tune_on_pilots: loss became non-finite at step " +
                               std::to_string(step));
        }
        const Tensor grad_pre = softmax_cross_entropy_grad(probs, targets);
        decoder.receiver.backward(grad_pre, true);
        optimizer.step(params);
    }
}

std::size_t nearest_grid_index(std::span<const double> grid, double alpha) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (std::abs(grid[i] - alpha) < std::abs(grid[best] - alpha)) best = i;
    }
    return best;
}

}  // namespace

std::vector<double> alpha_grid(const AdlConfig& config) {
    if (!(config.grid_step > 0.0) || !std::isfinite(config.grid_step) ||
        !std::isfinite(config.grid_min) || !std::isfinite(config.grid_max)) {
        throw std::invalid_argument("alpha_grid: grid bounds and step must be finite, "
                                    "step positive");
    }
    if (config.grid_min > config.grid_max + 1e-12) {
        throw std::invalid_argument("alpha_grid: grid_min exceeds grid_max");
    }
    const std::size_t count = static_cast<std::size_t>(
        std::floor((config.grid_max - config.grid_min) / config.grid_step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double value = config.grid_min + static_cast<double>(i) * config.grid_step;
        grid[i] = std::round(value * 1e9) / 1e9;
    }
    return grid;
}

DecoderBank build_decoder_bank(const AeModel& base_model, const AdlConfig& config,
                               double train_ebn0_db, RngStream& rng,
                               std::span<const Tensor> interference_codebooks) {
    DecoderBank bank;
    bank.grid = alpha_grid(config);
    bank.decoders.reserve(bank.grid.size());
    // Draw all sub-seeds up front so the bank is one deterministic function
    // of the incoming stream state, independent of adaptation internals.
    std::vector<std::uint64_t> seeds(bank.grid.size());
    for (std::uint64_t& s : seeds) s = rng.next_u64();

    for (std::size_t i = 0; i < bank.grid.size(); ++i) {
        AeModel candidate = base_model;
        AeConfig adapt;
        adapt.n = base_model.n;
        adapt.k = base_model.k;
        adapt.train_ebn0_db = train_ebn0_db;
        adapt.learning_rate = config.adapt_learning_rate;
        adapt.batch_size = config.adapt_batch;
        adapt.train_alpha = bank.grid[i];
        adapt.m_users = config.m_users;
        RngStream candidate_rng(seeds[i]);
        try {
            adapt_receiver(candidate, adapt, config.adapt_steps, candidate_rng,
                           interference_codebooks);
        } catch (const NumericError& e) {
            throw NumericError("build_decoder_bank: candidate alpha=" +
                               std::to_string(bank.grid[i]) + ": " + e.what());
        }
        bank.decoders.push_back(std::move(candidate));
    }
    return bank;
}

double compute_reward(double candidate_alpha, std::span<const PilotFrame> frames,
                      const DecoderBank& bank) {
    validate_frames(frames);
    for (std::size_t i = 0; i < bank.grid.size(); ++i) {
        if (std::abs(bank.grid[i] - candidate_alpha) <= 1e-9) {
            return reward_for_decoder(bank.decoders[i], frames);
        }
    }
    throw std::invalid_argument("compute_reward: no decoder for candidate alpha=" +
                                std::to_string(candidate_alpha));
}

RewardTable score_candidates(const DecoderBank& bank, std::span<const PilotFrame> frames) {
    validate_frames(frames);
    if (bank.grid.size() != bank.decoders.size() || bank.grid.empty()) {
        throw std::invalid_argument("score_candidates: malformed decoder bank");
    }
    RewardTable table;
    table.grid = bank.grid;
    table.raw_rewards.resize(bank.grid.size());
    for (std::size_t i = 0; i < bank.grid.size(); ++i) {
        table.raw_rewards[i] = reward_for_decoder(bank.decoders[i], frames);
    }
    table.normalized_rewards = normalize_rewards(table.raw_rewards);
    return table;
}

std::vector<double> normalize_rewards(std::span<const double> raw) {
    if (raw.empty()) {
        throw std::invalid_argument("normalize_rewards: empty reward list");
    }
    double peak = 0.0;
    for (double r : raw) {
        if (!std::isfinite(r) || r < 0.0) {
            throw std::invalid_argument("normalize_rewards: rewards must be finite and "
                                        "non-negative");
        }
        peak = std::max(peak, r);
    }
    if (peak <= 0.0) {
        throw std::invalid_argument("normalize_rewards: all rewards are zero");
    }
    std::vector<double> normalized(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) normalized[i] = raw[i] / peak;
    return normalized;
}

double predict_alpha(const RewardTable& table, const AdlConfig& config) {
    if (table.grid.empty() || table.grid.size() != table.normalized_rewards.size()) {
        throw std::invalid_argument("predict_alpha: malformed reward table");
    }
    if (!(config.confidence_fraction > 0.0) || !(config.confidence_fraction < 1.0)) {
        throw std::invalid_argument("predict_alpha: confidence_fraction must lie in "
                                    "(0,1), got " +
                                    std::to_string(config.confidence_fraction));
    }
    const double threshold = 1.0 - config.confidence_fraction;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        if (table.normalized_rewards[i] >= threshold - 1e-12) {
            sum += table.grid[i];
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

TransmissionStream simulate_stream(const AeModel& model, const ChannelSpec& true_channel,
                                   std::uint64_t payload_symbols, const AdlConfig& config,
                                   RngStream& rng) {
    if (payload_symbols == 0) {
        throw std::invalid_argument("simulate_stream: payload must be nonempty");
    }
    if (!(config.pilot_ratio > 0.0) || !(config.pilot_ratio < 1.0)) {
        throw std::invalid_argument("simulate_stream: pilot_ratio must lie in (0,1)");
    }
    if (config.group_count == 0) {
        throw std::invalid_argument("simulate_stream: group_count must be positive");
    }
    const std::uint64_t pilot_total = static_cast<std::uint64_t>(std::llround(
        config.pilot_ratio / (1.0 - config.pilot_ratio) *
        static_cast<double>(payload_symbols)));
    if (pilot_total < config.group_count) {
        throw std::invalid_argument(
            "simulate_stream: payload of " + std::to_string(payload_symbols) +
            " symbols at pilot ratio " + std::to_string(config.pilot_ratio) +
            " yields only " + std::to_string(pilot_total) + " pilots for " +
            std::to_string(config.group_count) + " groups");
    }

    ChannelSpec spec = true_channel;
    spec.n = model.n;
    spec.k = model.k;
    const double sigma2 = ebn0_to_sigma2(spec);
    const double sigma = std::sqrt(sigma2);
    const bool interfered = spec.m > 1;
    const double coeff = interfered ? mixing_coefficient(spec) : 0.0;
    const std::size_t interferer_count = interfered ? spec.m - 1 : 0;

    const Tensor book = codebook(model);
    std::vector<const Tensor*> books(interferer_count, &book);
    if (!spec.interference_codebooks.empty()) {
        if (spec.interference_codebooks.size() != interferer_count) {
            throw std::invalid_argument(
                "simulate_stream: got " +
                std::to_string(spec.interference_codebooks.size()) +
                " interference codebooks for " + std::to_string(interferer_count) +
                " interferers");
        }
        for (std::size_t u = 0; u < interferer_count; ++u) {
            const Tensor& env = spec.interference_codebooks[u];
            if (env.rows != book.rows || env.cols != book.cols) {
                throw std::invalid_argument(
                    "simulate_stream: interference codebook " + std::to_string(u) +
                    " has shape " + env.shape_str() + ", expected " + book.shape_str());
            }
            books[u] = &env;
        }
    }
    const std::size_t num_messages = model.message_count();
    const std::size_t dim = book.rows;
    std::vector<std::size_t> other(interferer_count);

    auto transmit = [&](std::size_t sent, std::vector<double>& received) {
        for (std::size_t u = 0; u < interferer_count; ++u) {
            other[u] = rng.uniform_index(num_messages);
        }
        received.resize(dim);
        for (std::size_t r = 0; r < dim; ++r) {
            double y = book(r, sent);
            for (std::size_t u = 0; u < interferer_count; ++u) {
                y += coeff * (*books[u])(r, other[u]);
            }
            received[r] = y + sigma * rng.normal();
        }
    };

    TransmissionStream stream;
    stream.pilot_frames.resize(config.group_count);
    const std::uint64_t base_size = pilot_total / config.group_count;
    const std::uint64_t extras = pilot_total % config.group_count;
    for (std::size_t g = 0; g < config.group_count; ++g) {
        PilotFrame& frame = stream.pilot_frames[g];
        frame.group_index = g;
        const std::uint64_t size = base_size + (g < extras ? 1 : 0);
        frame.pilot_messages.resize(size);
        frame.received.resize(size);
        for (std::uint64_t p = 0; p < size; ++p) {
            frame.pilot_messages[p] = rng.uniform_index(num_messages);
            transmit(frame.pilot_messages[p], frame.received[p]);
        }
    }
    stream.payload_messages.resize(payload_symbols);
    stream.payload_received.resize(payload_symbols);
    for (std::uint64_t i = 0; i < payload_symbols; ++i) {
        stream.payload_messages[i] = rng.uniform_index(num_messages);
        transmit(stream.payload_messages[i], stream.payload_received[i]);
    }
    return stream;
}

AdlResult run_adl(const AeModel& base_model, const TransmissionStream& stream,
                  const ChannelSpec& true_channel, const AdlConfig& config,
                  RngStream& rng, const DecoderBank* bank) {
    if (stream.pilot_frames.size() != config.group_count) {
        throw std::invalid_argument("run_adl: expected " +
                                    std::to_string(config.group_count) +
                                    " pilot groups, stream carries " +
                                    std::to_string(stream.pilot_frames.size()));
    }
    validate_frames(stream.pilot_frames);
    if (stream.payload_messages.size() != stream.payload_received.size()) {
        throw std::invalid_argument("run_adl: payload messages and received vectors "
                                    "disagree in length");
    }

    DecoderBank local_bank;
    if (bank == nullptr) {
        local_bank = build_decoder_bank(base_model, config, true_channel.ebn0_db, rng,
                                        true_channel.interference_codebooks);
        bank = &local_bank;
    } else {
        const std::vector<double> expected = alpha_grid(config);
        if (bank->grid.size() != expected.size() ||
            bank->grid.size() != bank->decoders.size()) {
            throw std::invalid_argument("run_adl: supplied bank does not match the "
                                        "configured candidate grid");
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (std::abs(bank->grid[i] - expected[i]) > 1e-9) {
                throw std::invalid_argument("run_adl: supplied bank does not match the "
                                            "configured candidate grid");
            }
        }
    }

    AdlResult result;
    if (config.online_adapt_steps > 0) {
        DecoderBank tuned;
        tuned.grid = bank->grid;
        tuned.decoders = bank->decoders;
        for (AeModel& decoder : tuned.decoders) {
            tune_on_pilots(decoder, stream.pilot_frames, config.online_adapt_steps,
                           config.adapt_learning_rate);
        }
        result.rewards = score_candidates(tuned, stream.pilot_frames);
        result.alpha_hat = predict_alpha(result.rewards, config);
        result.model = tuned.decoders[nearest_grid_index(tuned.grid, result.alpha_hat)];
    } else {
        result.rewards = score_candidates(*bank, stream.pilot_frames);
        result.alpha_hat = predict_alpha(result.rewards, config);
        result.model = bank->decoders[nearest_grid_index(bank->grid, result.alpha_hat)];
    }

    if (config.final_adapt_steps > 0) {
        AeConfig update;
        update.n = result.model.n;
        update.k = result.model.k;
        update.train_ebn0_db = true_channel.ebn0_db;
        update.learning_rate = config.adapt_learning_rate;
        update.batch_size = config.adapt_batch;
        update.train_alpha = result.alpha_hat;
        update.m_users = config.m_users;
        adapt_receiver(result.model, update, config.final_adapt_steps, rng,
                       true_channel.interference_codebooks);
    }

    const std::size_t payload = stream.payload_messages.size();
    result.decoded_payload.resize(payload);
    std::vector<double> scratch_a, scratch_b;
    std::uint64_t symbol_errors = 0;
    std::uint64_t bit_errors = 0;
    for (std::size_t i = 0; i < payload; ++i) {
        const std::size_t decoded =
            decode_argmax(result.model, stream.payload_received[i], scratch_a, scratch_b);
        result.decoded_payload[i] = decoded;
        if (decoded != stream.payload_messages[i]) {
            ++symbol_errors;
            bit_errors += static_cast<std::uint64_t>(std::popcount(
                static_cast<std::uint64_t>(decoded ^ stream.payload_messages[i])));
        }
    }
    if (payload > 0) {
        result.payload_ser =
            static_cast<double>(symbol_errors) / static_cast<double>(payload);
        result.payload_ber = static_cast<double>(bit_errors) /
                             (static_cast<double>(payload) *
                              static_cast<double>(result.model.k));
    }
    return result;
}

}  // namespace aeic
