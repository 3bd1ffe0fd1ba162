#include "aeic/autoencoder.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "aeic/errors.hpp"
#include "aeic/loss.hpp"

namespace aeic {

namespace {

// floor(B/M) copies of every message plus uniform extras, Fisher-Yates
// shuffled so batches stay class-balanced without being ordered.
std::vector<std::size_t> balanced_batch(std::size_t num_messages, std::size_t batch,
                                        RngStream& rng) {
    std::vector<std::size_t> messages;
    messages.reserve(batch);
    for (std::size_t copy = 0; copy < batch / num_messages; ++copy) {
        for (std::size_t s = 0; s < num_messages; ++s) messages.push_back(s);
    }
    while (messages.size() < batch) messages.push_back(rng.uniform_index(num_messages));
    for (std::size_t i = messages.size(); i > 1; --i) {
        std::swap(messages[i - 1], messages[rng.uniform_index(i)]);
    }
    return messages;
}

// One codebook per interferer: the user's own book when the environment is
// empty (shared transmitter), the supplied ones otherwise. Shapes must match.
std::vector<const Tensor*> resolve_interferer_books(const Tensor& own,
                                                    std::span<const Tensor> env,
                                                    std::size_t users_minus_one,
                                                    const char* who) {
    std::vector<const Tensor*> books(users_minus_one, &own);
    if (env.empty()) return books;
    if (env.size() != users_minus_one) {
        throw std::invalid_argument(std::string(who) + ": got " +
                                    std::to_string(env.size()) +
                                    " interference codebooks for " +
                                    std::to_string(users_minus_one) + " interferers");
    }
    for (std::size_t u = 0; u < users_minus_one; ++u) {
        if (env[u].rows != own.rows || env[u].cols != own.cols) {
            throw std::invalid_argument(std::string(who) + ": interference codebook " +
                                        std::to_string(u) + " has shape " +
                                        env[u].shape_str() + ", expected " +
                                        own.shape_str());
        }
        books[u] = &env[u];
    }
    return books;
}

// Interfering users' codewords for one batch: uniform messages through the
// frozen per-interferer codebooks (constants w.r.t. the gradient).
std::vector<Tensor> draw_interferers(std::span<const Tensor* const> books,
                                     std::size_t num_messages, std::size_t batch,
                                     RngStream& rng) {
    std::vector<Tensor> result;
    result.reserve(books.size());
    for (const Tensor* book : books) {
        Tensor codewords(book->rows, batch);
        for (std::size_t c = 0; c < batch; ++c) {
            const std::size_t s = rng.uniform_index(num_messages);
            for (std::size_t r = 0; r < book->rows; ++r) {
                codewords(r, c) = (*book)(r, s);
            }
        }
        result.push_back(std::move(codewords));
    }
    return result;
}

ChannelSpec training_spec(const AeConfig& config) {
    ChannelSpec spec;
    spec.m = config.m_users;
    spec.alpha = config.train_alpha.value_or(0.0);
    spec.ebn0_db = config.train_ebn0_db;
    spec.n = config.n;
    spec.k = config.k;
    return spec;
}

// Blind training: the channel is plain AWGN, interference never enters.
TrainResult train_blind(const AeConfig& config, RngStream& rng) {
    TrainResult result;
    result.model = make_ae_model(config.n, config.k, rng);
    AeModel& model = result.model;
    const double sigma2 = ebn0_to_sigma2(training_spec(config));

    AdamOptimizer optimizer(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8},
                            parameter_count(model));
    std::vector<ParamView> params = trainable_params(model);
    const std::size_t num_messages = model.message_count();

    for (std::size_t step = 0; step < config.train_steps; ++step) {
        const std::vector<std::size_t> messages =
            balanced_batch(num_messages, config.batch_size, rng);
        const Tensor inputs = one_hot(messages, num_messages);
        const Tensor& mapped = model.transmitter.forward(inputs);
        Tensor received = model.norm.forward(mapped);
        add_awgn(received.v, sigma2, rng);

        const Tensor& probs = model.receiver.forward(received);
        const double loss = cross_entropy(probs, messages);
        if (!std::isfinite(loss)) {
            throw NumericError("train_end_to_end: loss became non-finite at step " +
                               std::to_string(step));
        }
        if (step == 0) result.initial_loss = loss;
        result.final_loss = loss;

        const Tensor grad_pre = softmax_cross_entropy_grad(probs, messages);
        const Tensor grad_codewords = model.receiver.backward(grad_pre, true);
        const Tensor grad_mapped = model.norm.backward(grad_codewords);
        model.transmitter.backward(grad_mapped, false);
        optimizer.step(params);
    }
    return result;
}

// Coupled-pairs training (train_alpha <= 1): m separate autoencoders, one
// per user, minimizing the mean per-user cross-entropy with full gradients
// through the mixing, so each transmitter also feels how its codewords
// disturb the other receivers.
TrainResult train_coupled_pairs(const AeConfig& config, RngStream& rng) {
    const std::size_t m = config.m_users;
    std::vector<AeModel> models;
    models.reserve(m);
    for (std::size_t u = 0; u < m; ++u) {
        models.push_back(make_ae_model(config.n, config.k, rng));
    }

    const ChannelSpec spec = training_spec(config);
    const double sigma2 = ebn0_to_sigma2(spec);
    const double coeff = mixing_coefficient(spec);
    const double inv_m = 1.0 / static_cast<double>(m);

    std::size_t total_params = 0;
    std::vector<ParamView> params;
    for (AeModel& model : models) {
        total_params += parameter_count(model);
        for (ParamView& view : trainable_params(model)) params.push_back(view);
    }
    AdamOptimizer optimizer(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8},
                            total_params);

    TrainResult result;
    const std::size_t num_messages = std::size_t{1} << config.k;
    const std::size_t batch = config.batch_size;
    std::vector<std::vector<std::size_t>> messages(m);
    std::vector<Tensor> codewords(m);
    std::vector<Tensor> received(m);
    std::vector<Tensor> grad_received(m);

    for (std::size_t step = 0; step < config.train_steps; ++step) {
        for (std::size_t u = 0; u < m; ++u) {
            messages[u] = balanced_batch(num_messages, batch, rng);
            const Tensor inputs = one_hot(messages[u], num_messages);
            codewords[u] = models[u].norm.forward(models[u].transmitter.forward(inputs));
        }
        for (std::size_t u = 0; u < m; ++u) {
            Tensor y = codewords[u];
            for (std::size_t v = 0; v < m; ++v) {
                if (v == u) continue;
                const Tensor& other = codewords[v];
                for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += coeff * other.v[i];
            }
            add_awgn(y.v, sigma2, rng);
            received[u] = std::move(y);
        }

        double loss = 0.0;
        for (std::size_t u = 0; u < m; ++u) {
            const Tensor& probs = models[u].receiver.forward(received[u]);
            loss += cross_entropy(probs, messages[u]);
            Tensor grad_pre = softmax_cross_entropy_grad(probs, messages[u]);
            for (double& g : grad_pre.v) g *= inv_m;
            grad_received[u] = models[u].receiver.backward(grad_pre, true);
        }
        loss *= inv_m;
        if (!std::isfinite(loss)) {
            throw NumericError("train_end_to_end: loss became non-finite at step " +
                               std::to_string(step));
        }
        if (step == 0) result.initial_loss = loss;
        result.final_loss = loss;

        for (std::size_t u = 0; u < m; ++u) {
            Tensor grad_codewords = grad_received[u];
            for (std::size_t v = 0; v < m; ++v) {
                if (v == u) continue;
                const Tensor& cross = grad_received[v];
                for (std::size_t i = 0; i < grad_codewords.size(); ++i) {
                    grad_codewords.v[i] += coeff * cross.v[i];
                }
            }
            const Tensor grad_mapped = models[u].norm.backward(grad_codewords);
            models[u].transmitter.backward(grad_mapped, false);
        }
        optimizer.step(params);
    }

    result.interferer_codebooks.reserve(m - 1);
    for (std::size_t u = 1; u < m; ++u) {
        result.interferer_codebooks.push_back(codebook(models[u]));
    }
    result.model = std::move(models.front());
    return result;
}

// One optimization phase of shared-transmitter training. Interferer
// messages ride in the same forward pass: columns [0, B) belong to user 1
// and columns [uB, (u+1)B) to interferer u. The channel is linear in all
// of them, so one backward pass yields the exact gradient of user 1's
// loss, including the paths through the mixing (dy/dx_u = coeff). That
// coupling is what lets the transmitter shape its codebook against its own
// interference.
void shared_phase(AeModel& model, double coeff, double sigma2,
                  std::size_t interferer_count, std::size_t steps, double lr,
                  std::size_t batch, std::size_t& global_step, TrainResult& result,
                  RngStream& rng) {
    AdamOptimizer optimizer(AdamConfig{lr, 0.9, 0.999, 1e-8}, parameter_count(model));
    std::vector<ParamView> params = trainable_params(model);
    const std::size_t num_messages = model.message_count();

    for (std::size_t step = 0; step < steps; ++step, ++global_step) {
        std::vector<std::size_t> messages = balanced_batch(num_messages, batch, rng);
        messages.resize(batch * (1 + interferer_count));
        for (std::size_t c = batch; c < messages.size(); ++c) {
            messages[c] = rng.uniform_index(num_messages);
        }
        const Tensor inputs = one_hot(messages, num_messages);
        const Tensor& mapped = model.transmitter.forward(inputs);
        const Tensor& codewords = model.norm.forward(mapped);

        Tensor received(codewords.rows, batch);
        for (std::size_t r = 0; r < codewords.rows; ++r) {
            for (std::size_t c = 0; c < batch; ++c) {
                double mixed = codewords(r, c);
                for (std::size_t u = 1; u <= interferer_count; ++u) {
                    mixed += coeff * codewords(r, u * batch + c);
                }
                received(r, c) = mixed;
            }
        }
        add_awgn(received.v, sigma2, rng);

        messages.resize(batch);
        const Tensor& probs = model.receiver.forward(received);
        const double loss = cross_entropy(probs, messages);
        if (!std::isfinite(loss)) {
            throw NumericError("train_end_to_end: loss became non-finite at step " +
                               std::to_string(global_step));
        }
        if (global_step == 0) result.initial_loss = loss;
        result.final_loss = loss;

        const Tensor grad_pre = softmax_cross_entropy_grad(probs, messages);
        const Tensor grad_received = model.receiver.backward(grad_pre, true);
        Tensor grad_codewords(codewords.rows, codewords.cols);
        for (std::size_t r = 0; r < codewords.rows; ++r) {
            for (std::size_t c = 0; c < batch; ++c) {
                grad_codewords(r, c) = grad_received(r, c);
                for (std::size_t u = 1; u <= interferer_count; ++u) {
                    grad_codewords(r, u * batch + c) = coeff * grad_received(r, c);
                }
            }
        }
        const Tensor grad_mapped = model.norm.backward(grad_codewords);
        model.transmitter.backward(grad_mapped, false);
        optimizer.step(params);
    }
}

// Shared-transmitter training (train_alpha > 1): the configured steps at
// the configured learning rate, then two annealed large-batch phases that
// buy the last factors of the error rate without disturbing the codebook
// structure the first phase found.
TrainResult train_shared(const AeConfig& config, RngStream& rng) {
    TrainResult result;
    result.model = make_ae_model(config.n, config.k, rng);

    const ChannelSpec spec = training_spec(config);
    const double sigma2 = ebn0_to_sigma2(spec);
    const double coeff = mixing_coefficient(spec);
    const std::size_t interferer_count = config.m_users - 1;

    struct Phase {
        std::size_t steps;
        double lr;
        std::size_t batch;
    };
    const std::size_t s = config.train_steps;
    const Phase phases[] = {
        {s, config.learning_rate, config.batch_size},
        {(8 * s + 14) / 15, config.learning_rate / 5.0, 4 * config.batch_size},
        {(4 * s + 14) / 15, config.learning_rate / 50.0, 4 * config.batch_size},
    };
    std::size_t global_step = 0;
    for (const Phase& phase : phases) {
        shared_phase(result.model, coeff, sigma2, interferer_count, phase.steps,
                     phase.lr, phase.batch, global_step, result, rng);
    }
    return result;
}

}  // namespace

AeModel make_ae_model(std::size_t n, std::size_t k, RngStream& rng) {
    if (n == 0 || k == 0 || k >= 63) {
        throw std::invalid_argument("make_ae_model: need n >= 1 and 1 <= k < 63, got n=" +
                                    std::to_string(n) + " k=" + std::to_string(k));
    }
    AeModel model;
    model.n = n;
    model.k = k;
    const std::size_t num_messages = model.message_count();
    model.transmitter.push_back(DenseLayer(num_messages, num_messages, Activation::elu));
    model.transmitter.push_back(DenseLayer(num_messages, 2 * n, Activation::linear));
    model.norm = PowerNormLayer(n);
    model.receiver.push_back(DenseLayer(2 * n, num_messages, Activation::relu));
    model.receiver.push_back(DenseLayer(num_messages, num_messages, Activation::softmax));
    model.transmitter.init_weights(rng);
    model.receiver.init_weights(rng);
    return model;
}

std::vector<ParamView> trainable_params(AeModel& model, bool receiver_only) {
    std::vector<ParamView> params;
    auto add_stack = [&params](LayerStack& stack, const std::string& prefix) {
        for (std::size_t li = 0; li < stack.layers().size(); ++li) {
            DenseLayer& layer = stack.layers()[li];
            const std::string base = prefix + std::to_string(li);
            params.push_back({base + ".weights", &layer.weights()});
            params.push_back({base + ".bias", &layer.bias()});
        }
    };
    if (!receiver_only) add_stack(model.transmitter, "transmitter.");
    add_stack(model.receiver, "receiver.");
    return params;
}

std::size_t parameter_count(const AeModel& model, bool receiver_only) {
    std::size_t total = model.receiver.parameter_count();
    if (!receiver_only) total += model.transmitter.parameter_count();
    return total;
}

TrainResult train_end_to_end(const AeConfig& config, RngStream& rng) {
    if (config.batch_size == 0) {
        throw std::invalid_argument("train_end_to_end: batch_size must be positive");
    }
    if (config.m_users == 0) {
        throw std::invalid_argument("train_end_to_end: m_users must be positive");
    }
    const bool informed = config.train_alpha.has_value() && config.m_users > 1;
    if (!informed) return train_blind(config, rng);
    if (*config.train_alpha <= 1.0) return train_coupled_pairs(config, rng);
    return train_shared(config, rng);
}

void adapt_receiver(AeModel& model, const AeConfig& config, std::size_t steps,
                    RngStream& rng, std::span<const Tensor> interference_codebooks) {
    if (steps == 0) return;
    ChannelSpec spec;
    spec.m = config.m_users;
    spec.alpha = config.train_alpha.value_or(0.0);
    spec.ebn0_db = config.train_ebn0_db;
    spec.n = model.n;
    spec.k = model.k;
    const double sigma2 = ebn0_to_sigma2(spec);
    const bool informed = config.train_alpha.has_value() && config.m_users > 1;
    const double coeff = informed ? mixing_coefficient(spec) : 0.0;
    const std::size_t interferer_count = informed ? config.m_users - 1 : 0;

    const Tensor book = codebook(model);  // transmitter frozen throughout
    std::vector<const Tensor*> books;
    if (interferer_count > 0) {
        books = resolve_interferer_books(book, interference_codebooks, interferer_count,
                                         "adapt_receiver");
    }
    const std::size_t num_messages = model.message_count();

    AdamOptimizer optimizer(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8},
                            parameter_count(model, true));
    std::vector<ParamView> params = trainable_params(model, true);

    for (std::size_t step = 0; step < steps; ++step) {
        const std::vector<std::size_t> messages =
            balanced_batch(num_messages, config.batch_size, rng);
        Tensor codewords(book.rows, config.batch_size);
        for (std::size_t c = 0; c < config.batch_size; ++c) {
            for (std::size_t r = 0; r < book.rows; ++r) {
                codewords(r, c) = book(r, messages[c]);
            }
        }
        std::vector<Tensor> interferers;
        if (interferer_count > 0) {
            interferers = draw_interferers(books, num_messages, config.batch_size, rng);
        }
        const Tensor received =
            receive_user1(codewords, interferers, coeff, sigma2, rng);
        const Tensor& probs = model.receiver.forward(received);
        const double loss = cross_entropy(probs, messages);
        if (!std::isfinite(loss)) {
            throw NumericError("adapt_receiver: loss became non-finite at step " +
                               std::to_string(step));
        }
        const Tensor grad_pre = softmax_cross_entropy_grad(probs, messages);
        model.receiver.backward(grad_pre, true);
        optimizer.step(params);
    }
}

std::vector<double> encode_message(const AeModel& model, std::size_t message) {
    const std::size_t num_messages = model.message_count();
    if (message >= num_messages) {
        throw std::invalid_argument("encode_message: message " + std::to_string(message) +
                                    " out of range for k=" + std::to_string(model.k));
    }
    Tensor input(num_messages, 1);
    input(message, 0) = 1.0;
    const Tensor codeword = model.norm.apply(model.transmitter.apply(input));
    std::vector<double> result(codeword.rows);
    for (std::size_t r = 0; r < codeword.rows; ++r) result[r] = codeword(r, 0);
    return result;
}

Tensor codebook(const AeModel& model) {
    const std::size_t num_messages = model.message_count();
    std::vector<std::size_t> all(num_messages);
    for (std::size_t s = 0; s < num_messages; ++s) all[s] = s;
    return model.norm.apply(model.transmitter.apply(one_hot(all, num_messages)));
}

DecodeResult decode(const AeModel& model, std::span<const double> received) {
    if (received.size() != 2 * model.n) {
        throw std::invalid_argument("decode: expected " + std::to_string(2 * model.n) +
                                    " received components, got " +
                                    std::to_string(received.size()));
    }
    Tensor input(received.size(), 1);
    for (std::size_t r = 0; r < received.size(); ++r) input(r, 0) = received[r];
    const Tensor probs = model.receiver.apply(input);
    DecodeResult result;
    result.probs.resize(probs.rows);
    result.message = 0;
    for (std::size_t s = 0; s < probs.rows; ++s) {
        result.probs[s] = probs(s, 0);
        if (result.probs[s] > result.probs[result.message]) result.message = s;
    }
    return result;
}

// Receiver forward pass for a single symbol without Tensor allocations;
// softmax is monotone, so the final argmax reads the logits directly.
std::size_t decode_argmax(const AeModel& model, std::span<const double> received,
                          std::vector<double>& scratch_a,
                          std::vector<double>& scratch_b) {
    if (received.size() != 2 * model.n) {
        throw std::invalid_argument("decode_argmax: expected " +
                                    std::to_string(2 * model.n) +
                                    " received components, got " +
                                    std::to_string(received.size()));
    }
    std::span<const double> input = received;
    std::vector<double>* output = &scratch_a;
    for (const DenseLayer& layer : model.receiver.layers()) {
        const Tensor& w = layer.weights();
        const Tensor& b = layer.bias();
        output->assign(w.rows, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            double acc = b.v[r];
            const double* wrow = &w.v[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) acc += wrow[c] * input[c];
            switch (layer.activation()) {
                case Activation::relu: acc = acc > 0.0 ? acc : 0.0; break;
                case Activation::elu:
                    acc = acc > 0.0 ? acc : kEluAlpha * std::expm1(acc);
                    break;
                case Activation::tanh: acc = std::tanh(acc); break;
                case Activation::linear:
                case Activation::softmax: break;  // argmax of logits
            }
            (*output)[r] = acc;
        }
        input = std::span<const double>(*output);
        output = (output == &scratch_a) ? &scratch_b : &scratch_a;
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < input.size(); ++s) {
        if (input[s] > input[best]) best = s;
    }
    return best;
}

std::vector<int> bits_from_message(std::size_t message, std::size_t k) {
    if (k == 0 || k >= 63) {
        throw std::invalid_argument("bits_from_message: need 1 <= k < 63, got " +
                                    std::to_string(k));
    }
    if (message >= (std::size_t{1} << k)) {
        throw std::invalid_argument("bits_from_message: message " +
                                    std::to_string(message) + " out of range for k=" +
                                    std::to_string(k));
    }
    std::vector<int> bits(k);
    for (std::size_t i = 0; i < k; ++i) {
        bits[i] = static_cast<int>((message >> (k - 1 - i)) & 1u);
    }
    return bits;
}

SerPoint evaluate_ser_point(const AeModel& model, const ChannelSpec& spec,
                            std::optional<double> eval_alpha, std::uint64_t symbols,
                            RngStream& rng) {
    if (symbols == 0) {
        throw std::invalid_argument("evaluate_ser_point: symbol count must be positive");
    }
    ChannelSpec local = spec;
    local.n = model.n;
    local.k = model.k;
    const double sigma2 = ebn0_to_sigma2(local);
    const double sigma = std::sqrt(sigma2);
    const bool interfered = eval_alpha.has_value() && local.m > 1;
    double coeff = 0.0;
    if (interfered) {
        local.alpha = *eval_alpha;
        coeff = mixing_coefficient(local);
    }
    const std::size_t interferer_count = interfered ? local.m - 1 : 0;

    const Tensor book = codebook(model);
    std::vector<const Tensor*> books;
    if (interferer_count > 0) {
        books = resolve_interferer_books(book, local.interference_codebooks,
                                         interferer_count, "evaluate_ser_point");
    }
    const std::size_t num_messages = model.message_count();
    const std::size_t dim = book.rows;
    std::vector<double> received(dim);
    std::vector<double> scratch_a, scratch_b;
    std::vector<std::size_t> other(interferer_count);

    std::uint64_t symbol_errors = 0;
    std::uint64_t bit_errors = 0;
    for (std::uint64_t i = 0; i < symbols; ++i) {
        const std::size_t sent = rng.uniform_index(num_messages);
        for (std::size_t u = 0; u < interferer_count; ++u) {
            other[u] = rng.uniform_index(num_messages);
        }
        for (std::size_t r = 0; r < dim; ++r) {
            double y = book(r, sent);
            for (std::size_t u = 0; u < interferer_count; ++u) {
                y += coeff * (*books[u])(r, other[u]);
            }
            received[r] = y + sigma * rng.normal();
        }
        const std::size_t decoded = decode_argmax(model, received, scratch_a, scratch_b);
        if (decoded != sent) {
            ++symbol_errors;
            bit_errors += static_cast<std::uint64_t>(
                std::popcount(static_cast<std::uint64_t>(decoded ^ sent)));
        }
    }

    SerPoint point;
    point.ebn0_db = local.ebn0_db;
    point.ser = static_cast<double>(symbol_errors) / static_cast<double>(symbols);
    point.ber = static_cast<double>(bit_errors) /
                (static_cast<double>(symbols) * static_cast<double>(model.k));
    point.n_symbols = symbols;
    point.seed = rng.seed();
    return point;
}

std::vector<SerPoint> evaluate_ser(const AeModel& model, const ChannelSpec& base,
                                   std::optional<double> eval_alpha,
                                   std::span<const double> ebn0_grid_db,
                                   std::uint64_t symbols_per_point,
                                   std::uint64_t master_seed, std::string_view label,
                                   int jobs) {
    std::vector<SerPoint> points(ebn0_grid_db.size());
    auto run_point = [&](std::size_t i) {
        ChannelSpec spec = base;
        spec.ebn0_db = ebn0_grid_db[i];
        const std::string point_label =
            std::string(label) + "/point" + std::to_string(i);
        RngStream stream = seed_stream(master_seed, point_label);
        points[i] = evaluate_ser_point(model, spec, eval_alpha, symbols_per_point, stream);
    };
    const std::size_t count = ebn0_grid_db.size();
    const std::size_t workers =
        std::min<std::size_t>(count, jobs > 1 ? static_cast<std::size_t>(jobs) : 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_point(i);
        return points;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                run_point(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
    return points;
}

}  // namespace aeic
