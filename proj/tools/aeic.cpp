// aeic — train, evaluate and adapt a learned physical layer over a
// two-user (or m-user) Gaussian interference channel, and reproduce the
// standard result figures as CSV + plot data.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aeic/adl.hpp"
#include "aeic/autoencoder.hpp"
#include "aeic/channel.hpp"
#include "aeic/checkpoint.hpp"
#include "aeic/errors.hpp"
#include "aeic/experiment.hpp"

namespace {

std::vector<double> parse_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw std::invalid_argument("empty numeric list: " + value);
    return out;
}

// A coupled-trained checkpoint travels with an environment sidecar holding
// the interferers' codebooks; eval and adl pick it up when it exists.
std::string env_path_for(const std::string& checkpoint_path) {
    return checkpoint_path + ".env";
}

std::vector<aeic::Tensor> try_load_environment(const std::string& checkpoint_path) {
    const std::string path = env_path_for(checkpoint_path);
    if (!std::filesystem::exists(path)) return {};
    return aeic::load_environment(path);
}

// Defaults for `preset`, overlaid with the config file when one is given.
// force_preset pins the preset regardless of the file (reproduce --figure).
aeic::ExperimentConfig base_config(const std::string& preset,
                                   const std::string& config_path, bool force_preset) {
    aeic::ExperimentConfig config = aeic::default_config(preset);
    if (!config_path.empty()) {
        aeic::apply_config_file(config, config_path);
        if (force_preset) {
            config.preset = preset;
        } else if (config.preset != preset) {
            // The file named another preset: restart from its defaults.
            const std::string chosen = config.preset;
            config = aeic::default_config(chosen);
            aeic::apply_config_file(config, config_path);
        }
    }
    return config;
}

struct TrainArgs {
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out = "model.ckpt";
    std::uint64_t symbols = 20000;
    int jobs = 1;
    double alpha = 0.0;
    bool blind = false;
    std::uint64_t steps = 0;
    std::uint64_t batch = 0;
    double learning_rate = 0.0;
    double ebn0_db = 0.0;
    std::uint64_t users = 0;
    std::uint64_t n = 0;
    std::uint64_t k = 0;
};

int run_train(const TrainArgs& args, const CLI::App& cmd) {
    aeic::ExperimentConfig config = base_config("custom", args.config_path, false);
    config.master_seed = args.seed;
    if (cmd.count("--alpha") > 0) config.alpha_train = args.alpha;
    if (args.blind) config.alpha_train.reset();
    if (cmd.count("--steps") > 0) config.ae.train_steps = args.steps;
    if (cmd.count("--batch") > 0) config.ae.batch_size = args.batch;
    if (cmd.count("--lr") > 0) config.ae.learning_rate = args.learning_rate;
    if (cmd.count("--ebn0") > 0) config.ae.train_ebn0_db = args.ebn0_db;
    if (cmd.count("--users") > 0) config.ae.m_users = args.users;
    if (cmd.count("--n") > 0) config.ae.n = args.n;
    if (cmd.count("--k") > 0) config.ae.k = args.k;

    aeic::AeConfig ae = config.ae;
    ae.train_alpha = config.alpha_train;
    aeic::RngStream rng = aeic::seed_stream(config.master_seed, "cli/train");
    const aeic::TrainResult result = aeic::train_end_to_end(ae, rng);
    aeic::save_checkpoint(result.model, args.out);
    if (!result.interferer_codebooks.empty()) {
        aeic::save_environment(result.interferer_codebooks, ae.n, ae.k,
                               env_path_for(args.out));
    }

    aeic::ChannelSpec spec;
    spec.m = ae.m_users;
    spec.ebn0_db = ae.train_ebn0_db;
    spec.interference_codebooks = result.interferer_codebooks;
    aeic::RngStream eval_rng = aeic::seed_stream(config.master_seed, "cli/train/eval");
    const aeic::SerPoint check = aeic::evaluate_ser_point(
        result.model, spec, ae.train_alpha, args.symbols, eval_rng);

    std::cout << "trained (" << ae.n << "," << ae.k << ") model: "
              << (ae.train_alpha.has_value()
                      ? "alpha=" + aeic::format_double(*ae.train_alpha)
                      : std::string("blind"))
              << " ebn0=" << aeic::format_double(ae.train_ebn0_db) << " dB"
              << " steps=" << ae.train_steps
              << " loss " << aeic::format_double(result.initial_loss) << " -> "
              << aeic::format_double(result.final_loss) << "\n";
    std::cout << "self-check at training point: ser="
              << aeic::format_double(check.ser)
              << " ber=" << aeic::format_double(check.ber) << " over "
              << check.n_symbols << " symbols\n";
    std::cout << "checkpoint written to " << args.out << "\n";
    if (!result.interferer_codebooks.empty()) {
        std::cout << "environment written to " << env_path_for(args.out) << "\n";
    }
    return 0;
}

struct EvalArgs {
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out = "eval.csv";
    std::uint64_t symbols = 0;
    int jobs = 1;
    std::string model_path;
    double alpha = 0.0;
    std::string grid;
};

int run_eval(const EvalArgs& args, const CLI::App& cmd) {
    aeic::ExperimentConfig config = base_config("custom", args.config_path, false);
    config.master_seed = args.seed;
    if (cmd.count("--symbols") > 0) config.symbols_per_point = args.symbols;
    if (cmd.count("--jobs") > 0) config.jobs = args.jobs;
    if (!args.grid.empty()) config.ebn0_grid_db = parse_list(args.grid);

    const aeic::AeModel model = aeic::load_checkpoint(args.model_path);
    std::optional<double> eval_alpha;
    if (cmd.count("--alpha") > 0) eval_alpha = args.alpha;

    aeic::ChannelSpec spec = config.channel;
    spec.m = config.ae.m_users;
    spec.interference_codebooks = try_load_environment(args.model_path);
    const std::vector<aeic::SerPoint> points = aeic::evaluate_ser(
        model, spec, eval_alpha, config.ebn0_grid_db, config.symbols_per_point,
        config.master_seed, "cli/eval", config.jobs);

    std::ofstream csv(args.out, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open '" + args.out + "' for writing");
    csv << aeic::csv_header() << "\n";
    const std::string regime =
        eval_alpha.has_value() && spec.m > 1
            ? std::string(
                  aeic::regime_name(aeic::classify_regime(*eval_alpha, spec.m).name))
            : "";
    std::cout << "ebn0_db ser ber\n";
    for (const aeic::SerPoint& point : points) {
        aeic::CsvRow row;
        row.experiment = "eval";
        row.alpha_eval = eval_alpha;
        row.ebn0_db = point.ebn0_db;
        row.ser = point.ser;
        row.ber = point.ber;
        row.n_symbols = point.n_symbols;
        row.regime = regime;
        row.seed = config.master_seed;
        csv << aeic::format_csv_row(row) << "\n";
        std::cout << aeic::format_double(point.ebn0_db) << " "
                  << aeic::format_double(point.ser) << " "
                  << aeic::format_double(point.ber) << "\n";
    }
    std::cout << "csv written to " << args.out << "\n";
    return 0;
}

struct AdlArgs {
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out = "out";
    std::uint64_t symbols = 0;
    int jobs = 1;
    std::string model_path;
    double alpha_true = 0.0;
    double ebn0_db = 7.0;
};

int run_adl_cmd(const AdlArgs& args, const CLI::App& cmd) {
    aeic::ExperimentConfig config = base_config("custom", args.config_path, false);
    config.master_seed = args.seed;
    if (cmd.count("--symbols") > 0) config.symbols_per_point = args.symbols;

    const aeic::AeModel model = aeic::load_checkpoint(args.model_path);
    aeic::ChannelSpec truth = config.channel;
    truth.m = config.adl.m_users;
    truth.alpha = args.alpha_true;
    truth.ebn0_db = args.ebn0_db;
    truth.interference_codebooks = try_load_environment(args.model_path);

    aeic::RngStream stream_rng = aeic::seed_stream(config.master_seed, "cli/adl/stream");
    const aeic::TransmissionStream stream = aeic::simulate_stream(
        model, truth, config.symbols_per_point, config.adl, stream_rng);
    aeic::RngStream bank_rng = aeic::seed_stream(config.master_seed, "cli/adl/bank");
    const aeic::AdlResult result =
        aeic::run_adl(model, stream, truth, config.adl, bank_rng);

    std::error_code ec;
    std::filesystem::create_directories(args.out, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory '" + args.out + "'");
    }
    const std::string reward_path =
        (std::filesystem::path(args.out) / "adl_reward.csv").string();
    std::ofstream reward(reward_path, std::ios::binary);
    if (!reward) throw std::runtime_error("cannot open '" + reward_path + "'");
    reward << "alpha_candidate,raw_reward,normalized_reward\n";
    for (std::size_t i = 0; i < result.rewards.grid.size(); ++i) {
        reward << aeic::format_double(result.rewards.grid[i]) << ","
               << aeic::format_double(result.rewards.raw_rewards[i]) << ","
               << aeic::format_double(result.rewards.normalized_rewards[i]) << "\n";
    }
    const std::string csv_path = (std::filesystem::path(args.out) / "adl.csv").string();
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot open '" + csv_path + "'");
    csv << aeic::csv_header() << "\n";
    aeic::CsvRow row;
    row.experiment = "adl";
    row.alpha_eval = args.alpha_true;
    row.alpha_predicted = result.alpha_hat;
    row.ebn0_db = truth.ebn0_db;
    row.ser = result.payload_ser;
    row.ber = result.payload_ber;
    row.n_symbols = stream.payload_messages.size();
    row.regime =
        truth.m > 1 ? std::string(aeic::regime_name(
                          aeic::classify_regime(args.alpha_true, truth.m).name))
                    : "";
    row.seed = config.master_seed;
    csv << aeic::format_csv_row(row) << "\n";

    std::cout << "alpha_hat=" << aeic::format_double(result.alpha_hat)
              << " payload_ser=" << aeic::format_double(result.payload_ser)
              << " payload_ber=" << aeic::format_double(result.payload_ber) << " over "
              << stream.payload_messages.size() << " symbols\n";
    std::cout << "outputs written to " << reward_path << " and " << csv_path << "\n";
    return 0;
}

struct ReproduceArgs {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out;
    std::uint64_t symbols = 0;
    int jobs = 0;
    int figure = 0;
};

int run_reproduce(const ReproduceArgs& args, const CLI::App& cmd) {
    const std::string preset = "fig" + std::to_string(args.figure);
    aeic::ExperimentConfig config = base_config(preset, args.config_path, true);
    if (cmd.count("--seed") > 0) config.master_seed = args.seed;
    if (cmd.count("--out") > 0) config.out_path = args.out;
    if (cmd.count("--symbols") > 0) config.symbols_per_point = args.symbols;
    if (cmd.count("--jobs") > 0) config.jobs = args.jobs;

    const aeic::PresetOutput output = aeic::run_preset(config);
    for (const std::string& file : output.files) {
        std::cout << "wrote " << file << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learned physical layer over a Gaussian interference channel"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train_cmd =
        app.add_subcommand("train", "train an autoencoder and save a checkpoint");
    train_cmd->add_option("--seed", train_args.seed, "master seed");
    train_cmd->add_option("--config", train_args.config_path, "key=value config file");
    train_cmd->add_option("--out", train_args.out, "checkpoint output path");
    train_cmd->add_option("--symbols", train_args.symbols,
                          "symbols for the post-training self-check");
    train_cmd->add_option("--jobs", train_args.jobs, "worker threads");
    train_cmd->add_option("--alpha", train_args.alpha,
                          "train with known interference coupling alpha");
    train_cmd->add_flag("--blind", train_args.blind,
                        "train without interference (AWGN only)");
    train_cmd->add_option("--steps", train_args.steps, "training steps");
    train_cmd->add_option("--batch", train_args.batch, "batch size");
    train_cmd->add_option("--lr", train_args.learning_rate, "Adam learning rate");
    train_cmd->add_option("--ebn0", train_args.ebn0_db, "training Eb/N0 in dB");
    train_cmd->add_option("--users", train_args.users, "number of users m");
    train_cmd->add_option("--n", train_args.n, "channel uses per message");
    train_cmd->add_option("--k", train_args.k, "bits per message");

    EvalArgs eval_args;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "evaluate a checkpoint over an Eb/N0 grid");
    eval_cmd->add_option("--seed", eval_args.seed, "master seed");
    eval_cmd->add_option("--config", eval_args.config_path, "key=value config file");
    eval_cmd->add_option("--out", eval_args.out, "CSV output path");
    eval_cmd->add_option("--symbols", eval_args.symbols, "symbols per grid point");
    eval_cmd->add_option("--jobs", eval_args.jobs, "worker threads");
    eval_cmd->add_option("--model", eval_args.model_path, "checkpoint to evaluate")
        ->required();
    eval_cmd->add_option("--alpha", eval_args.alpha,
                         "interference coupling of the evaluation channel");
    eval_cmd->add_option("--grid", eval_args.grid, "comma-separated Eb/N0 grid in dB");

    AdlArgs adl_args;
    CLI::App* adl_cmd = app.add_subcommand(
        "adl", "estimate alpha from pilots and decode a payload");
    adl_cmd->add_option("--seed", adl_args.seed, "master seed");
    adl_cmd->add_option("--config", adl_args.config_path, "key=value config file");
    adl_cmd->add_option("--out", adl_args.out, "output directory");
    adl_cmd->add_option("--symbols", adl_args.symbols, "payload symbols");
    adl_cmd->add_option("--jobs", adl_args.jobs, "worker threads");
    adl_cmd->add_option("--model", adl_args.model_path, "checkpoint to adapt")
        ->required();
    adl_cmd->add_option("--alpha-true", adl_args.alpha_true,
                        "actual coupling of the simulated channel")
        ->required();
    adl_cmd->add_option("--ebn0", adl_args.ebn0_db, "operating Eb/N0 in dB");

    ReproduceArgs repro_args;
    CLI::App* repro_cmd =
        app.add_subcommand("reproduce", "run a figure preset end to end");
    repro_cmd->add_option("--figure", repro_args.figure, "figure number")
        ->required()
        ->check(CLI::Range(2, 6));
    repro_cmd->add_option("--seed", repro_args.seed, "master seed");
    repro_cmd->add_option("--config", repro_args.config_path, "key=value config file");
    repro_cmd->add_option("--out", repro_args.out, "output directory");
    repro_cmd->add_option("--symbols", repro_args.symbols, "symbols per grid point");
    repro_cmd->add_option("--jobs", repro_args.jobs, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (train_cmd->parsed()) return run_train(train_args, *train_cmd);
        if (eval_cmd->parsed()) return run_eval(eval_args, *eval_cmd);
        if (adl_cmd->parsed()) return run_adl_cmd(adl_args, *adl_cmd);
        if (repro_cmd->parsed()) return run_reproduce(repro_args, *repro_cmd);
    } catch (const aeic::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
