#include "aeic/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aeic {

namespace {

std::string alpha_tag(double alpha) { return format_double(alpha); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string regime_for(std::optional<double> alpha_eval, std::size_t m) {
    if (!alpha_eval.has_value() || m < 2) return "";
    return std::string(regime_name(classify_regime(*alpha_eval, m).name));
}

// Shared state while a preset assembles its outputs.
struct PresetRun {
    const ExperimentConfig& config;
    std::vector<CsvRow> rows;
    std::vector<std::pair<std::string, std::string>> index;  // curve -> dat file
    std::vector<std::string> files;

    explicit PresetRun(const ExperimentConfig& cfg) : config(cfg) {}

    ChannelSpec base_spec() const {
        ChannelSpec spec = config.channel;
        spec.m = config.ae.m_users;
        spec.n = config.ae.n;
        spec.k = config.ae.k;
        return spec;
    }

    TrainResult train(std::optional<double> alpha, const std::string& label) const {
        AeConfig ae = config.ae;
        ae.train_alpha = alpha;
        RngStream rng = seed_stream(config.master_seed, label);
        return train_end_to_end(ae, rng);
    }

    // SER sweep for one curve; appends CSV rows and writes the .dat file.
    void sweep_curve(const TrainResult& trained, const std::string& curve,
                     std::optional<double> alpha_train,
                     std::optional<double> alpha_eval) {
        ChannelSpec spec = base_spec();
        spec.interference_codebooks = trained.interferer_codebooks;
        const std::vector<SerPoint> points = evaluate_ser(
            trained.model, spec, alpha_eval, config.ebn0_grid_db,
            config.symbols_per_point, config.master_seed,
            config.preset + "/" + curve, config.jobs);
        const std::string regime = regime_for(alpha_eval, config.ae.m_users);
        for (const SerPoint& point : points) {
            CsvRow row;
            row.experiment = config.preset + "_" + curve;
            row.alpha_train = alpha_train;
            row.alpha_eval = alpha_eval;
            row.ebn0_db = point.ebn0_db;
            row.ser = point.ser;
            row.ber = point.ber;
            row.n_symbols = point.n_symbols;
            row.regime = regime;
            row.seed = config.master_seed;
            rows.push_back(std::move(row));
        }
        write_dat(curve, points);
    }

    void write_dat(const std::string& curve, const std::vector<SerPoint>& points) {
        const std::string name = config.preset + "_" + curve + ".dat";
        const std::string path = join_path(config.out_path, name);
        std::ofstream out = open_out(path);
        out << "# " << config.preset << " " << curve << ": ebn0_db ser\n";
        for (const SerPoint& point : points) {
            out << format_double(point.ebn0_db) << " " << format_double(point.ser)
                << "\n";
        }
        files.push_back(path);
        index.emplace_back(curve, name);
    }

    void write_reward_dat(const std::string& curve, const RewardTable& table) {
        const std::string name = config.preset + "_" + curve + ".dat";
        const std::string path = join_path(config.out_path, name);
        std::ofstream out = open_out(path);
        out << "# " << config.preset << " " << curve
            << ": alpha_candidate normalized_reward\n";
        for (std::size_t i = 0; i < table.grid.size(); ++i) {
            out << format_double(table.grid[i]) << " "
                << format_double(table.normalized_rewards[i]) << "\n";
        }
        files.push_back(path);
        index.emplace_back(curve, name);
    }

    void write_reward_csv(const std::string& stem, const RewardTable& table) {
        const std::string path = join_path(config.out_path, stem + ".csv");
        std::ofstream out = open_out(path);
        out << "alpha_candidate,raw_reward,normalized_reward\n";
        for (std::size_t i = 0; i < table.grid.size(); ++i) {
            out << format_double(table.grid[i]) << ","
                << format_double(table.raw_rewards[i]) << ","
                << format_double(table.normalized_rewards[i]) << "\n";
        }
        files.push_back(path);
    }

    void finish() {
        const std::string csv_path =
            join_path(config.out_path, config.preset + ".csv");
        std::ofstream csv = open_out(csv_path);
        csv << csv_header() << "\n";
        for (const CsvRow& row : rows) csv << format_csv_row(row) << "\n";
        files.insert(files.begin(), csv_path);

        const std::string index_path =
            join_path(config.out_path, config.preset + "_index.txt");
        std::ofstream idx = open_out(index_path);
        for (const auto& [curve, dat] : index) idx << curve << " " << dat << "\n";
        files.push_back(index_path);
    }
};

void run_fig2(PresetRun& run) {
    const ExperimentConfig& cfg = run.config;
    const TrainResult blind = run.train(std::nullopt, "fig2/train/blind");
    const double informed_alpha =
        cfg.alpha_train.value_or(cfg.alpha_eval_list.empty() ? 0.2
                                                             : cfg.alpha_eval_list.front());
    const TrainResult informed = run.train(
        informed_alpha, "fig2/train/informed_alpha_" + alpha_tag(informed_alpha));

    run.sweep_curve(blind, "no_interference", std::nullopt, std::nullopt);
    for (double alpha : cfg.alpha_eval_list) {
        run.sweep_curve(blind, "blind_alpha_" + alpha_tag(alpha), std::nullopt, alpha);
    }
    run.sweep_curve(informed, "informed_alpha_" + alpha_tag(informed_alpha),
                    informed_alpha, informed_alpha);
}

void run_fig34(PresetRun& run) {
    const ExperimentConfig& cfg = run.config;
    if (!cfg.alpha_train.has_value()) {
        throw std::invalid_argument(cfg.preset + ": alpha_train is required");
    }
    const double trained = *cfg.alpha_train;
    const TrainResult model =
        run.train(trained, cfg.preset + "/train/alpha_" + alpha_tag(trained));
    for (double alpha_off : cfg.alpha_eval_list) {
        run.sweep_curve(model,
                        "trained_" + alpha_tag(trained) + "_eval_" + alpha_tag(alpha_off),
                        trained, alpha_off);
    }
}

void run_fig5(PresetRun& run) {
    const ExperimentConfig& cfg = run.config;
    const double ebn0 =
        cfg.ebn0_grid_db.empty() ? cfg.channel.ebn0_db : cfg.ebn0_grid_db.front();

    // Each curve keeps the setting of the robustness sweeps: the model is
    // trained at the coupling under test, and the reward table shows how
    // sharply the pilots single out that coupling among the candidates.
    for (double true_alpha : cfg.alpha_eval_list) {
        const std::string tag = alpha_tag(true_alpha);
        const TrainResult trained =
            run.train(true_alpha, "fig5/train/alpha_" + tag);
        ChannelSpec truth = run.base_spec();
        truth.alpha = true_alpha;
        truth.ebn0_db = ebn0;
        truth.interference_codebooks = trained.interferer_codebooks;

        RngStream bank_rng = seed_stream(cfg.master_seed, "fig5/bank/alpha_" + tag);
        const DecoderBank bank =
            build_decoder_bank(trained.model, cfg.adl, truth.ebn0_db, bank_rng,
                               trained.interferer_codebooks);
        RngStream stream_rng = seed_stream(cfg.master_seed, "fig5/stream/alpha_" + tag);
        const TransmissionStream stream = simulate_stream(
            trained.model, truth, cfg.symbols_per_point, cfg.adl, stream_rng);
        RngStream adl_rng = seed_stream(cfg.master_seed, "fig5/adl/alpha_" + tag);
        const AdlResult result =
            run_adl(trained.model, stream, truth, cfg.adl, adl_rng, &bank);

        run.write_reward_csv("fig5_reward_alpha_" + tag, result.rewards);
        run.write_reward_dat("reward_alpha_" + tag, result.rewards);

        CsvRow row;
        row.experiment = "fig5_true_alpha_" + tag;
        row.alpha_train = true_alpha;
        row.alpha_eval = true_alpha;
        row.alpha_predicted = result.alpha_hat;
        row.ebn0_db = truth.ebn0_db;
        row.ser = result.payload_ser;
        row.ber = result.payload_ber;
        row.n_symbols = stream.payload_messages.size();
        row.regime = regime_for(true_alpha, cfg.ae.m_users);
        row.seed = cfg.master_seed;
        run.rows.push_back(std::move(row));
    }
}

void run_fig6(PresetRun& run) {
    const ExperimentConfig& cfg = run.config;
    for (double trained : cfg.alpha_eval_list) {
        const std::string tag = alpha_tag(trained);
        const double alpha_off = 2.0 * trained;
        const std::string off_tag = alpha_tag(alpha_off);

        const TrainResult model = run.train(trained, "fig6/train/alpha_" + tag);
        const TrainResult known =
            run.train(alpha_off, "fig6/train/known_alpha_" + off_tag);

        run.sweep_curve(model, "alpha_" + tag + "_without_adl", trained, alpha_off);
        run.sweep_curve(known, "alpha_" + tag + "_known_alpha_off", alpha_off,
                        alpha_off);

        // With ADL: per grid point, estimate alpha from pilots and decode the
        // payload with the updated receiver.
        std::vector<SerPoint> adl_points;
        const std::string regime = regime_for(alpha_off, cfg.ae.m_users);
        for (std::size_t i = 0; i < cfg.ebn0_grid_db.size(); ++i) {
            ChannelSpec truth = run.base_spec();
            truth.alpha = alpha_off;
            truth.ebn0_db = cfg.ebn0_grid_db[i];
            truth.interference_codebooks = model.interferer_codebooks;
            const std::string label =
                "fig6/alpha_" + tag + "/adl/point" + std::to_string(i);

            RngStream stream_rng = seed_stream(cfg.master_seed, label + "/stream");
            const TransmissionStream stream = simulate_stream(
                model.model, truth, cfg.symbols_per_point, cfg.adl, stream_rng);
            RngStream adl_rng = seed_stream(cfg.master_seed, label + "/bank");
            const AdlResult result =
                run_adl(model.model, stream, truth, cfg.adl, adl_rng);

            CsvRow row;
            row.experiment = "fig6_alpha_" + tag + "_with_adl";
            row.alpha_train = trained;
            row.alpha_eval = alpha_off;
            row.alpha_predicted = result.alpha_hat;
            row.ebn0_db = truth.ebn0_db;
            row.ser = result.payload_ser;
            row.ber = result.payload_ber;
            row.n_symbols = stream.payload_messages.size();
            row.regime = regime;
            row.seed = cfg.master_seed;
            run.rows.push_back(std::move(row));

            SerPoint point;
            point.ebn0_db = truth.ebn0_db;
            point.ser = result.payload_ser;
            point.ber = result.payload_ber;
            point.n_symbols = stream.payload_messages.size();
            adl_points.push_back(point);
        }
        run.write_dat("alpha_" + tag + "_with_adl", adl_points);
    }
}

void run_custom(PresetRun& run) {
    const ExperimentConfig& cfg = run.config;
    const std::string label =
        cfg.alpha_train.has_value()
            ? "custom/train/alpha_" + alpha_tag(*cfg.alpha_train)
            : "custom/train/blind";
    const TrainResult model = run.train(cfg.alpha_train, label);
    if (cfg.alpha_eval_list.empty()) {
        run.sweep_curve(model, "no_interference", cfg.alpha_train, std::nullopt);
        return;
    }
    for (double alpha : cfg.alpha_eval_list) {
        run.sweep_curve(model, "eval_alpha_" + alpha_tag(alpha), cfg.alpha_train,
                        alpha);
    }
}

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

ExperimentConfig default_config(const std::string& preset) {
    ExperimentConfig config;
    config.preset = preset;
    config.channel.m = config.ae.m_users;
    config.channel.n = config.ae.n;
    config.channel.k = config.ae.k;
    config.channel.ebn0_db = 7.0;
    for (int db = -2; db <= 10; ++db) {
        config.ebn0_grid_db.push_back(static_cast<double>(db));
    }
    if (preset == "custom") {
        return config;
    }
    if (preset == "fig2") {
        config.alpha_train = 0.2;
        config.alpha_eval_list = {0.2, 0.4, 0.6, 0.8};
    } else if (preset == "fig3") {
        config.alpha_train = 0.5;
        config.alpha_eval_list = {0.5, 1.0, 1.5, 2.0, 2.5};
    } else if (preset == "fig4") {
        config.alpha_train = 2.0;
        config.alpha_eval_list = {2.0, 2.25, 2.5};
        config.ae.train_steps = 15000;  // shared-transmitter schedule base
    } else if (preset == "fig5") {
        config.alpha_eval_list = {1.5, 2.0};  // true couplings probed
        config.ae.train_steps = 15000;        // shared-transmitter schedule base
        config.ebn0_grid_db = {7.0};
    } else if (preset == "fig6") {
        config.alpha_eval_list = {1.5, 2.0};  // trained values; offsets are 2x
        config.ae.train_steps = 15000;        // shared-transmitter schedule base
        config.adl.grid_max = 4.5;            // candidates must reach 2*2.0
        config.adl.adapt_steps = 1200;
        config.adl.final_adapt_steps = 4000;
    } else {
        throw std::invalid_argument("unknown preset '" + preset + "'");
    }
    return config;
}

void apply_config_line(ExperimentConfig& config, const std::string& raw) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') return;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("config line lacks '=': " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known_key = true;
    try {
        if (key == "preset") {
            config.preset = value;
        } else if (key == "n") {
            config.ae.n = std::stoul(value);
        } else if (key == "k") {
            config.ae.k = std::stoul(value);
        } else if (key == "train_ebn0_db") {
            config.ae.train_ebn0_db = std::stod(value);
        } else if (key == "learning_rate") {
            config.ae.learning_rate = std::stod(value);
        } else if (key == "batch_size") {
            config.ae.batch_size = std::stoul(value);
        } else if (key == "train_steps") {
            config.ae.train_steps = std::stoul(value);
        } else if (key == "alpha_train") {
            if (value == "none" || value == "blind") {
                config.alpha_train.reset();
            } else {
                config.alpha_train = std::stod(value);
            }
        } else if (key == "m_users") {
            config.ae.m_users = std::stoul(value);
            config.adl.m_users = config.ae.m_users;
            config.channel.m = config.ae.m_users;
        } else if (key == "ebn0_grid_db") {
            config.ebn0_grid_db = parse_double_list(value);
        } else if (key == "alpha_eval_list") {
            config.alpha_eval_list = parse_double_list(value);
        } else if (key == "symbols_per_point") {
            config.symbols_per_point = std::stoull(value);
        } else if (key == "master_seed") {
            config.master_seed = std::stoull(value);
        } else if (key == "out_path") {
            config.out_path = value;
        } else if (key == "jobs") {
            config.jobs = std::stoi(value);
        } else if (key == "adl_grid_min") {
            config.adl.grid_min = std::stod(value);
        } else if (key == "adl_grid_max") {
            config.adl.grid_max = std::stod(value);
        } else if (key == "adl_grid_step") {
            config.adl.grid_step = std::stod(value);
        } else if (key == "adl_confidence_fraction") {
            config.adl.confidence_fraction = std::stod(value);
        } else if (key == "adl_group_count") {
            config.adl.group_count = std::stoul(value);
        } else if (key == "adl_pilot_ratio") {
            config.adl.pilot_ratio = std::stod(value);
        } else if (key == "adl_adapt_steps") {
            config.adl.adapt_steps = std::stoul(value);
        } else if (key == "adl_online_adapt_steps") {
            config.adl.online_adapt_steps = std::stoul(value);
        } else if (key == "adl_final_adapt_steps") {
            config.adl.final_adapt_steps = std::stoul(value);
        } else if (key == "adl_adapt_learning_rate") {
            config.adl.adapt_learning_rate = std::stod(value);
        } else if (key == "adl_adapt_batch") {
            config.adl.adapt_batch = std::stoul(value);
        } else {
            known_key = false;
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("bad value for config key '" + key + "': " +
                                    value);
    }
    if (!known_key) {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file '" + path + "'");
    }
    std::string line;
    while (std::getline(in, line)) apply_config_line(config, line);
}

std::string csv_header() {
    return "experiment,alpha_train,alpha_eval,alpha_predicted,ebn0_db,ser,ber,"
           "n_symbols,regime,seed";
}

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.10g", value);
    return buffer;
}

std::string format_csv_row(const CsvRow& row) {
    auto opt = [](const std::optional<double>& v) {
        return v.has_value() ? format_double(*v) : std::string();
    };
    std::string out = row.experiment;
    out += ',';
    out += opt(row.alpha_train);
    out += ',';
    out += opt(row.alpha_eval);
    out += ',';
    out += opt(row.alpha_predicted);
    out += ',';
    out += format_double(row.ebn0_db);
    out += ',';
    out += format_double(row.ser);
    out += ',';
    out += format_double(row.ber);
    out += ',';
    out += std::to_string(row.n_symbols);
    out += ',';
    out += row.regime;
    out += ',';
    out += std::to_string(row.seed);
    return out;
}

PresetOutput run_preset(const ExperimentConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_path, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory '" + config.out_path +
                                 "': " + ec.message());
    }
    PresetRun run(config);
    if (config.preset == "fig2") {
        run_fig2(run);
    } else if (config.preset == "fig3" || config.preset == "fig4") {
        run_fig34(run);
    } else if (config.preset == "fig5") {
        run_fig5(run);
    } else if (config.preset == "fig6") {
        run_fig6(run);
    } else if (config.preset == "custom") {
        run_custom(run);
    } else {
        throw std::invalid_argument("unknown preset '" + config.preset + "'");
    }
    run.finish();
    PresetOutput output;
    output.files = std::move(run.files);
    output.rows = std::move(run.rows);
    return output;
}

}  // namespace aeic
