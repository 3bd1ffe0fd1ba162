#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aeic/adl.hpp"
#include "aeic/autoencoder.hpp"
#include "aeic/channel.hpp"

namespace aeic {

// Everything a preset or custom run needs. channel.m and channel's (n, k)
// follow ae; channel.ebn0_db is swept over ebn0_grid_db.
struct ExperimentConfig {
    std::string preset = "custom";  // fig2..fig6 or custom
    AeConfig ae;
    ChannelSpec channel;
    AdlConfig adl;
    std::vector<double> ebn0_grid_db;
    std::optional<double> alpha_train;
    std::vector<double> alpha_eval_list;
    std::uint64_t symbols_per_point = 200000;
    std::uint64_t master_seed = 1;
    std::string out_path = "out";
    int jobs = 1;
};

// Preset defaults (fig2..fig6, or a bare custom config). Unknown name throws.
ExperimentConfig default_config(const std::string& preset);

// Plain-text key=value overlay (# comments, blank lines ignored). Unknown
// keys throw; CLI flags are applied on top by the caller.
void apply_config_file(ExperimentConfig& config, const std::string& path);
void apply_config_line(ExperimentConfig& config, const std::string& line);

// One row of the unified results schema. Optional fields print as empty.
struct CsvRow {
    std::string experiment;
    std::optional<double> alpha_train;
    std::optional<double> alpha_eval;
    std::optional<double> alpha_predicted;
    double ebn0_db = 0.0;
    double ser = 0.0;
    double ber = 0.0;
    std::uint64_t n_symbols = 0;
    std::string regime;
    std::uint64_t seed = 0;
};

// Exact header the CSV files carry.
std::string csv_header();
std::string format_csv_row(const CsvRow& row);
// Stable shortest-ish float formatting (%.10g) shared by CSV and plot files.
std::string format_double(double value);

struct PresetOutput {
    std::vector<std::string> files;  // paths written, in emission order
    std::vector<CsvRow> rows;        // contents of the main CSV
};

// Runs the configured preset and writes <preset>.csv, per-curve .dat plot
// files, an index file, and (fig5/fig6) reward-table CSVs under out_path.
PresetOutput run_preset(const ExperimentConfig& config);

}  // namespace aeic
