#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeic/autoencoder.hpp"
#include "aeic/checkpoint.hpp"
#include "aeic/experiment.hpp"
#include "aeic/rng.hpp"

using namespace aeic;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "aeic-harness-tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool models_identical(const AeModel& a, const AeModel& b) {
    if (a.n != b.n || a.k != b.k) return false;
    auto stacks_equal = [](const LayerStack& x, const LayerStack& y) {
        if (x.depth() != y.depth()) return false;
        for (std::size_t li = 0; li < x.depth(); ++li) {
            if (x.layer(li).weights().v != y.layer(li).weights().v) return false;
            if (x.layer(li).bias().v != y.layer(li).bias().v) return false;
        }
        return true;
    };
    return stacks_equal(a.transmitter, b.transmitter) &&
           stacks_equal(a.receiver, b.receiver);
}

std::string checkpoint_bytes(const AeModel& model) {
    std::ostringstream out(std::ios::binary);
    write_checkpoint(model, out);
    return out.str();
}

}  // namespace

TEST_CASE("checkpoint: stream round-trip preserves every weight bit") {
    RngStream rng(41);
    const AeModel model = make_ae_model(4, 4, rng);
    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    write_checkpoint(model, buffer);
    const AeModel loaded = read_checkpoint(buffer);

    CHECK(loaded.n == 4);
    CHECK(loaded.k == 4);
    CHECK(models_identical(model, loaded));

    const Tensor book_a = codebook(model);
    const Tensor book_b = codebook(loaded);
    for (std::size_t i = 0; i < book_a.size(); ++i) {
        CHECK(book_a.v[i] == book_b.v[i]);
    }
}

TEST_CASE("checkpoint: exact byte layout of the (4,4) format") {
    RngStream rng(42);
    const AeModel model = make_ae_model(4, 4, rng);
    const std::string bytes = checkpoint_bytes(model);

    const std::string header =
        "AEMODEL v1 n=4 k=4 layers=4\n"
        "dense 16 16 elu\n"
        "dense 16 8 linear\n"
        "dense 8 16 relu\n"
        "dense 16 16 softmax\n";
    REQUIRE(bytes.size() > header.size());
    CHECK(bytes.substr(0, header.size()) == header);
    CHECK(bytes.size() == header.size() + 824 * 8);

    // First payload float64 is transmitter.0.weights[0], little-endian.
    const double w0 = model.transmitter.layer(0).weights().v[0];
    const std::uint64_t pattern = std::bit_cast<std::uint64_t>(w0);
    for (std::size_t byte = 0; byte < 8; ++byte) {
        const auto expected =
            static_cast<unsigned char>((pattern >> (8 * byte)) & 0xff);
        CHECK(static_cast<unsigned char>(bytes[header.size() + byte]) == expected);
    }
}

TEST_CASE("checkpoint: non-default (n, k) shapes round-trip") {
    RngStream rng(43);
    const AeModel model = make_ae_model(2, 3, rng);
    const std::string bytes = checkpoint_bytes(model);
    const std::string header =
        "AEMODEL v1 n=2 k=3 layers=4\n"
        "dense 8 8 elu\n"
        "dense 8 4 linear\n"
        "dense 4 8 relu\n"
        "dense 8 8 softmax\n";
    CHECK(bytes.substr(0, header.size()) == header);

    std::istringstream in(bytes, std::ios::binary);
    const AeModel loaded = read_checkpoint(in);
    CHECK(loaded.n == 2);
    CHECK(loaded.k == 3);
    CHECK(models_identical(model, loaded));
}

TEST_CASE("checkpoint: file save/load round-trip") {
    RngStream rng(44);
    const AeModel model = make_ae_model(4, 4, rng);
    const std::string path = (test_dir() / "roundtrip.aemodel").string();
    save_checkpoint(model, path);
    const AeModel loaded = load_checkpoint(path);
    CHECK(models_identical(model, loaded));
    CHECK(fs::file_size(path) == 98 + 824 * 8);

    CHECK_THROWS_AS(load_checkpoint((test_dir() / "missing.aemodel").string()),
                    std::runtime_error);
}

TEST_CASE("checkpoint: strict rejection with byte offsets") {
    RngStream rng(45);
    const AeModel model = make_ae_model(4, 4, rng);
    const std::string good = checkpoint_bytes(model);

    auto parse = [](const std::string& bytes) {
        std::istringstream in(bytes, std::ios::binary);
        return read_checkpoint(in);
    };

    SUBCASE("empty stream") {
        try {
            parse("");
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(e.byte_offset == 0);
            CHECK(std::string(e.what()).find("byte offset 0") != std::string::npos);
        }
    }
    SUBCASE("wrong magic") {
        std::string bad = good;
        bad[0] = 'X';
        try {
            parse(bad);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(e.byte_offset == 0);
            CHECK(std::string(e.what()).find("AEMODEL") != std::string::npos);
        }
    }
    SUBCASE("unsupported version") {
        std::string bad = good;
        bad[9] = '2';  // "v1" -> "v2"
        CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("version"),
                             CheckpointError);
    }
    SUBCASE("truncated weights name the offset") {
        const std::string bad = good.substr(0, good.size() - 8);
        try {
            parse(bad);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
            CHECK(e.byte_offset > 98);
        }
    }
    SUBCASE("trailing bytes rejected") {
        CHECK_THROWS_WITH_AS(parse(good + "x"), doctest::Contains("trailing"),
                             CheckpointError);
    }
    SUBCASE("layer count mismatch") {
        std::string bad = good;
        const auto pos = bad.find("layers=4");
        bad[pos + 7] = '3';
        CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("declares 3 layers"),
                             CheckpointError);
    }
    SUBCASE("layer descriptor mismatch") {
        std::string bad = good;
        const auto pos = bad.find("dense 16 8 linear");
        bad[pos + 9] = '9';  // dense 16 9 linear
        CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("does not match"),
                             CheckpointError);
    }
}

TEST_CASE("environment sidecar: round-trip and exact byte layout") {
    RngStream rng(46);
    const AeModel a = make_ae_model(4, 4, rng);
    const AeModel b = make_ae_model(4, 4, rng);
    const std::vector<Tensor> books = {codebook(a), codebook(b)};

    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    write_environment(books, 4, 4, buffer);
    const std::string bytes = buffer.str();

    const std::string header = "AEENV v1 m=3 n=4 k=4\n";
    REQUIRE(bytes.size() == header.size() + 2 * 128 * 8);
    CHECK(bytes.substr(0, header.size()) == header);

    // First payload float64 is books[0](0, 0), little-endian.
    const std::uint64_t pattern = std::bit_cast<std::uint64_t>(books[0](0, 0));
    for (std::size_t byte = 0; byte < 8; ++byte) {
        const auto expected =
            static_cast<unsigned char>((pattern >> (8 * byte)) & 0xff);
        CHECK(static_cast<unsigned char>(bytes[header.size() + byte]) == expected);
    }

    const std::vector<Tensor> loaded = read_environment(buffer);
    REQUIRE(loaded.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(loaded[i].rows == 8);
        REQUIRE(loaded[i].cols == 16);
        CHECK(loaded[i].v == books[i].v);
    }
}

TEST_CASE("environment sidecar: file round-trip and strict rejection") {
    RngStream rng(47);
    const AeModel model = make_ae_model(4, 4, rng);
    const std::vector<Tensor> books = {codebook(model)};

    const std::string path = (test_dir() / "roundtrip.aeenv").string();
    save_environment(books, 4, 4, path);
    const std::vector<Tensor> loaded = load_environment(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].v == books[0].v);
    const std::string header = "AEENV v1 m=2 n=4 k=4\n";
    CHECK(fs::file_size(path) == header.size() + 128 * 8);

    std::ostringstream out(std::ios::binary);
    write_environment(books, 4, 4, out);
    const std::string good = out.str();

    auto parse = [](const std::string& s) {
        std::istringstream in(s, std::ios::binary);
        return read_environment(in);
    };

    CHECK_THROWS_AS(parse(""), CheckpointError);
    std::string magic = good;
    magic[0] = 'X';
    CHECK_THROWS_WITH_AS(parse(magic), doctest::Contains("AEENV"),
                         CheckpointError);
    std::string version = good;
    version[7] = '2';  // "v1" -> "v2"
    CHECK_THROWS_WITH_AS(parse(version), doctest::Contains("version"),
                         CheckpointError);
    CHECK_THROWS_WITH_AS(parse("AEENV v1 m=1 n=4 k=4\n"),
                         doctest::Contains("unusable"), CheckpointError);
    CHECK_THROWS_WITH_AS(parse(good.substr(0, good.size() - 5)),
                         doctest::Contains("truncated"), CheckpointError);
    CHECK_THROWS_WITH_AS(parse(good + "x"), doctest::Contains("trailing"),
                         CheckpointError);

    // The writer refuses codebooks whose shape disagrees with (n, k).
    std::ostringstream sink(std::ios::binary);
    CHECK_THROWS_AS(write_environment(books, 2, 4, sink), std::invalid_argument);
    CHECK_THROWS_AS(write_environment({}, 4, 4, sink), std::invalid_argument);

    CHECK_THROWS_AS(load_environment((test_dir() / "missing.aeenv").string()),
                    std::runtime_error);
}

TEST_CASE("csv schema: header and row formatting are frozen") {
    CHECK(csv_header() ==
          "experiment,alpha_train,alpha_eval,alpha_predicted,ebn0_db,ser,ber,"
          "n_symbols,regime,seed");

    CsvRow row;
    row.experiment = "fig5_true_alpha_1.5";
    row.alpha_train = 1.0;
    row.alpha_eval = 1.5;
    row.alpha_predicted = 1.45;
    row.ebn0_db = 7.0;
    row.ser = 0.00125;
    row.ber = 0.0003125;
    row.n_symbols = 200000;
    row.regime = "strong";
    row.seed = 42;
    CHECK(format_csv_row(row) ==
          "fig5_true_alpha_1.5,1,1.5,1.45,7,0.00125,0.0003125,200000,strong,42");

    CsvRow blind;
    blind.experiment = "fig2_no_interference";
    blind.ebn0_db = -2.0;
    blind.ser = 0.5;
    blind.ber = 0.25;
    blind.n_symbols = 1000;
    blind.seed = 1;
    CHECK(format_csv_row(blind) == "fig2_no_interference,,,,-2,0.5,0.25,1000,,1");
}

TEST_CASE("format_double: %.10g semantics") {
    CHECK(format_double(7.0) == "7");
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(-3.5) == "-3.5");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1e-5) == "1e-05");
    CHECK(format_double(0.099763115748444) == "0.09976311575");
    CHECK(format_double(2.25) == "2.25");
}

TEST_CASE("default_config: preset tables") {
    const ExperimentConfig fig2 = default_config("fig2");
    CHECK(fig2.preset == "fig2");
    REQUIRE(fig2.alpha_train.has_value());
    CHECK(*fig2.alpha_train == 0.2);
    CHECK(fig2.alpha_eval_list == std::vector<double>{0.2, 0.4, 0.6, 0.8});
    REQUIRE(fig2.ebn0_grid_db.size() == 13);
    CHECK(fig2.ebn0_grid_db.front() == -2.0);
    CHECK(fig2.ebn0_grid_db.back() == 10.0);
    CHECK(fig2.channel.ebn0_db == 7.0);
    CHECK(fig2.ae.train_steps == 10000);
    CHECK(fig2.symbols_per_point == 200000);

    const ExperimentConfig fig3 = default_config("fig3");
    CHECK(*fig3.alpha_train == 0.5);
    CHECK(fig3.alpha_eval_list == std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5});

    const ExperimentConfig fig4 = default_config("fig4");
    CHECK(*fig4.alpha_train == 2.0);
    CHECK(fig4.alpha_eval_list == std::vector<double>{2.0, 2.25, 2.5});
    CHECK(fig4.ae.train_steps == 15000);

    const ExperimentConfig fig5 = default_config("fig5");
    CHECK_FALSE(fig5.alpha_train.has_value());
    CHECK(fig5.alpha_eval_list == std::vector<double>{1.5, 2.0});
    CHECK(fig5.ebn0_grid_db == std::vector<double>{7.0});
    CHECK(fig5.adl.grid_max == 3.0);
    CHECK(fig5.ae.train_steps == 15000);

    const ExperimentConfig fig6 = default_config("fig6");
    CHECK_FALSE(fig6.alpha_train.has_value());
    CHECK(fig6.alpha_eval_list == std::vector<double>{1.5, 2.0});
    CHECK(fig6.adl.grid_max == 4.5);
    CHECK(fig6.adl.adapt_steps == 1200);
    CHECK(fig6.adl.final_adapt_steps == 4000);
    CHECK(fig6.ae.train_steps == 15000);

    const ExperimentConfig custom = default_config("custom");
    CHECK(custom.alpha_eval_list.empty());
    CHECK_FALSE(custom.alpha_train.has_value());

    CHECK_THROWS_WITH_AS(default_config("fig7"), doctest::Contains("fig7"),
                         std::invalid_argument);
}

TEST_CASE("apply_config_line: every key routes to the right field") {
    ExperimentConfig config = default_config("custom");
    apply_config_line(config, "n=2");
    apply_config_line(config, "k=3");
    apply_config_line(config, "train_ebn0_db=5.5");
    apply_config_line(config, "learning_rate=0.01");
    apply_config_line(config, "batch_size=64");
    apply_config_line(config, "train_steps=123");
    apply_config_line(config, "alpha_train=0.7");
    apply_config_line(config, "m_users=3");
    apply_config_line(config, "ebn0_grid_db=0,2,4");
    apply_config_line(config, "alpha_eval_list=1.5,2");
    apply_config_line(config, "symbols_per_point=5000");
    apply_config_line(config, "master_seed=99");
    apply_config_line(config, "out_path=results/run1");
    apply_config_line(config, "jobs=4");
    apply_config_line(config, "adl_grid_max=4.5");
    apply_config_line(config, "adl_confidence_fraction=0.3");
    apply_config_line(config, "adl_group_count=10");
    apply_config_line(config, "adl_pilot_ratio=0.02");
    apply_config_line(config, "adl_adapt_steps=500");
    apply_config_line(config, "adl_final_adapt_steps=700");
    apply_config_line(config, "  # a comment");
    apply_config_line(config, "");

    CHECK(config.ae.n == 2);
    CHECK(config.ae.k == 3);
    CHECK(config.ae.train_ebn0_db == 5.5);
    CHECK(config.ae.learning_rate == 0.01);
    CHECK(config.ae.batch_size == 64);
    CHECK(config.ae.train_steps == 123);
    REQUIRE(config.alpha_train.has_value());
    CHECK(*config.alpha_train == 0.7);
    CHECK(config.ae.m_users == 3);
    CHECK(config.adl.m_users == 3);
    CHECK(config.channel.m == 3);
    CHECK(config.ebn0_grid_db == std::vector<double>{0.0, 2.0, 4.0});
    CHECK(config.alpha_eval_list == std::vector<double>{1.5, 2.0});
    CHECK(config.symbols_per_point == 5000);
    CHECK(config.master_seed == 99);
    CHECK(config.out_path == "results/run1");
    CHECK(config.jobs == 4);
    CHECK(config.adl.grid_max == 4.5);
    CHECK(config.adl.confidence_fraction == 0.3);
    CHECK(config.adl.group_count == 10);
    CHECK(config.adl.pilot_ratio == 0.02);
    CHECK(config.adl.adapt_steps == 500);
    CHECK(config.adl.final_adapt_steps == 700);

    apply_config_line(config, "alpha_train=none");
    CHECK_FALSE(config.alpha_train.has_value());

    CHECK_THROWS_WITH_AS(apply_config_line(config, "frobnicate=1"),
                         doctest::Contains("frobnicate"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_config_line(config, "no equals sign"),
                         doctest::Contains("'='"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(apply_config_line(config, "train_steps=abc"),
                         doctest::Contains("train_steps"), std::invalid_argument);
}

TEST_CASE("apply_config_file: overlay from disk") {
    const fs::path path = test_dir() / "overlay.cfg";
    {
        std::ofstream out(path);
        out << "# overlay\n"
            << "master_seed = 1234\n"
            << "\n"
            << "symbols_per_point=777\n";
    }
    ExperimentConfig config = default_config("custom");
    apply_config_file(config, path.string());
    CHECK(config.master_seed == 1234);
    CHECK(config.symbols_per_point == 777);

    CHECK_THROWS_AS(
        apply_config_file(config, (test_dir() / "absent.cfg").string()),
        std::invalid_argument);
}

TEST_CASE("run_preset: tiny custom run is reproducible byte for byte") {
    ExperimentConfig config = default_config("custom");
    config.ae.train_steps = 250;
    config.symbols_per_point = 2500;
    config.ebn0_grid_db = {4.0, 8.0};
    config.alpha_train = 0.3;
    config.alpha_eval_list = {0.3};
    config.master_seed = 7;

    config.out_path = (test_dir() / "custom_a").string();
    const PresetOutput first = run_preset(config);

    REQUIRE(first.rows.size() == 2);
    for (const CsvRow& row : first.rows) {
        CHECK(row.experiment == "custom_eval_alpha_0.3");
        CHECK(row.regime == "noisy");
        CHECK(row.n_symbols == 2500);
        CHECK(row.seed == 7);
        CHECK(row.ser >= 0.0);
        CHECK(row.ser <= 1.0);
    }
    CHECK(first.rows[0].ebn0_db == 4.0);
    CHECK(first.rows[1].ebn0_db == 8.0);

    REQUIRE(first.files.size() == 3);
    CHECK(first.files[0] ==
          (fs::path(config.out_path) / "custom.csv").string());
    for (const std::string& file : first.files) CHECK(fs::exists(file));

    // Main CSV agrees with the returned rows.
    std::string expected_csv = csv_header() + "\n";
    for (const CsvRow& row : first.rows) expected_csv += format_csv_row(row) + "\n";
    CHECK(slurp(first.files[0]) == expected_csv);

    // The .dat plot file carries (ebn0, ser) pairs.
    const std::string dat = slurp(first.files[1]);
    std::string expected_dat = "# custom eval_alpha_0.3: ebn0_db ser\n";
    expected_dat += "4 " + format_double(first.rows[0].ser) + "\n";
    expected_dat += "8 " + format_double(first.rows[1].ser) + "\n";
    CHECK(dat == expected_dat);

    // Second run, fresh directory: byte-identical CSV.
    config.out_path = (test_dir() / "custom_b").string();
    const PresetOutput second = run_preset(config);
    CHECK(slurp(second.files[0]) == expected_csv);

    // Worker count must not leak into the results.
    config.out_path = (test_dir() / "custom_c").string();
    config.jobs = 2;
    const PresetOutput threaded = run_preset(config);
    CHECK(slurp(threaded.files[0]) == expected_csv);
}

TEST_CASE("run_preset: blind custom config sweeps the no-interference curve") {
    ExperimentConfig config = default_config("custom");
    config.ae.train_steps = 150;
    config.symbols_per_point = 1000;
    config.ebn0_grid_db = {7.0};
    config.master_seed = 3;
    config.out_path = (test_dir() / "custom_blind").string();

    const PresetOutput output = run_preset(config);
    REQUIRE(output.rows.size() == 1);
    CHECK(output.rows[0].experiment == "custom_no_interference");
    CHECK_FALSE(output.rows[0].alpha_train.has_value());
    CHECK_FALSE(output.rows[0].alpha_eval.has_value());
    CHECK(output.rows[0].regime.empty());
    const std::string csv = slurp(output.files[0]);
    CHECK(csv.find("custom_no_interference,,,,7,") != std::string::npos);
}

TEST_CASE("run_preset: reduced fig5 trains at the probed coupling per curve") {
    ExperimentConfig config = default_config("fig5");
    config.ae.train_steps = 300;
    config.symbols_per_point = 4000;
    config.alpha_eval_list = {1.5};
    config.adl.grid_min = 1.0;
    config.adl.grid_max = 2.0;
    config.adl.grid_step = 0.5;
    config.adl.adapt_steps = 120;
    config.adl.final_adapt_steps = 120;
    config.master_seed = 11;
    config.out_path = (test_dir() / "fig5_smoke").string();

    const PresetOutput output = run_preset(config);
    REQUIRE(output.rows.size() == 1);
    const CsvRow& row = output.rows[0];
    CHECK(row.experiment == "fig5_true_alpha_1.5");
    REQUIRE(row.alpha_train.has_value());
    CHECK(*row.alpha_train == 1.5);
    REQUIRE(row.alpha_eval.has_value());
    CHECK(*row.alpha_eval == 1.5);
    REQUIRE(row.alpha_predicted.has_value());
    CHECK(*row.alpha_predicted >= 1.0);
    CHECK(*row.alpha_predicted <= 2.0);
    CHECK(row.regime == "strong");

    REQUIRE(output.files.size() == 4);
    CHECK(fs::path(output.files[1]).filename() == "fig5_reward_alpha_1.5.csv");
    const std::string reward_csv = slurp(output.files[1]);
    CHECK(reward_csv.rfind("alpha_candidate,raw_reward,normalized_reward\n", 0) ==
          0);
    CHECK(std::count(reward_csv.begin(), reward_csv.end(), '\n') == 4);

    CHECK(fs::path(output.files[2]).filename() == "fig5_reward_alpha_1.5.dat");
    const std::string dat = slurp(output.files[2]);
    CHECK(dat.rfind("# fig5 reward_alpha_1.5: alpha_candidate normalized_reward\n",
                    0) == 0);
}
