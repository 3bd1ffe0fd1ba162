#include <benchmark/benchmark.h>

#include <optional>

#include "aeic/adl.hpp"
#include "aeic/autoencoder.hpp"
#include "aeic/channel.hpp"
#include "aeic/rng.hpp"

namespace {

using namespace aeic;

AeConfig small_config() {
    AeConfig config;
    config.train_steps = 64;
    return config;
}

ChannelSpec bench_spec() {
    ChannelSpec spec;
    spec.m = 2;
    spec.ebn0_db = 7.0;
    spec.n = 4;
    spec.k = 4;
    return spec;
}

const AeModel& bench_model() {
    static const AeModel model = [] {
        AeConfig config;
        config.train_steps = 2000;
        RngStream rng = seed_stream(1, "bench/model");
        return train_end_to_end(config, rng).model;
    }();
    return model;
}

void BM_TrainRun(benchmark::State& state) {
    const auto steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        RngStream rng = seed_stream(1, "bench/train");
        AeConfig config = small_config();
        config.train_steps = steps;
        const TrainResult result = train_end_to_end(config, rng);
        benchmark::DoNotOptimize(result.final_loss);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(steps));
}

void BM_EncodeDecode(benchmark::State& state) {
    const AeModel& model = bench_model();
    std::vector<double> scratch_a;
    std::vector<double> scratch_b;
    std::size_t message = 0;
    for (auto _ : state) {
        const std::vector<double> x = encode_message(model, message % 16);
        benchmark::DoNotOptimize(decode_argmax(model, x, scratch_a, scratch_b));
        ++message;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

void BM_EvaluateSerPoint(benchmark::State& state) {
    const AeModel& model = bench_model();
    const auto symbols = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        RngStream rng = seed_stream(1, "bench/eval");
        const SerPoint pt =
            evaluate_ser_point(model, bench_spec(), 0.5, symbols, rng);
        benchmark::DoNotOptimize(pt.ser);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(symbols));
}

void BM_AwgnBlock(benchmark::State& state) {
    RngStream rng = seed_stream(1, "bench/awgn");
    std::vector<double> block(static_cast<std::size_t>(state.range(0)), 0.5);
    for (auto _ : state) {
        add_awgn(block, 0.0997631157484440, rng);
        benchmark::DoNotOptimize(block.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            state.range(0));
}

BENCHMARK(BM_TrainRun)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncodeDecode);
BENCHMARK(BM_EvaluateSerPoint)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AwgnBlock)->Arg(8)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
