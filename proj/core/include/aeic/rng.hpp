#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace aeic {

// Deterministic random stream built on std::mt19937_64, whose output
// sequence is fixed by the C++ standard, so identically seeded streams
// reproduce bit-for-bit across platforms and compilers.
//
// Uniform doubles take the top 53 bits of the raw output; normals come
// from the Box-Muller transform on those uniforms rather than
// std::normal_distribution, whose algorithm is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : gen_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; generates pairs, caches the spare.
    double normal();

    // Uniform integer in [0, n) by masked rejection (unbiased).
    std::size_t uniform_index(std::size_t n);

private:
    std::mt19937_64 gen_;
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream seed derived from a master seed and a textual label (FNV-1a over
// the label, mixed with the master through splitmix64). Same inputs give
// the same stream in every process; different labels give statistically
// independent streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

RngStream seed_stream(std::uint64_t master_seed, std::string_view label);

// One stream per label. Throws std::invalid_argument on duplicate labels.
std::vector<RngStream> seed_streams(std::uint64_t master_seed,
                                    const std::vector<std::string>& labels);

}  // namespace aeic
