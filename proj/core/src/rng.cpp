#include "aeic/rng.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace aeic {

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

std::size_t RngStream::uniform_index(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    if (n == 1) return 0;
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const std::uint64_t x = gen_() & mask;
        if (x < n) return static_cast<std::size_t>(x);
    }
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) {
    return splitmix64(splitmix64(master_seed) ^ fnv1a(label));
}

RngStream seed_stream(std::uint64_t master_seed, std::string_view label) {
    return RngStream(derive_seed(master_seed, label));
}

std::vector<RngStream> seed_streams(std::uint64_t master_seed,
                                    const std::vector<std::string>& labels) {
    std::set<std::string_view> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l).second) {
            throw std::invalid_argument("seed_streams: duplicate label '" + l + "'");
        }
    }
    std::vector<RngStream> streams;
    streams.reserve(labels.size());
    for (const auto& l : labels) streams.push_back(seed_stream(master_seed, l));
    return streams;
}

}  // namespace aeic
