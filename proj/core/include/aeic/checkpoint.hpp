#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "aeic/autoencoder.hpp"

namespace aeic {

// Malformed checkpoint data; byte_offset points at the first offending byte.
struct CheckpointError : std::runtime_error {
    CheckpointError(const std::string& message, std::size_t offset)
        : std::runtime_error(message + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

// Checkpoint layout, all multi-byte floats little-endian:
//   AEMODEL v1 n=<n> k=<k> layers=<count>\n
//   dense <in> <out> <activation>\n        (one line per layer, transmitter
//                                           layers first, then receiver)
//   <raw float64 weights row-major, then biases, per layer in line order>
// Loading is strict: wrong magic, unknown version, architecture mismatch,
// truncation, and trailing bytes all raise CheckpointError.
void write_checkpoint(const AeModel& model, std::ostream& out);
AeModel read_checkpoint(std::istream& in);

void save_checkpoint(const AeModel& model, const std::string& path);
AeModel load_checkpoint(const std::string& path);

// Channel-environment sidecar: the interferers' codebooks a coupled-trained
// model was fitted against (TrainResult::interferer_codebooks). Layout:
//   AEENV v1 m=<users> n=<n> k=<k>\n
//   <raw float64 little-endian, m-1 codebooks, each (2n x 2^k) row-major>
// Loading applies the same strictness rules as checkpoints.
void write_environment(std::span<const Tensor> interferer_codebooks, std::size_t n,
                       std::size_t k, std::ostream& out);
std::vector<Tensor> read_environment(std::istream& in);

void save_environment(std::span<const Tensor> interferer_codebooks, std::size_t n,
                      std::size_t k, const std::string& path);
std::vector<Tensor> load_environment(const std::string& path);

}  // namespace aeic
