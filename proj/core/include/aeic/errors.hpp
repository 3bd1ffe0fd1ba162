#pragma once

#include <stdexcept>

namespace aeic {

// Raised when a computation hits non-finite values: training divergence,
// NaN gradients, degenerate inputs that cannot be normalized. The CLI maps
// this to exit code 2; everything else maps to 1.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace aeic
