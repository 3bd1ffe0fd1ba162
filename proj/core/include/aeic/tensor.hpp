#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace aeic {

// Dense 2-D array of doubles, row-major. Batches store one sample per
// column: a batch of B vectors of dimension d is a (d x B) tensor.
// Parameter tensors carry an optional gradient array of identical shape.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;     // rows * cols values, row-major
    std::vector<double> grad;  // empty, or same size as v

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    // Allocates (or clears to zero) the paired gradient array.
    void alloc_grad();
    bool has_grad() const { return !grad.empty(); }

    bool all_finite() const;
    std::string shape_str() const;
};

// c = a * b. Throws std::invalid_argument on inner-dimension mismatch,
// naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);

// c = a^T * b and c = a * b^T (used by backprop; avoids materializing
// transposes).
Tensor matmul_at_b(const Tensor& a, const Tensor& b);
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);

// Adds a (rows x 1) column vector to every column of x in place.
void add_column_inplace(Tensor& x, const Tensor& column);

// Sum over columns, returning a (rows x 1) tensor.
Tensor row_sums(const Tensor& x);

}  // namespace aeic
