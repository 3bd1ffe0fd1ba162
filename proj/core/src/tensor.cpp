#include "aeic/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace aeic {

void Tensor::alloc_grad() {
    grad.assign(v.size(), 0.0);
}

bool Tensor::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

namespace {

void check_matmul(const Tensor& a, const Tensor& b, std::size_t a_inner,
                  std::size_t b_inner, const char* op) {
    if (a_inner != b_inner) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                    a.shape_str() + " vs " + b.shape_str() + ")");
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matmul(a, b, a.cols, b.rows, "matmul");
    Tensor c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.v[i * a.cols];
        double* crow = &c.v[i * c.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &b.v[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
    check_matmul(a, b, a.rows, b.rows, "matmul_at_b");
    Tensor c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = &a.v[k * a.cols];
        const double* brow = &b.v[k * b.cols];
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = &c.v[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
    check_matmul(a, b, a.cols, b.cols, "matmul_a_bt");
    Tensor c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.v[i * a.cols];
        double* crow = &c.v[i * c.cols];
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = &b.v[j * b.cols];
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
    return c;
}

void add_column_inplace(Tensor& x, const Tensor& column) {
    if (column.rows != x.rows || column.cols != 1) {
        throw std::invalid_argument("add_column_inplace: shape mismatch (" +
                                    x.shape_str() + " vs " + column.shape_str() + ")");
    }
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double b = column.v[i];
        double* row = &x.v[i * x.cols];
        for (std::size_t j = 0; j < x.cols; ++j) row[j] += b;
    }
}

Tensor row_sums(const Tensor& x) {
    Tensor s(x.rows, 1);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* row = &x.v[i * x.cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) acc += row[j];
        s.v[i] = acc;
    }
    return s;
}

}  // namespace aeic
