#pragma once

#include <cstddef>
#include <vector>

namespace ufkm {

/// Dense row-major matrix of 64-bit reals. The workhorse container for
/// feature matrices, dictionaries, covariances and score tables.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v);

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    double* row_ptr(std::size_t r) { return values.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return values.data() + r * cols; }

    static DenseMatrix identity(std::size_t n);
};

/// a * b with a fixed accumulation order (ascending inner index per entry).
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& m);

double frobenius_norm(const DenseMatrix& m);

bool all_finite(const DenseMatrix& m);

}  // namespace ufkm
