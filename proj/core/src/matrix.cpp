#include "ufkm/matrix.hpp"

#include <cmath>
#include <utility>

#include "ufkm/error.hpp"

namespace ufkm {

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols)
        throw ShapeError("DenseMatrix: value count does not match rows*cols");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
    DenseMatrix c(a.rows, b.cols);
    // i-k-j loop order: contiguous inner accesses, and each output entry
    // accumulates over k ascending exactly like the textbook triple loop.
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols, m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
    return t;
}

double frobenius_norm(const DenseMatrix& m) {
    double acc = 0.0;
    for (double v : m.values) acc += v * v;
    return std::sqrt(acc);
}

bool all_finite(const DenseMatrix& m) {
    for (double v : m.values)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace ufkm
