#include "ufkm/eigh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ufkm/error.hpp"

namespace ufkm {

namespace {

double off_diagonal_frobenius(const DenseMatrix& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j)
            if (i != j) acc += m.at(i, j) * m.at(i, j);
    return std::sqrt(acc);
}

}  // namespace

EighResult eigh_symmetric(const DenseMatrix& a) {
    const std::size_t n = a.rows;
    if (a.rows != a.cols) throw ShapeError("eigh_symmetric: matrix is not square");
    if (n > 4096) throw ShapeError("eigh_symmetric: dimension exceeds 4096");
    if (n == 0) throw ShapeError("eigh_symmetric: empty matrix");

    double max_abs = 0.0;
    for (double v : a.values) max_abs = std::max(max_abs, std::abs(v));
    const double sym_tol = 1e-9 * std::max(1.0, max_abs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a.at(i, j) - a.at(j, i)) > sym_tol)
                throw ShapeError("eigh_symmetric: matrix is not symmetric");

    // Work on the symmetrized copy so tiny input asymmetry cannot bias sweeps.
    DenseMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s.at(i, j) = 0.5 * (a.at(i, j) + a.at(j, i));

    DenseMatrix v = DenseMatrix::identity(n);
    const double stop = 1e-12 * std::max(1.0, frobenius_norm(s));

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (off_diagonal_frobenius(s) <= stop) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double spq = s.at(p, q);
                if (spq == 0.0) continue;
                const double tau = (s.at(q, q) - s.at(p, p)) / (2.0 * spq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double sip = s.at(i, p);
                    const double siq = s.at(i, q);
                    s.at(i, p) = c * sip - sn * siq;
                    s.at(i, q) = sn * sip + c * siq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double spj = s.at(p, j);
                    const double sqj = s.at(q, j);
                    s.at(p, j) = c * spj - sn * sqj;
                    s.at(q, j) = sn * spj + c * sqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v.at(i, p);
                    const double viq = v.at(i, q);
                    v.at(i, p) = c * vip - sn * viq;
                    v.at(i, q) = sn * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return s.at(x, x) > s.at(y, y); });

    EighResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = s.at(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors.at(i, j) = v.at(i, order[j]);
    }
    return out;
}

}  // namespace ufkm
