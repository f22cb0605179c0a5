#pragma once

#include <vector>

#include "ufkm/matrix.hpp"

namespace ufkm {

struct EighResult {
    std::vector<double> eigenvalues;  // descending
    DenseMatrix eigenvectors;         // column j pairs with eigenvalues[j]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Input must be
/// square, symmetric within 1e-9 relative, and of dimension <= 4096.
/// Sweeps until the off-diagonal Frobenius norm drops below 1e-12 relative
/// to the matrix scale, or 100 sweeps.
EighResult eigh_symmetric(const DenseMatrix& a);

}  // namespace ufkm
