#pragma once

#include <cstddef>
#include <vector>

#include "ufkm/matrix.hpp"

namespace ufkm {

/// PCA whitening transform fitted on a feature matrix. Column j of
/// `projection` is the j-th principal direction scaled by
/// (eigenvalue_j + epsilon)^(-1/2), so applying the model leaves the fit
/// data with per-dimension variance ~1 and cross-covariance ~0.
struct WhiteningModel {
    std::vector<double> mean;         // d
    DenseMatrix projection;           // d x p
    std::vector<double> eigenvalues;  // p, descending, clamped at 0
    double epsilon = 0.0;
};

/// Fit on N x d features. Covariance uses the population (1/N) form.
/// out_dims must lie in [1, min(d, N-1)].
WhiteningModel fit_whitening(const DenseMatrix& features, std::size_t out_dims, double epsilon);

/// (features - mean) * projection, shape N x p.
DenseMatrix apply_whitening(const WhiteningModel& model, const DenseMatrix& features);

struct L2NormalizeResult {
    DenseMatrix features;
    std::size_t zero_rows = 0;  // rows left untouched because their norm is 0
};

/// Scale each nonzero row to unit Euclidean norm.
L2NormalizeResult l2_normalize(const DenseMatrix& features);

}  // namespace ufkm
