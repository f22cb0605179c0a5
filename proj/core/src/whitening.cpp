#include "ufkm/whitening.hpp"

#include <algorithm>
#include <cmath>

#include "ufkm/eigh.hpp"
#include "ufkm/error.hpp"

namespace ufkm {

WhiteningModel fit_whitening(const DenseMatrix& features, std::size_t out_dims, double epsilon) {
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    if (n < 2) throw ConfigError("fit_whitening: need at least 2 samples");
    if (!all_finite(features)) throw NumericError("fit_whitening: non-finite feature entries");
    const std::size_t max_dims = std::min(d, n - 1);
    if (out_dims < 1 || out_dims > max_dims)
        throw ConfigError("fit_whitening: out_dims must lie in [1, min(d, N-1)]");

    WhiteningModel model;
    model.epsilon = epsilon;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = features.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += row[j];
    }
    for (double& m : model.mean) m /= static_cast<double>(n);

    DenseMatrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            centered.at(i, j) = features.at(i, j) - model.mean[j];

    DenseMatrix cov = matmul(transpose(centered), centered);
    for (double& v : cov.values) v /= static_cast<double>(n);

    const EighResult eig = eigh_symmetric(cov);

    model.eigenvalues.resize(out_dims);
    model.projection = DenseMatrix(d, out_dims);
    for (std::size_t j = 0; j < out_dims; ++j) {
        const double lambda = std::max(eig.eigenvalues[j], 0.0);
        model.eigenvalues[j] = lambda;
        const double damped = lambda + epsilon;
        if (damped <= 0.0)
            throw NumericError("fit_whitening: zero-variance direction with epsilon=0");
        const double scale = 1.0 / std::sqrt(damped);
        for (std::size_t i = 0; i < d; ++i)
            model.projection.at(i, j) = eig.eigenvectors.at(i, j) * scale;
    }
    return model;
}

DenseMatrix apply_whitening(const WhiteningModel& model, const DenseMatrix& features) {
    const std::size_t d = model.mean.size();
    if (features.cols != d)
        throw ShapeError("apply_whitening: feature dimension does not match model");
    DenseMatrix centered(features.rows, d);
    for (std::size_t i = 0; i < features.rows; ++i)
        for (std::size_t j = 0; j < d; ++j)
            centered.at(i, j) = features.at(i, j) - model.mean[j];
    return matmul(centered, model.projection);
}

L2NormalizeResult l2_normalize(const DenseMatrix& features) {
    if (!all_finite(features)) throw NumericError("l2_normalize: non-finite feature entries");
    L2NormalizeResult out;
    out.features = features;
    for (std::size_t i = 0; i < features.rows; ++i) {
        double* row = out.features.row_ptr(i);
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < features.cols; ++j) norm_sq += row[j] * row[j];
        if (norm_sq == 0.0) {
            ++out.zero_rows;
            continue;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < features.cols; ++j) row[j] *= inv;
    }
    return out;
}

}  // namespace ufkm
