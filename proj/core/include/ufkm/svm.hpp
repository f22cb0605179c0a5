#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ufkm/matrix.hpp"

namespace ufkm {

/// One-vs-all linear classifier. Row c of `weights` is the (d+1)-vector for
/// class c; the last entry is the bias, acting on a constant-1 augmented
/// feature, and is regularized together with the weights.
struct SvmModel {
    std::size_t classes = 0;
    std::size_t dim = 0;      // feature dimension d (weights are d+1 wide)
    DenseMatrix weights;      // classes x (d+1)
    double lambda = 1.0;
};

struct ObjectiveValue {
    double value = 0.0;
    std::vector<double> gradient;
};

using ObjectiveFn = std::function<ObjectiveValue(const std::vector<double>&)>;

/// J(w) = lambda*||w||^2 + sum_i max(0, 1 - y_i * w.x~_i)^2 over 1-augmented
/// features, with its exact (C^1) gradient.
ObjectiveValue quadratic_hinge_objective(const std::vector<double>& w,
                                         const DenseMatrix& features,
                                         const std::vector<int>& binary_labels, double lambda);

struct LbfgsOptions {
    std::size_t max_iters = 200;
    std::size_t memory = 10;
    double step_init = 0.1;     // trial step of the first (gradient) iteration
    double grad_tol = 1e-6;     // stop when ||grad||_inf drops below this
};

struct LbfgsResult {
    std::vector<double> w;
    double value = 0.0;
    std::size_t iterations = 0;
};

/// Two-loop-recursion LBFGS with Armijo backtracking (c1 = 1e-4, factor 0.5).
/// The first line search starts at step_init; once curvature pairs exist the
/// trial step is 1. Accepted iterates are monotone non-increasing; a
/// non-finite trial aborts back to the last good iterate.
LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, std::vector<double> w0,
                           const LbfgsOptions& opts = {});

/// C independent binary problems (class c vs rest), each solved from w0 = 0.
/// A class absent from `labels` is fit against all-negative data (warned).
SvmModel fit_one_vs_all(const DenseMatrix& features, const std::vector<std::size_t>& labels,
                        std::size_t classes, double lambda, const LbfgsOptions& opts = {});

/// Raw margins x~ W^T, shape N x classes. No squashing.
DenseMatrix decision_scores(const SvmModel& model, const DenseMatrix& features);

/// Row-wise argmax of decision scores; ties resolve to the lowest class.
std::vector<std::size_t> predict(const SvmModel& model, const DenseMatrix& features);

std::vector<std::size_t> argmax_rows(const DenseMatrix& scores);

}  // namespace ufkm
