#include "ufkm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>

#include "ufkm/error.hpp"

namespace ufkm {

ObjectiveValue quadratic_hinge_objective(const std::vector<double>& w,
                                         const DenseMatrix& features,
                                         const std::vector<int>& binary_labels, double lambda) {
    const std::size_t d = features.cols;
    if (w.size() != d + 1)
        throw ShapeError("quadratic_hinge_objective: weight length must be d+1");
    if (binary_labels.size() != features.rows)
        throw ShapeError("quadratic_hinge_objective: label count mismatch");
    if (lambda <= 0.0) throw ConfigError("quadratic_hinge_objective: lambda must be > 0");

    ObjectiveValue out;
    out.gradient.assign(d + 1, 0.0);
    double value = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* x = features.row_ptr(i);
        const double y = binary_labels[i] > 0 ? 1.0 : -1.0;
        double score = w[d];  // bias via the constant-1 augmentation
        for (std::size_t j = 0; j < d; ++j) score += w[j] * x[j];
        const double margin = 1.0 - y * score;
        if (margin > 0.0) {
            value += margin * margin;
            const double coeff = -2.0 * margin * y;
            for (std::size_t j = 0; j < d; ++j) out.gradient[j] += coeff * x[j];
            out.gradient[d] += coeff;
        }
    }
    for (std::size_t j = 0; j <= d; ++j) {
        value += lambda * w[j] * w[j];
        out.gradient[j] += 2.0 * lambda * w[j];
    }
    out.value = value;
    return out;
}

namespace {

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, std::vector<double> w0,
                           const LbfgsOptions& opts) {
    const std::size_t n = w0.size();
    ObjectiveValue cur = objective(w0);
    if (!std::isfinite(cur.value)) throw NumericError("lbfgs: objective not finite at w0");
    for (double g : cur.gradient)
        if (!std::isfinite(g)) throw NumericError("lbfgs: gradient not finite at w0");

    LbfgsResult result;
    result.w = std::move(w0);
    result.value = cur.value;

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> history;

    for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
        if (inf_norm(cur.gradient) < opts.grad_tol) break;
        result.iterations = iter + 1;

        // Two-loop recursion for the search direction.
        std::vector<double> q = cur.gradient;
        std::vector<double> alpha(history.size());
        for (std::size_t h = history.size(); h > 0; --h) {
            const Pair& p = history[h - 1];
            alpha[h - 1] = p.rho * dot(p.s, q);
            for (std::size_t i = 0; i < n; ++i) q[i] -= alpha[h - 1] * p.y[i];
        }
        if (!history.empty()) {
            const Pair& last = history.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& v : q) v *= gamma;
        }
        for (std::size_t h = 0; h < history.size(); ++h) {
            const Pair& p = history[h];
            const double beta = p.rho * dot(p.y, q);
            for (std::size_t i = 0; i < n; ++i) q[i] += (alpha[h] - beta) * p.s[i];
        }
        std::vector<double> dir(n);
        for (std::size_t i = 0; i < n; ++i) dir[i] = -q[i];

        double dir_dot_grad = dot(dir, cur.gradient);
        if (dir_dot_grad >= 0.0) {  // not a descent direction, fall back to steepest
            for (std::size_t i = 0; i < n; ++i) dir[i] = -cur.gradient[i];
            dir_dot_grad = -dot(cur.gradient, cur.gradient);
        }

        // Armijo backtracking.
        const double c1 = 1e-4;
        double step = history.empty() ? opts.step_init : 1.0;
        ObjectiveValue next;
        std::vector<double> w_next(n);
        bool accepted = false;
        while (step > 1e-20) {
            for (std::size_t i = 0; i < n; ++i) w_next[i] = result.w[i] + step * dir[i];
            next = objective(w_next);
            if (std::isfinite(next.value) &&
                next.value <= result.value + c1 * step * dir_dot_grad) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // line search exhausted: keep the last good iterate

        Pair pair;
        pair.s.resize(n);
        pair.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = w_next[i] - result.w[i];
            pair.y[i] = next.gradient[i] - cur.gradient[i];
        }
        const double sy = dot(pair.s, pair.y);
        if (sy > 1e-12) {  // curvature condition; skip degenerate pairs
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (history.size() > opts.memory) history.pop_front();
        }

        result.w = std::move(w_next);
        result.value = next.value;
        cur = std::move(next);
    }
    return result;
}

SvmModel fit_one_vs_all(const DenseMatrix& features, const std::vector<std::size_t>& labels,
                        std::size_t classes, double lambda, const LbfgsOptions& opts) {
    if (labels.size() != features.rows)
        throw ShapeError("fit_one_vs_all: label count does not match samples");
    if (features.rows < 2) throw ConfigError("fit_one_vs_all: need at least 2 samples");
    if (classes == 0) throw ConfigError("fit_one_vs_all: need at least 1 class");
    for (std::size_t lab : labels)
        if (lab >= classes) throw ConfigError("fit_one_vs_all: label out of range");

    SvmModel model;
    model.classes = classes;
    model.dim = features.cols;
    model.lambda = lambda;
    model.weights = DenseMatrix(classes, features.cols + 1);

    std::vector<int> binary(labels.size());
    for (std::size_t c = 0; c < classes; ++c) {
        bool present = false;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            binary[i] = labels[i] == c ? 1 : -1;
            present |= binary[i] == 1;
        }
        if (!present)
            std::cerr << "[ufkm] warning: class " << c
                      << " absent from training labels, fitting against all-negative data\n";
        const ObjectiveFn obj = [&](const std::vector<double>& w) {
            return quadratic_hinge_objective(w, features, binary, lambda);
        };
        LbfgsResult fit = lbfgs_minimize(obj, std::vector<double>(features.cols + 1, 0.0), opts);
        for (std::size_t j = 0; j <= features.cols; ++j) model.weights.at(c, j) = fit.w[j];
    }
    return model;
}

DenseMatrix decision_scores(const SvmModel& model, const DenseMatrix& features) {
    if (features.cols != model.dim)
        throw ShapeError("decision_scores: feature dimension does not match model");
    DenseMatrix scores(features.rows, model.classes);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* x = features.row_ptr(i);
        double* srow = scores.row_ptr(i);
        for (std::size_t c = 0; c < model.classes; ++c) {
            const double* w = model.weights.row_ptr(c);
            double acc = w[model.dim];
            for (std::size_t j = 0; j < model.dim; ++j) acc += w[j] * x[j];
            srow[c] = acc;
        }
    }
    return scores;
}

std::vector<std::size_t> argmax_rows(const DenseMatrix& scores) {
    std::vector<std::size_t> out(scores.rows);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        const double* row = scores.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < scores.cols; ++c)
            if (row[c] > row[best]) best = c;
        out[i] = best;
    }
    return out;
}

std::vector<std::size_t> predict(const SvmModel& model, const DenseMatrix& features) {
    return argmax_rows(decision_scores(model, features));
}

}  // namespace ufkm
