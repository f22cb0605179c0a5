#include "ufkm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "ufkm/eigh.hpp"
#include "ufkm/error.hpp"

namespace ufkm {

namespace {

void check_dims(const DenseMatrix& features, const Dictionary& dict) {
    if (features.cols != dict.dims)
        throw ShapeError("kmeans: feature dimension does not match dictionary");
}

std::vector<std::size_t> nonzero_rows(const DenseMatrix& features) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* row = features.row_ptr(i);
        for (std::size_t j = 0; j < features.cols; ++j) {
            if (row[j] != 0.0) {
                out.push_back(i);
                break;
            }
        }
    }
    return out;
}

void set_normalized_column(Dictionary& dict, std::size_t j, const double* v) {
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dict.dims; ++i) norm_sq += v[i] * v[i];
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < dict.dims; ++i) dict.columns.at(i, j) = v[i] * inv;
}

// Replaces column j with a normalized randomly chosen nonzero feature row
// (raw row in Euclidean mode).
void reseed_column(Dictionary& dict, std::size_t j, const DenseMatrix& features,
                   const std::vector<std::size_t>& candidates, Rng& rng, KmeansMode mode) {
    if (candidates.empty())
        throw NumericError("kmeans: all features are zero, cannot reseed centroid");
    const std::size_t row = candidates[rng.uniform_index(candidates.size())];
    if (mode == KmeansMode::SignedSpherical) {
        set_normalized_column(dict, j, features.row_ptr(row));
    } else {
        for (std::size_t i = 0; i < dict.dims; ++i)
            dict.columns.at(i, j) = features.at(row, i);
    }
}

double recompute_objective(const DenseMatrix& features, const Dictionary& dict,
                           const std::vector<std::size_t>& labels,
                           const std::vector<double>& coefficients) {
    double obj = 0.0;
    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* f = features.row_ptr(i);
        const std::size_t j = labels[i];
        const double c = coefficients[i];
        double acc = 0.0;
        for (std::size_t r = 0; r < features.cols; ++r) {
            const double diff = c * dict.columns.at(r, j) - f[r];
            acc += diff * diff;
        }
        obj += acc;
    }
    return obj;
}

}  // namespace

Dictionary init_centroids(std::size_t d, std::size_t k, Rng& rng) {
    if (d == 0 || k == 0) throw ConfigError("init_centroids: d and k must be >= 1");
    Dictionary dict;
    dict.dims = d;
    dict.clusters = k;
    dict.columns = DenseMatrix(d, k);
    std::vector<double> col(d);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < d; ++i) col[i] = rng.normal();
        set_normalized_column(dict, j, col.data());
    }
    return dict;
}

CodeAssignment assign_codes(const DenseMatrix& features, const Dictionary& dict,
                            KmeansMode mode) {
    check_dims(features, dict);
    const std::size_t n = features.rows;
    const std::size_t k = dict.clusters;

    CodeAssignment codes;
    codes.labels.resize(n);
    codes.coefficients.resize(n);

    if (mode == KmeansMode::SignedSpherical) {
        // dots = features * D gives every sample/centroid projection at once.
        const DenseMatrix dots = matmul(features, dict.columns);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = dots.row_ptr(i);
            std::size_t best = 0;
            double best_abs = std::abs(row[0]);
            for (std::size_t j = 1; j < k; ++j) {
                const double a = std::abs(row[j]);
                if (a > best_abs) {
                    best_abs = a;
                    best = j;
                }
            }
            codes.labels[i] = best;
            codes.coefficients[i] = row[best];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* f = features.row_ptr(i);
            std::size_t best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                double acc = 0.0;
                for (std::size_t r = 0; r < features.cols; ++r) {
                    const double diff = f[r] - dict.columns.at(r, j);
                    acc += diff * diff;
                }
                if (acc < best_dist) {
                    best_dist = acc;
                    best = j;
                }
            }
            codes.labels[i] = best;
            codes.coefficients[i] = 1.0;
        }
    }
    codes.objective = recompute_objective(features, dict, codes.labels, codes.coefficients);
    return codes;
}

DictionaryUpdate update_dictionary(const DenseMatrix& features, const CodeAssignment& codes,
                                   const Dictionary& dict, Rng& rng, KmeansMode mode) {
    check_dims(features, dict);
    if (codes.labels.size() != features.rows || codes.coefficients.size() != features.rows)
        throw ShapeError("update_dictionary: code count does not match sample count");

    const std::size_t d = dict.dims;
    const std::size_t k = dict.clusters;
    DenseMatrix sums(d, k);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const std::size_t j = codes.labels[i];
        const double c = mode == KmeansMode::SignedSpherical ? codes.coefficients[i] : 1.0;
        const double* f = features.row_ptr(i);
        for (std::size_t r = 0; r < d; ++r) sums.at(r, j) += c * f[r];
        ++counts[j];
    }

    DictionaryUpdate out;
    out.dictionary = dict;
    std::vector<std::size_t> candidates;  // built lazily, only if a reseed happens
    std::vector<double> col(d);
    for (std::size_t j = 0; j < k; ++j) {
        double norm_sq = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            col[r] = sums.at(r, j);
            norm_sq += col[r] * col[r];
        }
        if (counts[j] == 0 || norm_sq == 0.0) {
            if (candidates.empty()) candidates = nonzero_rows(features);
            reseed_column(out.dictionary, j, features, candidates, rng, mode);
            ++out.reseeds;
        } else if (mode == KmeansMode::SignedSpherical) {
            set_normalized_column(out.dictionary, j, col.data());
        } else {
            for (std::size_t r = 0; r < d; ++r)
                out.dictionary.columns.at(r, j) = col[r] / static_cast<double>(counts[j]);
        }
    }
    return out;
}

DictionaryUpdate dictionary_from_labels(const DenseMatrix& features,
                                        const std::vector<std::size_t>& labels, std::size_t k,
                                        Rng& rng, KmeansMode mode) {
    if (labels.size() != features.rows)
        throw ShapeError("dictionary_from_labels: label count does not match sample count");
    const std::size_t d = features.cols;
    DictionaryUpdate out;
    out.dictionary.dims = d;
    out.dictionary.clusters = k;
    out.dictionary.columns = DenseMatrix(d, k);

    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == j) members.push_back(i);
        if (members.empty()) {
            if (candidates.empty()) candidates = nonzero_rows(features);
            reseed_column(out.dictionary, j, features, candidates, rng, mode);
            ++out.reseeds;
            continue;
        }
        if (mode == KmeansMode::Euclidean) {
            for (std::size_t r = 0; r < d; ++r) {
                double acc = 0.0;
                for (std::size_t i : members) acc += features.at(i, r);
                out.dictionary.columns.at(r, j) = acc / static_cast<double>(members.size());
            }
            continue;
        }
        // Leading eigenvector of the member scatter: the rank-1 optimum over
        // both the column and its coefficients.
        DenseMatrix scatter(d, d);
        for (std::size_t i : members) {
            const double* f = features.row_ptr(i);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t s = 0; s < d; ++s) scatter.at(r, s) += f[r] * f[s];
        }
        bool all_zero = true;
        for (double v : scatter.values)
            if (v != 0.0) all_zero = false;
        if (all_zero) {
            if (candidates.empty()) candidates = nonzero_rows(features);
            reseed_column(out.dictionary, j, features, candidates, rng, mode);
            ++out.reseeds;
            continue;
        }
        const EighResult eig = eigh_symmetric(scatter);
        std::vector<double> top(d);
        for (std::size_t r = 0; r < d; ++r) top[r] = eig.eigenvectors.at(r, 0);
        // Deterministic sign: largest-magnitude component positive.
        std::size_t arg = 0;
        for (std::size_t r = 1; r < d; ++r)
            if (std::abs(top[r]) > std::abs(top[arg])) arg = r;
        if (top[arg] < 0.0)
            for (double& v : top) v = -v;
        set_normalized_column(out.dictionary, j, top.data());
    }
    return out;
}

namespace {

KmeansResult run_alternation(const DenseMatrix& features, Dictionary dict, std::size_t reseeds,
                             const KmeansOptions& opts, Rng& rng) {
    KmeansResult result;
    result.reseeds = reseeds;
    double prev = std::numeric_limits<double>::infinity();
    CodeAssignment codes;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        codes = assign_codes(features, dict, opts.mode);
        result.objective_history.push_back(codes.objective);
        const double improvement =
            (prev - codes.objective) / std::max(prev, std::numeric_limits<double>::min());
        if (it > 0 && improvement < opts.tol) break;
        prev = codes.objective;
        if (it + 1 == opts.max_iters) break;
        DictionaryUpdate upd = update_dictionary(features, codes, dict, rng, opts.mode);
        dict = std::move(upd.dictionary);
        result.reseeds += upd.reseeds;
    }
    result.dictionary = std::move(dict);
    result.codes = std::move(codes);
    return result;
}

}  // namespace

KmeansResult fit_kmeans(const DenseMatrix& features, std::size_t k, const KmeansOptions& opts,
                        Rng& rng) {
    if (opts.max_iters < 1) throw ConfigError("fit_kmeans: max_iters must be >= 1");
    if (features.rows < k)
        std::cerr << "[ufkm] warning: fit_kmeans with fewer samples (" << features.rows
                  << ") than clusters (" << k << ")\n";
    Dictionary dict = init_centroids(features.cols, k, rng);
    return run_alternation(features, std::move(dict), 0, opts, rng);
}

KmeansResult fit_kmeans_from_labels(const DenseMatrix& features, std::size_t k,
                                    const std::vector<std::size_t>& initial_labels,
                                    const KmeansOptions& opts, Rng& rng) {
    if (opts.max_iters < 1) throw ConfigError("fit_kmeans: max_iters must be >= 1");
    DictionaryUpdate init = dictionary_from_labels(features, initial_labels, k, rng, opts.mode);
    return run_alternation(features, std::move(init.dictionary), init.reseeds, opts, rng);
}

}  // namespace ufkm
