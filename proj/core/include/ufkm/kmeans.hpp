#pragma once

#include <cstddef>
#include <vector>

#include "ufkm/matrix.hpp"
#include "ufkm/rng.hpp"

namespace ufkm {

/// Assignment rule. SignedSpherical is the dictionary-learning form: a
/// sample's code keeps at most one nonzero coefficient, the centroid columns
/// stay unit-norm, and assignment maximizes |dot|. Euclidean is plain
/// nearest-centroid K-means (centroids are member means, coefficient 1);
/// it is provided for comparison and drops the unit-norm invariant.
enum class KmeansMode { SignedSpherical, Euclidean };

struct Dictionary {
    std::size_t dims = 0;      // d
    std::size_t clusters = 0;  // k
    DenseMatrix columns;       // d x k, column j is centroid j
};

struct CodeAssignment {
    std::vector<std::size_t> labels;   // per-sample cluster index
    std::vector<double> coefficients;  // the single nonzero code entry
    double objective = 0.0;            // sum_i ||coeff_i * D_label_i - f_i||^2
};

struct KmeansOptions {
    std::size_t max_iters = 100;
    double tol = 1e-6;  // relative objective improvement threshold
    KmeansMode mode = KmeansMode::SignedSpherical;
};

struct DictionaryUpdate {
    Dictionary dictionary;
    std::size_t reseeds = 0;  // empty or zero-sum clusters replaced by data rows
};

struct KmeansResult {
    Dictionary dictionary;
    CodeAssignment codes;
    std::vector<double> objective_history;  // objective after each assignment
    std::size_t reseeds = 0;
};

/// Columns drawn i.i.d. standard normal, then scaled to unit length.
Dictionary init_centroids(std::size_t d, std::size_t k, Rng& rng);

/// For each sample pick the centroid maximizing |dot| (ties -> lowest index)
/// and store the signed projection as the coefficient. In Euclidean mode the
/// label minimizes squared distance and the coefficient is 1.
CodeAssignment assign_codes(const DenseMatrix& features, const Dictionary& dict,
                            KmeansMode mode = KmeansMode::SignedSpherical);

/// Per-cluster norm-constrained least-squares column update: the normalized
/// coefficient-weighted member sum. Empty clusters (or zero sums) are
/// reseeded from a randomly chosen nonzero feature row, normalized.
DictionaryUpdate update_dictionary(const DenseMatrix& features, const CodeAssignment& codes,
                                   const Dictionary& dict, Rng& rng,
                                   KmeansMode mode = KmeansMode::SignedSpherical);

/// Best-fit dictionary given fixed memberships: per cluster the leading
/// eigenvector of the member scatter (mean in Euclidean mode). Used to warm
/// start fit_kmeans from a known labeling.
DictionaryUpdate dictionary_from_labels(const DenseMatrix& features,
                                        const std::vector<std::size_t>& labels, std::size_t k,
                                        Rng& rng, KmeansMode mode = KmeansMode::SignedSpherical);

/// Alternate assign_codes / update_dictionary from a random unit-norm init
/// until the relative objective improvement drops below opts.tol or
/// opts.max_iters is reached.
KmeansResult fit_kmeans(const DenseMatrix& features, std::size_t k, const KmeansOptions& opts,
                        Rng& rng);

/// Same loop, but started from the dictionary implied by `initial_labels`.
KmeansResult fit_kmeans_from_labels(const DenseMatrix& features, std::size_t k,
                                    const std::vector<std::size_t>& initial_labels,
                                    const KmeansOptions& opts, Rng& rng);

}  // namespace ufkm
