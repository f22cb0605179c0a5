#pragma once

#include <string>
#include <vector>

#include "ufkm/matrix.hpp"

namespace ufkm {

/// One ensemble member's prediction scores (N x C raw SVM margins).
struct ScoreSet {
    std::string member_id;
    DenseMatrix scores;
};

/// Elementwise arithmetic mean over members, summed in sorted member-id
/// order so the result does not depend on argument order.
DenseMatrix fuse_scores(const std::vector<ScoreSet>& members);

/// 100 * matches / N.
double top1_accuracy(const std::vector<std::size_t>& predicted,
                     const std::vector<std::size_t>& truth);

}  // namespace ufkm
