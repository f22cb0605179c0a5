#include "ufkm/ensemble.hpp"

#include <algorithm>
#include <numeric>

#include "ufkm/error.hpp"

namespace ufkm {

DenseMatrix fuse_scores(const std::vector<ScoreSet>& members) {
    if (members.empty()) throw ConfigError("fuse_scores: no members");
    const std::size_t n = members.front().scores.rows;
    const std::size_t c = members.front().scores.cols;
    for (const ScoreSet& m : members)
        if (m.scores.rows != n || m.scores.cols != c)
            throw ShapeError("fuse_scores: member score shapes differ");

    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return members[a].member_id < members[b].member_id;
    });

    DenseMatrix fused(n, c);
    for (std::size_t idx : order)
        for (std::size_t i = 0; i < fused.values.size(); ++i)
            fused.values[i] += members[idx].scores.values[i];
    const double inv = 1.0 / static_cast<double>(members.size());
    for (double& v : fused.values) v *= inv;
    return fused;
}

double top1_accuracy(const std::vector<std::size_t>& predicted,
                     const std::vector<std::size_t>& truth) {
    if (predicted.size() != truth.size())
        throw ShapeError("top1_accuracy: prediction and truth lengths differ");
    if (predicted.empty()) throw ShapeError("top1_accuracy: empty inputs");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++matches;
    return 100.0 * static_cast<double>(matches) / static_cast<double>(predicted.size());
}

}  // namespace ufkm
