#pragma once

#include <cstddef>
#include <vector>

namespace ufkm {

/// Normalized mutual information I(a;b)/sqrt(H(a)H(b)) in [0,1], invariant
/// to relabeling of either partition. Defined as 1 when both partitions are
/// single-cluster and 0 when exactly one is.
double nmi(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace ufkm
