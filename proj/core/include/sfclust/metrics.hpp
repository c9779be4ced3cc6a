#pragma once

#include <Eigen/Core>

#include "sfclust/types.hpp"

namespace sfclust {

/// Cross-tabulation of two labelings over the same sites: entry (k, l) counts
/// sites with label k in `a` and l in `b`. Shape is (max(a)+1) x (max(b)+1).
Eigen::MatrixXi contingency_table(const LabelField& a, const LabelField& b);

/// Adjusted Rand Index between two labelings: 1 for identical partitions (up
/// to label permutation), approximately 0 for independent ones. Degenerate
/// comparisons with no distinguishable pairs return 1.
double adjusted_rand_index(const LabelField& a, const LabelField& b);

}  // namespace sfclust
