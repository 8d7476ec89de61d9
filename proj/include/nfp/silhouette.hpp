#pragma once

#include <vector>

#include "nfp/tensor.hpp"

namespace nfp {

// Mean over points of (b - a) / max(a, b): a = mean intra-class distance
// (excluding self), b = smallest mean distance to any other class.
// Euclidean, computed in double. Points in singleton classes score 0.
// ValidationError unless at least 2 distinct labels are present.
double silhouette_score(const Matrix& embeddings, const std::vector<int>& labels);

}  // namespace nfp
