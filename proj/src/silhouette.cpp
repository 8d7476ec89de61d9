#include "nfp/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nfp/errors.hpp"

namespace nfp {

double silhouette_score(const Matrix& embeddings, const std::vector<int>& labels) {
  const int64_t n = embeddings.rows;
  if (n != static_cast<int64_t>(labels.size())) {
    throw ShapeError("silhouette: embeddings rows != label count");
  }
  std::map<int, int64_t> class_sizes;
  for (int l : labels) ++class_sizes[l];
  if (class_sizes.size() < 2) {
    throw ValidationError("silhouette requires at least 2 distinct classes");
  }

  auto dist = [&](int64_t i, int64_t j) {
    double acc = 0.0;
    const float* a = embeddings.row(i);
    const float* b = embeddings.row(j);
    for (int64_t d = 0; d < embeddings.cols; ++d) {
      double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };

  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    if (class_sizes[labels[i]] < 2) continue;  // singleton scores 0

    std::map<int, double> sums;
    for (int64_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[labels[j]] += dist(i, j);
    }
    double a = sums[labels[i]] / static_cast<double>(class_sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [cls, sum] : sums) {
      if (cls == labels[i]) continue;
      b = std::min(b, sum / static_cast<double>(class_sizes[cls]));
    }
    double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace nfp
