#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "helpers.hpp"
#include "nfp/errors.hpp"
#include "nfp/silhouette.hpp"

using namespace nfp;

namespace {

// brute-force reference written straight from the definition
double silhouette_oracle(const Matrix& e, const std::vector<int>& labels) {
  const int64_t n = e.rows;
  std::map<int, int> sizes;
  for (int l : labels) ++sizes[l];
  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] < 2) continue;
    double a = 0.0;
    std::map<int, double> other;
    for (int64_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d2 = 0.0;
      for (int64_t k = 0; k < e.cols; ++k) {
        double d = static_cast<double>(e.at(i, k)) - e.at(j, k);
        d2 += d * d;
      }
      double d = std::sqrt(d2);
      if (labels[j] == labels[i]) {
        a += d;
      } else {
        other[labels[j]] += d;
      }
    }
    a /= sizes[labels[i]] - 1;
    double b = 1e300;
    for (auto& [cls, sum] : other) b = std::min(b, sum / sizes[cls]);
    double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("two tight well-separated clusters score near 1") {
  nfp::Rng rng(149);
  Matrix e(40, 2);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) {
    float center = i < 20 ? 0.0f : 100.0f;
    labels[i] = i < 20 ? 0 : 1;
    e.at(i, 0) = center + 0.01f * rng.gaussian();
    e.at(i, 1) = center + 0.01f * rng.gaussian();
  }
  CHECK(silhouette_score(e, labels) > 0.99);
}

TEST_CASE("random labels on one blob score near 0") {
  nfp::Rng rng(151);
  Matrix e(200, 3);
  std::vector<int> labels(200);
  for (int i = 0; i < 200; ++i) {
    for (int k = 0; k < 3; ++k) e.at(i, k) = rng.gaussian();
    labels[i] = static_cast<int>(rng.below(4));
  }
  CHECK(std::fabs(silhouette_score(e, labels)) < 0.1);
}

TEST_CASE("matches the brute-force reference on small hand datasets") {
  nfp::Rng rng(157);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 10 + trial * 2;
    Matrix e(n, 2 + trial % 3);
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int64_t k = 0; k < e.cols; ++k) e.at(i, k) = rng.uniform(-5.0f, 5.0f);
      labels[static_cast<size_t>(i)] = static_cast<int>(rng.below(3));
    }
    // ensure at least two classes present
    labels[0] = 0;
    labels[1] = 1;
    CHECK(silhouette_score(e, labels) ==
          doctest::Approx(silhouette_oracle(e, labels)).epsilon(1e-9));
  }
}

TEST_CASE("singleton classes contribute zero") {
  Matrix e(5, 1);
  for (int i = 0; i < 5; ++i) e.at(i, 0) = static_cast<float>(i);
  std::vector<int> labels = {0, 0, 1, 1, 2};  // class 2 is a singleton
  double with_singleton = silhouette_score(e, labels);
  CHECK(with_singleton == doctest::Approx(silhouette_oracle(e, labels)).epsilon(1e-12));
}

TEST_CASE("fewer than two classes is an error") {
  Matrix e(4, 2);
  CHECK_THROWS_AS(silhouette_score(e, {0, 0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(silhouette_score(e, {0, 0}), ShapeError);  // size mismatch
}
