#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nfp {

// The 18 registered similarity functions. Sign convention is uniform:
// higher output always means more similar; distance-like metrics are
// negated and peak at 0 for identical inputs.
enum class MetricId {
  Cosine,
  Dot,
  ScaledDot,
  Scs,
  L1,
  L2,
  Rmse,
  GemanMcClure,
  Canberra,
  Gfc,
  Chi2One,
  Chi2Two,
  Hellinger,
  Jeffrey,
  SquaredChord,
  Pearson,
  Smith,
  Emd,
};

struct MetricDescriptor {
  std::string id;              // lowercase snake-case, used in configs/CLI
  MetricId which;
  int category;                // 1 vector, 2 manifold, 3 distribution
  bool negated_distance;
  bool has_analytic_gradient;
  bool provisional;            // smith: ratio form is a documented placeholder
  float epsilon;
};

// Closed registry, fixed order. Exactly 18 entries.
const std::vector<MetricDescriptor>& list_metrics();

// RegistryError on unknown id.
const MetricDescriptor& metric_by_id(std::string_view id);

// True for the metrics that act on shift-min normalized distributions
// (chi2_1, chi2_2, hellinger, jeffrey, squared_chord, smith, emd).
bool is_distribution_metric(MetricId id);

// p_i = (x_i - min_j x_j + eps) / sum_j (x_j - min_j x_j + eps).
// Non-negative, sums to 1, invariant to adding a constant to x.
void to_distribution(std::span<const float> x, float eps, std::span<float> out);
void to_distribution_d(std::span<const double> x, double eps, std::span<double> out);

// Scalar similarity of two channel fibers (x = neighbor, y = center).
// ShapeError on length mismatch or empty vectors.
float similarity(const MetricDescriptor& m, std::span<const float> x, std::span<const float> y);

// Double-precision evaluation of the same formulas; this is what gradient
// checks and finite-difference fallbacks run on.
double similarity_d(const MetricDescriptor& m, std::span<const double> x,
                    std::span<const double> y);

struct MetricGradient {
  std::vector<float> d_x;  // dS/d(neighbor)
  std::vector<float> d_y;  // dS/d(center)
};

// Analytic gradients for dot, scaled_dot, cosine, scs, l1, l2, rmse,
// pearson, gfc; central finite differences with step 1e-3*max(1, |x_i|)
// for everything else.
MetricGradient similarity_gradient(const MetricDescriptor& m, std::span<const float> x,
                                   std::span<const float> y);

// In-place double variant; dx/dy must have the input length.
void similarity_gradient_d(const MetricDescriptor& m, std::span<const double> x,
                           std::span<const double> y, std::span<double> dx,
                           std::span<double> dy);

}  // namespace nfp
