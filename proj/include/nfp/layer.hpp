#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nfp/metrics.hpp"
#include "nfp/tensor.hpp"

namespace nfp {

// One layer instance: neighborhood radius, offset dilation, similarity
// metric, and projection width (0 = match the input channel count).
struct NfpConfig {
  int radius = 1;
  int dilation = 1;
  std::string metric = "cosine";
  int projection_out = 0;

  int kernel_size() const { return 2 * radius + 1; }
  int neighbor_count() const {
    int k = kernel_size();
    return k * k - 1;
  }
};

// ConfigError on non-positive radius/dilation.
void validate_config(const NfpConfig& cfg);

// The N_r dilated (dy, dx) offsets in fixed scan order: row-major over the
// k x k window, top-left first, center excluded.
std::vector<std::pair<int, int>> neighbor_offsets(int radius, int dilation);

// Shape (B, N_r, H', W') with H' = H - D*(k-1), W' = W - D*(k-1); channel n
// holds the similarity of each center fiber with its n-th neighbor fiber.
using AffinityStack = Tensor4;

// Fast path: fixed-kernel plane gathers with the per-metric channel
// reduction applied via the runtime-selected row kernels.
AffinityStack affinity_forward(const Tensor4& x, const NfpConfig& cfg);

// Reference path: explicit loop over (b, n, i, j) calling `similarity` on
// extracted fibers. Shares nothing with the fast path beyond the metric
// definitions; used as the equivalence oracle.
AffinityStack affinity_forward_naive(const Tensor4& x, const NfpConfig& cfg);

// Spatial mean per (b, n). ShapeError on empty spatial extent.
Matrix nfp_pool(const AffinityStack& s);

// Learned projection from N_r pooled affinities to C' output channels.
struct NfpHead {
  Matrix weight;            // C' x N_r (empty in identity mode)
  std::vector<float> bias;  // C'
  bool identity = false;
  int n_r = 0;

  // Uniform [-1/sqrt(N_r), 1/sqrt(N_r)] weights, zero bias, seeded.
  static NfpHead init(int projection_out, int n_r, uint64_t seed);
  // Pass-through head for the C' == N_r case; owns no parameters.
  static NfpHead identity_head(int n_r);

  int64_t out_channels() const { return identity ? n_r : weight.rows; }
  int64_t parameter_count() const {
    return identity ? 0 : weight.rows * weight.cols + static_cast<int64_t>(bias.size());
  }
};

// pooled * W^T + b, or a pass-through in identity mode.
Matrix project(const Matrix& pooled, const NfpHead& head);

// Hadamard product of the GAP branch and the projected NFP branch.
Matrix fuse(const Matrix& gap_vec, const Matrix& nfp_vec);

struct NfpForwardCache {
  Tensor4 input;
  Matrix gap;      // B x C
  Matrix pooled;   // B x N_r
  Matrix nfp_vec;  // B x C'
  bool valid = false;
};

// Full layer: fuse(GAP(x), project(nfp_pool(affinity_forward(x)))).
// Requires C' == C. Fills `cache` for the backward pass when given.
Matrix nfp_forward(const Tensor4& x, const NfpConfig& cfg, const NfpHead& head,
                   NfpForwardCache* cache = nullptr);

struct NfpGradients {
  Tensor4 grad_x;
  Matrix grad_weight;
  std::vector<float> grad_bias;
};

// Exact reverse-mode gradients of nfp_forward. StateError without a valid
// cache; ConfigError for a metric without an analytic gradient unless
// allow_numeric is set (numeric fallback costs O(C) metric evaluations per
// position).
NfpGradients nfp_backward(const Matrix& grad_out, const NfpForwardCache& cache,
                          const NfpConfig& cfg, const NfpHead& head,
                          bool allow_numeric = false);

// Head-parameter gradients only; this is all a frozen-backbone trainer
// needs and it never touches the metric.
void nfp_head_backward(const Matrix& grad_out, const NfpForwardCache& cache,
                       const NfpHead& head, Matrix* grad_weight,
                       std::vector<float>* grad_bias);

// Trainable parameter count of one layer: C'*N_r + C'.
int64_t nfp_parameter_count(int64_t c_prime, int64_t n_r);

// {radius, dilation, metric, projection_out} JSON plus weight/bias NPY files
// under `dir`.
void save_nfp_layer(const std::string& dir, const NfpConfig& cfg, const NfpHead& head);
std::pair<NfpConfig, NfpHead> load_nfp_layer(const std::string& dir);

}  // namespace nfp
