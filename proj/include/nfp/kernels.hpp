#pragma once

#include <cstddef>

namespace nfp::kernels {

// Row kernels for the affinity fast path. Every kernel touches contiguous
// float rows; x is the neighbor row, y the center row. The scalar table is
// the reference; SIMD tables must match it bit for bit (accumulation order
// per element is identical, no FMA contraction, IEEE sqrt/div/min).
//
// p/q rows are shift-min normalized distributions produced by dist_normalize.
struct KernelTable {
  const char* name;

  // accumulators, one call per channel
  void (*acc_abs_diff)(float* acc, const float* x, const float* y, size_t n);
  void (*acc_sq_diff)(float* acc, const float* x, const float* y, size_t n);
  void (*acc_gm_diff)(float* acc, const float* x, const float* y, size_t n);
  void (*acc_canberra)(float* acc, const float* x, const float* y, float eps, size_t n);
  void (*acc_dot)(float* acc, const float* x, const float* y, size_t n);
  void (*acc_dot_norms)(float* accd, float* accx, float* accy, const float* x, const float* y,
                        size_t n);
  void (*acc_centered_dot_norms)(float* accd, float* accx, float* accy, const float* x,
                                 const float* y, const float* mx, const float* my, size_t n);
  void (*acc_sum)(float* acc, const float* x, size_t n);
  void (*min_rows)(float* m, const float* x, size_t n);
  void (*acc_shift)(float* acc, const float* x, const float* m, float eps, size_t n);
  void (*dist_normalize)(float* p, const float* x, const float* m, const float* den, float eps,
                         size_t n);
  void (*acc_chi2_center)(float* acc, const float* p, const float* q, float eps, size_t n);
  void (*acc_chi2_sym)(float* acc, const float* p, const float* q, float eps, size_t n);
  void (*acc_sqrtdiff2)(float* acc, const float* p, const float* q, size_t n);
  void (*acc_jeffrey)(float* acc, const float* p, const float* q, float eps, size_t n);
  void (*acc_emd)(float* accp, float* accq, float* acc, const float* p, const float* q, size_t n);
  void (*acc_smith)(float* accn, float* accd, const float* p, const float* q, size_t n);

  // finalizers, one call per plane
  void (*negate)(float* v, size_t n);
  void (*final_neg_sqrt)(float* v, size_t n);                    // v = -sqrt(v)
  void (*final_neg_sqrt_div)(float* v, float c, size_t n);       // v = -sqrt(v / c)
  void (*final_neg_sqrt_div_by)(float* v, float s, size_t n);    // v = -(sqrt(v) / s)
  void (*final_div)(float* v, float s, size_t n);                // v = v / s
  void (*final_neg_div)(float* v, float c, size_t n);            // v = -(v / c)
  void (*final_cosine)(float* d, const float* nx2, const float* ny2, float eps, size_t n);
  void (*final_scs)(float* d, const float* nx2, const float* ny2, float q, size_t n);
  void (*final_gfc)(float* d, const float* nx2, const float* ny2, float eps, size_t n);
  void (*final_smith)(float* num, const float* den, size_t n);   // num = 1 - num/den

  void (*fill)(float* v, float value, size_t n);
};

// Portable reference implementation; always available.
const KernelTable& scalar_table();

// AVX2 variant, or nullptr when the build or the CPU lacks it.
const KernelTable* avx2_table();

// Runtime selection: best available table, overridable with
// NFP_SIMD=scalar|avx2|auto (read once).
const KernelTable& active();

}  // namespace nfp::kernels
