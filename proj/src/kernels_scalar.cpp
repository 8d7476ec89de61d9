#include <cmath>
#include <cstddef>

#include "nfp/kernels.hpp"

// Scalar reference kernels. These define the semantics; the SIMD tables are
// checked against them element for element.

namespace nfp::kernels {

namespace {

void s_acc_abs_diff(float* acc, const float* x, const float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] += std::fabs(x[i] - y[i]);
}

void s_acc_sq_diff(float* acc, const float* x, const float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float d = x[i] - y[i];
    acc[i] += d * d;
  }
}

void s_acc_gm_diff(float* acc, const float* x, const float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float d = x[i] - y[i];
    float d2 = d * d;
    acc[i] += d2 / (1.0f + d2);
  }
}

void s_acc_canberra(float* acc, const float* x, const float* y, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] += std::fabs(x[i] - y[i]) / (std::fabs(x[i]) + std::fabs(y[i]) + eps);
  }
}

void s_acc_dot(float* acc, const float* x, const float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] += x[i] * y[i];
}

void s_acc_dot_norms(float* accd, float* accx, float* accy, const float* x, const float* y,
                     size_t n) {
  for (size_t i = 0; i < n; ++i) {
    accd[i] += x[i] * y[i];
    accx[i] += x[i] * x[i];
    accy[i] += y[i] * y[i];
  }
}

void s_acc_centered_dot_norms(float* accd, float* accx, float* accy, const float* x,
                              const float* y, const float* mx, const float* my, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float a = x[i] - mx[i];
    float b = y[i] - my[i];
    accd[i] += a * b;
    accx[i] += a * a;
    accy[i] += b * b;
  }
}

void s_acc_sum(float* acc, const float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void s_min_rows(float* m, const float* x, size_t n) {
  for (size_t i = 0; i < n; ++i) m[i] = std::min(m[i], x[i]);
}

void s_acc_shift(float* acc, const float* x, const float* m, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] += x[i] - m[i] + eps;
}

void s_dist_normalize(float* p, const float* x, const float* m, const float* den, float eps,
                      size_t n) {
  for (size_t i = 0; i < n; ++i) p[i] = (x[i] - m[i] + eps) / den[i];
}

void s_acc_chi2_center(float* acc, const float* p, const float* q, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float d = p[i] - q[i];
    acc[i] += d * d / (q[i] + eps);
  }
}

void s_acc_chi2_sym(float* acc, const float* p, const float* q, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float d = p[i] - q[i];
    acc[i] += d * d / (p[i] + q[i] + eps);
  }
}

void s_acc_sqrtdiff2(float* acc, const float* p, const float* q, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float d = std::sqrt(p[i]) - std::sqrt(q[i]);
    acc[i] += d * d;
  }
}

void s_acc_jeffrey(float* acc, const float* p, const float* q, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] += (p[i] - q[i]) * std::log((p[i] + eps) / (q[i] + eps));
  }
}

void s_acc_emd(float* accp, float* accq, float* acc, const float* p, const float* q, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    accp[i] += p[i];
    accq[i] += q[i];
    acc[i] += std::fabs(accp[i] - accq[i]);
  }
}

void s_acc_smith(float* accn, float* accd, const float* p, const float* q, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    accn[i] += std::fabs(p[i] - q[i]);
    accd[i] += p[i] + q[i];
  }
}

void s_negate(float* v, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = -v[i];
}

void s_final_neg_sqrt(float* v, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = -std::sqrt(v[i]);
}

void s_final_neg_sqrt_div(float* v, float c, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = -std::sqrt(v[i] / c);
}

void s_final_neg_sqrt_div_by(float* v, float s, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = -(std::sqrt(v[i]) / s);
}

void s_final_div(float* v, float s, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = v[i] / s;
}

void s_final_neg_div(float* v, float c, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = -(v[i] / c);
}

void s_final_cosine(float* d, const float* nx2, const float* ny2, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    d[i] = d[i] / (std::sqrt(nx2[i]) * std::sqrt(ny2[i]) + eps);
  }
}

void s_final_scs(float* d, const float* nx2, const float* ny2, float q, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    float c = d[i] / ((std::sqrt(nx2[i]) + q) * (std::sqrt(ny2[i]) + q));
    d[i] = c * c * c;
  }
}

void s_final_gfc(float* d, const float* nx2, const float* ny2, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    d[i] = std::fabs(d[i]) / (std::sqrt(nx2[i]) * std::sqrt(ny2[i]) + eps);
  }
}

void s_final_smith(float* num, const float* den, size_t n) {
  for (size_t i = 0; i < n; ++i) num[i] = 1.0f - num[i] / den[i];
}

void s_fill(float* v, float value, size_t n) {
  for (size_t i = 0; i < n; ++i) v[i] = value;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      "scalar",
      s_acc_abs_diff,
      s_acc_sq_diff,
      s_acc_gm_diff,
      s_acc_canberra,
      s_acc_dot,
      s_acc_dot_norms,
      s_acc_centered_dot_norms,
      s_acc_sum,
      s_min_rows,
      s_acc_shift,
      s_dist_normalize,
      s_acc_chi2_center,
      s_acc_chi2_sym,
      s_acc_sqrtdiff2,
      s_acc_jeffrey,
      s_acc_emd,
      s_acc_smith,
      s_negate,
      s_final_neg_sqrt,
      s_final_neg_sqrt_div,
      s_final_neg_sqrt_div_by,
      s_final_div,
      s_final_neg_div,
      s_final_cosine,
      s_final_scs,
      s_final_gfc,
      s_final_smith,
      s_fill,
  };
  return t;
}

}  // namespace nfp::kernels
