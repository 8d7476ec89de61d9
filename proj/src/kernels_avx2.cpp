// AVX2 kernel table. Compiled with -mavx2 and only reachable behind the
// runtime dispatch in kernels.cpp. No FMA intrinsics: mul/add stay separate
// so every lane computes exactly what the scalar reference computes.

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "nfp/kernels.hpp"

namespace nfp::kernels {

namespace {

inline __m256 absv(__m256 v) {
  return _mm256_andnot_ps(_mm256_set1_ps(-0.0f), v);
}

void a_acc_abs_diff(float* acc, const float* x, const float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), absv(d)));
  }
  for (; i < n; ++i) acc[i] += std::fabs(x[i] - y[i]);
}

void a_acc_sq_diff(float* acc, const float* x, const float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), _mm256_mul_ps(d, d)));
  }
  for (; i < n; ++i) {
    float d = x[i] - y[i];
    acc[i] += d * d;
  }
}

void a_acc_gm_diff(float* acc, const float* x, const float* y, size_t n) {
  const __m256 one = _mm256_set1_ps(1.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
    __m256 d2 = _mm256_mul_ps(d, d);
    __m256 t = _mm256_div_ps(d2, _mm256_add_ps(one, d2));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), t));
  }
  for (; i < n; ++i) {
    float d = x[i] - y[i];
    float d2 = d * d;
    acc[i] += d2 / (1.0f + d2);
  }
}

void a_acc_canberra(float* acc, const float* x, const float* y, float eps, size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xv = _mm256_loadu_ps(x + i);
    __m256 yv = _mm256_loadu_ps(y + i);
    __m256 num = absv(_mm256_sub_ps(xv, yv));
    __m256 den = _mm256_add_ps(_mm256_add_ps(absv(xv), absv(yv)), ev);
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), _mm256_div_ps(num, den)));
  }
  for (; i < n; ++i) {
    acc[i] += std::fabs(x[i] - y[i]) / (std::fabs(x[i]) + std::fabs(y[i]) + eps);
  }
}

void a_acc_dot(float* acc, const float* x, const float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), t));
  }
  for (; i < n; ++i) acc[i] += x[i] * y[i];
}

void a_acc_dot_norms(float* accd, float* accx, float* accy, const float* x, const float* y,
                     size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xv = _mm256_loadu_ps(x + i);
    __m256 yv = _mm256_loadu_ps(y + i);
    _mm256_storeu_ps(accd + i, _mm256_add_ps(_mm256_loadu_ps(accd + i), _mm256_mul_ps(xv, yv)));
    _mm256_storeu_ps(accx + i, _mm256_add_ps(_mm256_loadu_ps(accx + i), _mm256_mul_ps(xv, xv)));
    _mm256_storeu_ps(accy + i, _mm256_add_ps(_mm256_loadu_ps(accy + i), _mm256_mul_ps(yv, yv)));
  }
  for (; i < n; ++i) {
    accd[i] += x[i] * y[i];
    accx[i] += x[i] * x[i];
    accy[i] += y[i] * y[i];
  }
}

void a_acc_centered_dot_norms(float* accd, float* accx, float* accy, const float* x,
                              const float* y, const float* mx, const float* my, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 a = _mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(mx + i));
    __m256 b = _mm256_sub_ps(_mm256_loadu_ps(y + i), _mm256_loadu_ps(my + i));
    _mm256_storeu_ps(accd + i, _mm256_add_ps(_mm256_loadu_ps(accd + i), _mm256_mul_ps(a, b)));
    _mm256_storeu_ps(accx + i, _mm256_add_ps(_mm256_loadu_ps(accx + i), _mm256_mul_ps(a, a)));
    _mm256_storeu_ps(accy + i, _mm256_add_ps(_mm256_loadu_ps(accy + i), _mm256_mul_ps(b, b)));
  }
  for (; i < n; ++i) {
    float a = x[i] - mx[i];
    float b = y[i] - my[i];
    accd[i] += a * b;
    accx[i] += a * a;
    accy[i] += b * b;
  }
}

void a_acc_sum(float* acc, const float* x, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), _mm256_loadu_ps(x + i)));
  }
  for (; i < n; ++i) acc[i] += x[i];
}

void a_min_rows(float* m, const float* x, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(m + i, _mm256_min_ps(_mm256_loadu_ps(m + i), _mm256_loadu_ps(x + i)));
  }
  for (; i < n; ++i) m[i] = std::min(m[i], x[i]);
}

void a_acc_shift(float* acc, const float* x, const float* m, float eps, size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_add_ps(_mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(m + i)), ev);
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), t));
  }
  for (; i < n; ++i) acc[i] += x[i] - m[i] + eps;
}

void a_dist_normalize(float* p, const float* x, const float* m, const float* den, float eps,
                      size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_add_ps(_mm256_sub_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(m + i)), ev);
    _mm256_storeu_ps(p + i, _mm256_div_ps(t, _mm256_loadu_ps(den + i)));
  }
  for (; i < n; ++i) p[i] = (x[i] - m[i] + eps) / den[i];
}

void a_acc_chi2_center(float* acc, const float* p, const float* q, float eps, size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 pv = _mm256_loadu_ps(p + i);
    __m256 qv = _mm256_loadu_ps(q + i);
    __m256 d = _mm256_sub_ps(pv, qv);
    __m256 t = _mm256_div_ps(_mm256_mul_ps(d, d), _mm256_add_ps(qv, ev));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), t));
  }
  for (; i < n; ++i) {
    float d = p[i] - q[i];
    acc[i] += d * d / (q[i] + eps);
  }
}

void a_acc_chi2_sym(float* acc, const float* p, const float* q, float eps, size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 pv = _mm256_loadu_ps(p + i);
    __m256 qv = _mm256_loadu_ps(q + i);
    __m256 d = _mm256_sub_ps(pv, qv);
    __m256 t = _mm256_div_ps(_mm256_mul_ps(d, d), _mm256_add_ps(_mm256_add_ps(pv, qv), ev));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), t));
  }
  for (; i < n; ++i) {
    float d = p[i] - q[i];
    acc[i] += d * d / (p[i] + q[i] + eps);
  }
}

void a_acc_sqrtdiff2(float* acc, const float* p, const float* q, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_sqrt_ps(_mm256_loadu_ps(p + i)),
                             _mm256_sqrt_ps(_mm256_loadu_ps(q + i)));
    _mm256_storeu_ps(acc + i, _mm256_add_ps(_mm256_loadu_ps(acc + i), _mm256_mul_ps(d, d)));
  }
  for (; i < n; ++i) {
    float d = std::sqrt(p[i]) - std::sqrt(q[i]);
    acc[i] += d * d;
  }
}

// no vector log; the scalar loop is the implementation
void a_acc_jeffrey(float* acc, const float* p, const float* q, float eps, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    acc[i] += (p[i] - q[i]) * std::log((p[i] + eps) / (q[i] + eps));
  }
}

void a_acc_emd(float* accp, float* accq, float* acc, const float* p, const float* q, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 np = _mm256_add_ps(_mm256_loadu_ps(accp + i), _mm256_loadu_ps(p + i));
    __m256 nq = _mm256_add_ps(_mm256_loadu_ps(accq + i), _mm256_loadu_ps(q + i));
    _mm256_storeu_ps(accp + i, np);
    _mm256_storeu_ps(accq + i, nq);
    _mm256_storeu_ps(acc + i,
                     _mm256_add_ps(_mm256_loadu_ps(acc + i), absv(_mm256_sub_ps(np, nq))));
  }
  for (; i < n; ++i) {
    accp[i] += p[i];
    accq[i] += q[i];
    acc[i] += std::fabs(accp[i] - accq[i]);
  }
}

void a_acc_smith(float* accn, float* accd, const float* p, const float* q, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 pv = _mm256_loadu_ps(p + i);
    __m256 qv = _mm256_loadu_ps(q + i);
    _mm256_storeu_ps(accn + i,
                     _mm256_add_ps(_mm256_loadu_ps(accn + i), absv(_mm256_sub_ps(pv, qv))));
    _mm256_storeu_ps(accd + i,
                     _mm256_add_ps(_mm256_loadu_ps(accd + i), _mm256_add_ps(pv, qv)));
  }
  for (; i < n; ++i) {
    accn[i] += std::fabs(p[i] - q[i]);
    accd[i] += p[i] + q[i];
  }
}

void a_negate(float* v, size_t n) {
  const __m256 mask = _mm256_set1_ps(-0.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(v + i, _mm256_xor_ps(_mm256_loadu_ps(v + i), mask));
  }
  for (; i < n; ++i) v[i] = -v[i];
}

void a_final_neg_sqrt(float* v, size_t n) {
  const __m256 mask = _mm256_set1_ps(-0.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(v + i, _mm256_xor_ps(_mm256_sqrt_ps(_mm256_loadu_ps(v + i)), mask));
  }
  for (; i < n; ++i) v[i] = -std::sqrt(v[i]);
}

void a_final_neg_sqrt_div(float* v, float c, size_t n) {
  const __m256 mask = _mm256_set1_ps(-0.0f);
  const __m256 cv = _mm256_set1_ps(c);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_sqrt_ps(_mm256_div_ps(_mm256_loadu_ps(v + i), cv));
    _mm256_storeu_ps(v + i, _mm256_xor_ps(t, mask));
  }
  for (; i < n; ++i) v[i] = -std::sqrt(v[i] / c);
}

void a_final_neg_sqrt_div_by(float* v, float s, size_t n) {
  const __m256 mask = _mm256_set1_ps(-0.0f);
  const __m256 sv = _mm256_set1_ps(s);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_div_ps(_mm256_sqrt_ps(_mm256_loadu_ps(v + i)), sv);
    _mm256_storeu_ps(v + i, _mm256_xor_ps(t, mask));
  }
  for (; i < n; ++i) v[i] = -(std::sqrt(v[i]) / s);
}

void a_final_div(float* v, float s, size_t n) {
  const __m256 sv = _mm256_set1_ps(s);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(v + i, _mm256_div_ps(_mm256_loadu_ps(v + i), sv));
  }
  for (; i < n; ++i) v[i] = v[i] / s;
}

void a_final_neg_div(float* v, float c, size_t n) {
  const __m256 mask = _mm256_set1_ps(-0.0f);
  const __m256 cv = _mm256_set1_ps(c);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(v + i, _mm256_xor_ps(_mm256_div_ps(_mm256_loadu_ps(v + i), cv), mask));
  }
  for (; i < n; ++i) v[i] = -(v[i] / c);
}

void a_final_cosine(float* d, const float* nx2, const float* ny2, float eps, size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 den = _mm256_add_ps(_mm256_mul_ps(_mm256_sqrt_ps(_mm256_loadu_ps(nx2 + i)),
                                             _mm256_sqrt_ps(_mm256_loadu_ps(ny2 + i))),
                               ev);
    _mm256_storeu_ps(d + i, _mm256_div_ps(_mm256_loadu_ps(d + i), den));
  }
  for (; i < n; ++i) {
    d[i] = d[i] / (std::sqrt(nx2[i]) * std::sqrt(ny2[i]) + eps);
  }
}

void a_final_scs(float* d, const float* nx2, const float* ny2, float q, size_t n) {
  const __m256 qv = _mm256_set1_ps(q);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 a = _mm256_add_ps(_mm256_sqrt_ps(_mm256_loadu_ps(nx2 + i)), qv);
    __m256 b = _mm256_add_ps(_mm256_sqrt_ps(_mm256_loadu_ps(ny2 + i)), qv);
    __m256 c = _mm256_div_ps(_mm256_loadu_ps(d + i), _mm256_mul_ps(a, b));
    _mm256_storeu_ps(d + i, _mm256_mul_ps(_mm256_mul_ps(c, c), c));
  }
  for (; i < n; ++i) {
    float c = d[i] / ((std::sqrt(nx2[i]) + q) * (std::sqrt(ny2[i]) + q));
    d[i] = c * c * c;
  }
}

void a_final_gfc(float* d, const float* nx2, const float* ny2, float eps, size_t n) {
  const __m256 ev = _mm256_set1_ps(eps);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 den = _mm256_add_ps(_mm256_mul_ps(_mm256_sqrt_ps(_mm256_loadu_ps(nx2 + i)),
                                             _mm256_sqrt_ps(_mm256_loadu_ps(ny2 + i))),
                               ev);
    _mm256_storeu_ps(d + i, _mm256_div_ps(absv(_mm256_loadu_ps(d + i)), den));
  }
  for (; i < n; ++i) {
    d[i] = std::fabs(d[i]) / (std::sqrt(nx2[i]) * std::sqrt(ny2[i]) + eps);
  }
}

void a_final_smith(float* num, const float* den, size_t n) {
  const __m256 one = _mm256_set1_ps(1.0f);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_div_ps(_mm256_loadu_ps(num + i), _mm256_loadu_ps(den + i));
    _mm256_storeu_ps(num + i, _mm256_sub_ps(one, t));
  }
  for (; i < n; ++i) num[i] = 1.0f - num[i] / den[i];
}

void a_fill(float* v, float value, size_t n) {
  const __m256 val = _mm256_set1_ps(value);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(v + i, val);
  for (; i < n; ++i) v[i] = value;
}

}  // namespace

const KernelTable* avx2_table_impl() {
  static const KernelTable t = {
      "avx2",
      a_acc_abs_diff,
      a_acc_sq_diff,
      a_acc_gm_diff,
      a_acc_canberra,
      a_acc_dot,
      a_acc_dot_norms,
      a_acc_centered_dot_norms,
      a_acc_sum,
      a_min_rows,
      a_acc_shift,
      a_dist_normalize,
      a_acc_chi2_center,
      a_acc_chi2_sym,
      a_acc_sqrtdiff2,
      a_acc_jeffrey,
      a_acc_emd,
      a_acc_smith,
      a_negate,
      a_final_neg_sqrt,
      a_final_neg_sqrt_div,
      a_final_neg_sqrt_div_by,
      a_final_div,
      a_final_neg_div,
      a_final_cosine,
      a_final_scs,
      a_final_gfc,
      a_final_smith,
      a_fill,
  };
  return &t;
}

}  // namespace nfp::kernels

#endif  // x86
