#include "nfp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "nfp/errors.hpp"

namespace nfp {

namespace {

constexpr double kScsSharpen = 3.0;   // odd exponent, sign-preserving
constexpr double kScsNormGuard = 1e-6;

template <typename T>
T sgn(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

template <typename T>
void to_dist_impl(const T* x, size_t n, T eps, T* p) {
  T m = x[0];
  for (size_t i = 1; i < n; ++i) m = std::min(m, x[i]);
  T den = T(0);
  for (size_t i = 0; i < n; ++i) {
    p[i] = x[i] - m + eps;
    den += p[i];
  }
  for (size_t i = 0; i < n; ++i) p[i] /= den;
}

// Single evaluation core shared by the float32 path (affinity stacks) and
// the double path (gradient checks). Channel accumulation order is fixed;
// the fast plane kernels reproduce it step for step.
template <typename T>
T eval_impl(MetricId id, const T* x, const T* y, size_t n, T eps) {
  switch (id) {
    case MetricId::L1: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) acc += std::abs(x[i] - y[i]);
      return -acc;
    }
    case MetricId::L2: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = x[i] - y[i];
        acc += d * d;
      }
      return -std::sqrt(acc);
    }
    case MetricId::Rmse: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = x[i] - y[i];
        acc += d * d;
      }
      return -std::sqrt(acc / T(n));
    }
    case MetricId::GemanMcClure: {
      // mean, not sum, so the range is [-1, 0] regardless of C
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = x[i] - y[i];
        T d2 = d * d;
        acc += d2 / (T(1) + d2);
      }
      return -(acc / T(n));
    }
    case MetricId::Canberra: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        acc += std::abs(x[i] - y[i]) / (std::abs(x[i]) + std::abs(y[i]) + eps);
      }
      return -acc;
    }
    case MetricId::Dot: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
      return acc;
    }
    case MetricId::ScaledDot: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
      return acc / std::sqrt(T(n));
    }
    case MetricId::Cosine: {
      T d = T(0), nx2 = T(0), ny2 = T(0);
      for (size_t i = 0; i < n; ++i) {
        d += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
      }
      return d / (std::sqrt(nx2) * std::sqrt(ny2) + eps);
    }
    case MetricId::Scs: {
      T d = T(0), nx2 = T(0), ny2 = T(0);
      for (size_t i = 0; i < n; ++i) {
        d += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
      }
      T q = T(kScsNormGuard);
      T c = d / ((std::sqrt(nx2) + q) * (std::sqrt(ny2) + q));
      return c * c * c;
    }
    case MetricId::Gfc: {
      T d = T(0), nx2 = T(0), ny2 = T(0);
      for (size_t i = 0; i < n; ++i) {
        d += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
      }
      return std::abs(d) / (std::sqrt(nx2) * std::sqrt(ny2) + eps);
    }
    case MetricId::Pearson: {
      T sx = T(0), sy = T(0);
      for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
      }
      T mx = sx / T(n), my = sy / T(n);
      T d = T(0), nx2 = T(0), ny2 = T(0);
      for (size_t i = 0; i < n; ++i) {
        T a = x[i] - mx;
        T b = y[i] - my;
        d += a * b;
        nx2 += a * a;
        ny2 += b * b;
      }
      return d / (std::sqrt(nx2) * std::sqrt(ny2) + eps);
    }
    default:
      break;
  }

  // Distribution metrics: shift-min normalize both fibers first.
  thread_local std::vector<T> pbuf, qbuf;
  pbuf.resize(n);
  qbuf.resize(n);
  T* p = pbuf.data();
  T* q = qbuf.data();
  to_dist_impl(x, n, eps, p);
  to_dist_impl(y, n, eps, q);

  switch (id) {
    case MetricId::Chi2One: {
      // denominator is the center distribution (the reference signature)
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = p[i] - q[i];
        acc += d * d / (q[i] + eps);
      }
      return -acc;
    }
    case MetricId::Chi2Two: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = p[i] - q[i];
        acc += d * d / (p[i] + q[i] + eps);
      }
      return -acc;
    }
    case MetricId::Hellinger: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = std::sqrt(p[i]) - std::sqrt(q[i]);
        acc += d * d;
      }
      return -(std::sqrt(acc) / std::sqrt(T(2)));
    }
    case MetricId::Jeffrey: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        acc += (p[i] - q[i]) * std::log((p[i] + eps) / (q[i] + eps));
      }
      return -acc;
    }
    case MetricId::SquaredChord: {
      T acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        T d = std::sqrt(p[i]) - std::sqrt(q[i]);
        acc += d * d;
      }
      return -acc;
    }
    case MetricId::Smith: {
      T nsum = T(0), dsum = T(0);
      for (size_t i = 0; i < n; ++i) {
        nsum += std::abs(p[i] - q[i]);
        dsum += p[i] + q[i];
      }
      return T(1) - nsum / dsum;
    }
    case MetricId::Emd: {
      // exact 1-D optimal transport on ordered bins: L1 of prefix sums
      T pacc = T(0), qacc = T(0), acc = T(0);
      for (size_t i = 0; i < n; ++i) {
        pacc += p[i];
        qacc += q[i];
        acc += std::abs(pacc - qacc);
      }
      return -acc;
    }
    default:
      throw RegistryError("unhandled metric id in eval");
  }
}

void grad_analytic(MetricId id, const double* x, const double* y, size_t n, double eps,
                   double* dx, double* dy) {
  switch (id) {
    case MetricId::Dot: {
      for (size_t i = 0; i < n; ++i) {
        dx[i] = y[i];
        dy[i] = x[i];
      }
      return;
    }
    case MetricId::ScaledDot: {
      double s = 1.0 / std::sqrt(static_cast<double>(n));
      for (size_t i = 0; i < n; ++i) {
        dx[i] = y[i] * s;
        dy[i] = x[i] * s;
      }
      return;
    }
    case MetricId::L1: {
      // subgradient convention sign(0) = 0
      for (size_t i = 0; i < n; ++i) {
        double s = sgn(x[i] - y[i]);
        dx[i] = -s;
        dy[i] = s;
      }
      return;
    }
    case MetricId::L2: {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double d = x[i] - y[i];
        acc += d * d;
      }
      double r = std::sqrt(acc);
      for (size_t i = 0; i < n; ++i) {
        double g = r > 0.0 ? (x[i] - y[i]) / r : 0.0;
        dx[i] = -g;
        dy[i] = g;
      }
      return;
    }
    case MetricId::Rmse: {
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double d = x[i] - y[i];
        acc += d * d;
      }
      double rc = std::sqrt(acc / static_cast<double>(n));
      for (size_t i = 0; i < n; ++i) {
        double g = rc > 0.0 ? (x[i] - y[i]) / (static_cast<double>(n) * rc) : 0.0;
        dx[i] = -g;
        dy[i] = g;
      }
      return;
    }
    case MetricId::Cosine: {
      double s = 0.0, nx2 = 0.0, ny2 = 0.0;
      for (size_t i = 0; i < n; ++i) {
        s += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
      }
      double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
      double den = nx * ny + eps;
      for (size_t i = 0; i < n; ++i) {
        double tx = nx > 0.0 ? s * ny * x[i] / (nx * den * den) : 0.0;
        double ty = ny > 0.0 ? s * nx * y[i] / (ny * den * den) : 0.0;
        dx[i] = y[i] / den - tx;
        dy[i] = x[i] / den - ty;
      }
      return;
    }
    case MetricId::Scs: {
      double s = 0.0, nx2 = 0.0, ny2 = 0.0;
      for (size_t i = 0; i < n; ++i) {
        s += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
      }
      double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
      double a = nx + kScsNormGuard, b = ny + kScsNormGuard;
      double c = s / (a * b);
      double dc = kScsSharpen * c * c;  // d(c^3)/dc = 3 c^2
      for (size_t i = 0; i < n; ++i) {
        double tx = nx > 0.0 ? s * (x[i] / nx) / (a * a * b) : 0.0;
        double ty = ny > 0.0 ? s * (y[i] / ny) / (a * b * b) : 0.0;
        dx[i] = dc * (y[i] / (a * b) - tx);
        dy[i] = dc * (x[i] / (a * b) - ty);
      }
      return;
    }
    case MetricId::Gfc: {
      double s = 0.0, nx2 = 0.0, ny2 = 0.0;
      for (size_t i = 0; i < n; ++i) {
        s += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
      }
      double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
      double den = nx * ny + eps;
      double sg = sgn(s), as = std::abs(s);
      for (size_t i = 0; i < n; ++i) {
        double tx = nx > 0.0 ? as * ny * x[i] / (nx * den * den) : 0.0;
        double ty = ny > 0.0 ? as * nx * y[i] / (ny * den * den) : 0.0;
        dx[i] = sg * y[i] / den - tx;
        dy[i] = sg * x[i] / den - ty;
      }
      return;
    }
    case MetricId::Pearson: {
      double sx = 0.0, sy = 0.0;
      for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
      }
      double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
      std::vector<double> cx(n), cy(n), gx(n), gy(n);
      for (size_t i = 0; i < n; ++i) {
        cx[i] = x[i] - mx;
        cy[i] = y[i] - my;
      }
      grad_analytic(MetricId::Cosine, cx.data(), cy.data(), n, eps, gx.data(), gy.data());
      double gmx = 0.0, gmy = 0.0;
      for (size_t i = 0; i < n; ++i) {
        gmx += gx[i];
        gmy += gy[i];
      }
      gmx /= static_cast<double>(n);
      gmy /= static_cast<double>(n);
      for (size_t i = 0; i < n; ++i) {
        dx[i] = gx[i] - gmx;
        dy[i] = gy[i] - gmy;
      }
      return;
    }
    default:
      throw StateError("grad_analytic called for a metric without an analytic gradient");
  }
}

void grad_numeric(MetricId id, const double* x, const double* y, size_t n, double eps,
                  double* dx, double* dy) {
  std::vector<double> xp(x, x + n), yp(y, y + n);
  for (size_t i = 0; i < n; ++i) {
    double h = 1e-3 * std::max(1.0, std::abs(x[i]));
    double keep = xp[i];
    xp[i] = keep + h;
    double fp = eval_impl<double>(id, xp.data(), y, n, eps);
    xp[i] = keep - h;
    double fm = eval_impl<double>(id, xp.data(), y, n, eps);
    xp[i] = keep;
    dx[i] = (fp - fm) / (2.0 * h);
  }
  for (size_t i = 0; i < n; ++i) {
    double h = 1e-3 * std::max(1.0, std::abs(y[i]));
    double keep = yp[i];
    yp[i] = keep + h;
    double fp = eval_impl<double>(id, x, yp.data(), n, eps);
    yp[i] = keep - h;
    double fm = eval_impl<double>(id, x, yp.data(), n, eps);
    yp[i] = keep;
    dy[i] = (fp - fm) / (2.0 * h);
  }
}

void check_pair(size_t nx, size_t ny) {
  if (nx == 0 || ny == 0) throw ShapeError("similarity requires vectors of length >= 1");
  if (nx != ny) {
    throw ShapeError("similarity length mismatch: " + std::to_string(nx) +
                     " vs " + std::to_string(ny));
  }
}

std::vector<MetricDescriptor> build_registry() {
  auto d = [](const char* id, MetricId which, int cat, bool neg, bool analytic,
              bool provisional = false) {
    return MetricDescriptor{id, which, cat, neg, analytic, provisional, 1e-8f};
  };
  return {
      d("cosine", MetricId::Cosine, 1, false, true),
      d("dot", MetricId::Dot, 1, false, true),
      d("scaled_dot", MetricId::ScaledDot, 1, false, true),
      d("scs", MetricId::Scs, 1, false, true),
      d("l1", MetricId::L1, 1, true, true),
      d("l2", MetricId::L2, 1, true, true),
      d("rmse", MetricId::Rmse, 1, true, true),
      d("geman_mcclure", MetricId::GemanMcClure, 1, true, false),
      d("canberra", MetricId::Canberra, 1, true, false),
      d("gfc", MetricId::Gfc, 2, false, true),
      d("chi2_1", MetricId::Chi2One, 3, true, false),
      d("chi2_2", MetricId::Chi2Two, 3, true, false),
      d("hellinger", MetricId::Hellinger, 3, true, false),
      d("jeffrey", MetricId::Jeffrey, 3, true, false),
      d("squared_chord", MetricId::SquaredChord, 3, true, false),
      d("pearson", MetricId::Pearson, 3, false, true),
      d("smith", MetricId::Smith, 3, false, false, /*provisional=*/true),
      d("emd", MetricId::Emd, 3, true, false),
  };
}

}  // namespace

const std::vector<MetricDescriptor>& list_metrics() {
  static const std::vector<MetricDescriptor> registry = build_registry();
  return registry;
}

const MetricDescriptor& metric_by_id(std::string_view id) {
  for (const auto& m : list_metrics()) {
    if (m.id == id) return m;
  }
  throw RegistryError("unknown metric id '" + std::string(id) + "'");
}

bool is_distribution_metric(MetricId id) {
  switch (id) {
    case MetricId::Chi2One:
    case MetricId::Chi2Two:
    case MetricId::Hellinger:
    case MetricId::Jeffrey:
    case MetricId::SquaredChord:
    case MetricId::Smith:
    case MetricId::Emd:
      return true;
    default:
      return false;
  }
}

void to_distribution(std::span<const float> x, float eps, std::span<float> out) {
  if (x.empty() || out.size() != x.size()) throw ShapeError("to_distribution size mismatch");
  to_dist_impl(x.data(), x.size(), eps, out.data());
}

void to_distribution_d(std::span<const double> x, double eps, std::span<double> out) {
  if (x.empty() || out.size() != x.size()) throw ShapeError("to_distribution size mismatch");
  to_dist_impl(x.data(), x.size(), eps, out.data());
}

float similarity(const MetricDescriptor& m, std::span<const float> x, std::span<const float> y) {
  check_pair(x.size(), y.size());
  return eval_impl<float>(m.which, x.data(), y.data(), x.size(), m.epsilon);
}

double similarity_d(const MetricDescriptor& m, std::span<const double> x,
                    std::span<const double> y) {
  check_pair(x.size(), y.size());
  return eval_impl<double>(m.which, x.data(), y.data(), x.size(),
                           static_cast<double>(m.epsilon));
}

void similarity_gradient_d(const MetricDescriptor& m, std::span<const double> x,
                           std::span<const double> y, std::span<double> dx,
                           std::span<double> dy) {
  check_pair(x.size(), y.size());
  if (dx.size() != x.size() || dy.size() != x.size()) {
    throw ShapeError("similarity_gradient output size mismatch");
  }
  double eps = static_cast<double>(m.epsilon);
  if (m.has_analytic_gradient) {
    grad_analytic(m.which, x.data(), y.data(), x.size(), eps, dx.data(), dy.data());
  } else {
    grad_numeric(m.which, x.data(), y.data(), x.size(), eps, dx.data(), dy.data());
  }
}

MetricGradient similarity_gradient(const MetricDescriptor& m, std::span<const float> x,
                                   std::span<const float> y) {
  check_pair(x.size(), y.size());
  size_t n = x.size();
  std::vector<double> xd(x.begin(), x.end()), yd(y.begin(), y.end());
  std::vector<double> dx(n), dy(n);
  similarity_gradient_d(m, xd, yd, dx, dy);
  MetricGradient g;
  g.d_x.assign(dx.begin(), dx.end());
  g.d_y.assign(dy.begin(), dy.end());
  return g;
}

}  // namespace nfp
