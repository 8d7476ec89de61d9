#include "nfp/layer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nfp/errors.hpp"
#include "nfp/kernels.hpp"
#include "nfp/npy.hpp"
#include "nfp/rng.hpp"

namespace nfp {

namespace {

constexpr float kScsNormGuard = 1e-6f;  // matches the metric definition

struct WindowDims {
  int64_t hp, wp;
  int rd;  // radius * dilation = center margin
};

WindowDims window_dims(const Tensor4& x, const NfpConfig& cfg) {
  validate_config(cfg);
  const int k = cfg.kernel_size();
  const int64_t shrink = static_cast<int64_t>(cfg.dilation) * (k - 1);
  if (shrink >= x.h() || shrink >= x.w()) {
    throw ShapeError("NFP window does not fit: H=" + std::to_string(x.h()) +
                     " W=" + std::to_string(x.w()) + " k=" + std::to_string(k) +
                     " D=" + std::to_string(cfg.dilation) +
                     " (needs D*(k-1) < min(H, W))");
  }
  return {x.h() - shrink, x.w() - shrink, cfg.radius * cfg.dilation};
}

}  // namespace

void validate_config(const NfpConfig& cfg) {
  if (cfg.radius < 1) throw ConfigError("radius must be >= 1, got " + std::to_string(cfg.radius));
  if (cfg.dilation < 1) {
    throw ConfigError("dilation must be >= 1, got " + std::to_string(cfg.dilation));
  }
  if (cfg.projection_out < 0) {
    throw ConfigError("projection_out must be positive or 0 (match input)");
  }
}

std::vector<std::pair<int, int>> neighbor_offsets(int radius, int dilation) {
  std::vector<std::pair<int, int>> offsets;
  const int k = 2 * radius + 1;
  offsets.reserve(static_cast<size_t>(k) * k - 1);
  for (int wy = 0; wy < k; ++wy) {
    for (int wx = 0; wx < k; ++wx) {
      if (wy == radius && wx == radius) continue;
      offsets.emplace_back((wy - radius) * dilation, (wx - radius) * dilation);
    }
  }
  return offsets;
}

AffinityStack affinity_forward(const Tensor4& x, const NfpConfig& cfg) {
  const WindowDims dims = window_dims(x, cfg);
  const MetricDescriptor& m = metric_by_id(cfg.metric);
  const auto& K = kernels::active();
  const float eps = m.epsilon;

  const int64_t B = x.b(), C = x.c(), H = x.h(), W = x.w();
  const int64_t Hp = dims.hp, Wp = dims.wp;
  const int rd = dims.rd;
  const auto offsets = neighbor_offsets(cfg.radius, cfg.dilation);
  const int64_t Nr = static_cast<int64_t>(offsets.size());
  const size_t plane = static_cast<size_t>(Hp * Wp);

  AffinityStack out = Tensor4::zeros({B, Nr, Hp, Wp});

  enum class Family { Diff, DotBased, Pearson, Dist };
  Family fam;
  switch (m.which) {
    case MetricId::L1:
    case MetricId::L2:
    case MetricId::Rmse:
    case MetricId::GemanMcClure:
    case MetricId::Canberra:
      fam = Family::Diff;
      break;
    case MetricId::Dot:
    case MetricId::ScaledDot:
    case MetricId::Cosine:
    case MetricId::Scs:
    case MetricId::Gfc:
      fam = Family::DotBased;
      break;
    case MetricId::Pearson:
      fam = Family::Pearson;
      break;
    default:
      fam = Family::Dist;
      break;
  }

  const bool needs_norms =
      m.which == MetricId::Cosine || m.which == MetricId::Scs || m.which == MetricId::Gfc;

  std::vector<float> nx2, ny2;
  if (needs_norms || fam == Family::Pearson) {
    nx2.assign(plane, 0.0f);
    ny2.assign(plane, 0.0f);
  }
  std::vector<float> scratch_a, scratch_b;  // emd prefix planes / smith denominator
  if (m.which == MetricId::Emd || m.which == MetricId::Smith) {
    scratch_a.assign(plane, 0.0f);
    if (m.which == MetricId::Emd) scratch_b.assign(plane, 0.0f);
  }

  // full-grid per-batch statistics
  const size_t grid = static_cast<size_t>(H * W);
  std::vector<float> mean_plane, min_plane, den_plane, dist;
  if (fam == Family::Pearson) mean_plane.resize(grid);
  if (fam == Family::Dist) {
    min_plane.resize(grid);
    den_plane.resize(grid);
    dist.resize(static_cast<size_t>(C) * grid);
  }

  for (int64_t b = 0; b < B; ++b) {
    if (fam == Family::Pearson) {
      K.fill(mean_plane.data(), 0.0f, grid);
      for (int64_t c = 0; c < C; ++c) K.acc_sum(mean_plane.data(), x.row(b, c, 0), grid);
      K.final_div(mean_plane.data(), static_cast<float>(C), grid);
    }
    if (fam == Family::Dist) {
      // shift-min normalize every fiber on the full grid once; all crops
      // below read from the same normalized planes
      std::copy(x.row(b, 0, 0), x.row(b, 0, 0) + grid, min_plane.begin());
      for (int64_t c = 1; c < C; ++c) K.min_rows(min_plane.data(), x.row(b, c, 0), grid);
      K.fill(den_plane.data(), 0.0f, grid);
      for (int64_t c = 0; c < C; ++c) {
        K.acc_shift(den_plane.data(), x.row(b, c, 0), min_plane.data(), eps, grid);
      }
      for (int64_t c = 0; c < C; ++c) {
        K.dist_normalize(dist.data() + c * grid, x.row(b, c, 0), min_plane.data(),
                         den_plane.data(), eps, grid);
      }
    }

    for (int64_t n = 0; n < Nr; ++n) {
      const int dy = offsets[n].first, dx = offsets[n].second;
      float* acc = out.row(b, n, 0);  // contiguous H'*W' plane

      auto xrow = [&](int64_t c, int64_t i) { return x.row(b, c, i + rd + dy) + rd + dx; };
      auto yrow = [&](int64_t c, int64_t i) { return x.row(b, c, i + rd) + rd; };

      switch (fam) {
        case Family::Diff: {
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t i = 0; i < Hp; ++i) {
              float* a = acc + i * Wp;
              switch (m.which) {
                case MetricId::L1:
                  K.acc_abs_diff(a, xrow(c, i), yrow(c, i), Wp);
                  break;
                case MetricId::L2:
                case MetricId::Rmse:
                  K.acc_sq_diff(a, xrow(c, i), yrow(c, i), Wp);
                  break;
                case MetricId::GemanMcClure:
                  K.acc_gm_diff(a, xrow(c, i), yrow(c, i), Wp);
                  break;
                default:
                  K.acc_canberra(a, xrow(c, i), yrow(c, i), eps, Wp);
                  break;
              }
            }
          }
          switch (m.which) {
            case MetricId::L1:
            case MetricId::Canberra:
              K.negate(acc, plane);
              break;
            case MetricId::L2:
              K.final_neg_sqrt(acc, plane);
              break;
            case MetricId::Rmse:
              K.final_neg_sqrt_div(acc, static_cast<float>(C), plane);
              break;
            default:
              K.final_neg_div(acc, static_cast<float>(C), plane);
              break;
          }
          break;
        }
        case Family::DotBased: {
          if (needs_norms) {
            K.fill(nx2.data(), 0.0f, plane);
            K.fill(ny2.data(), 0.0f, plane);
          }
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t i = 0; i < Hp; ++i) {
              if (needs_norms) {
                K.acc_dot_norms(acc + i * Wp, nx2.data() + i * Wp, ny2.data() + i * Wp,
                                xrow(c, i), yrow(c, i), Wp);
              } else {
                K.acc_dot(acc + i * Wp, xrow(c, i), yrow(c, i), Wp);
              }
            }
          }
          switch (m.which) {
            case MetricId::Dot:
              break;
            case MetricId::ScaledDot:
              K.final_div(acc, std::sqrt(static_cast<float>(C)), plane);
              break;
            case MetricId::Cosine:
              K.final_cosine(acc, nx2.data(), ny2.data(), eps, plane);
              break;
            case MetricId::Scs:
              K.final_scs(acc, nx2.data(), ny2.data(), kScsNormGuard, plane);
              break;
            default:
              K.final_gfc(acc, nx2.data(), ny2.data(), eps, plane);
              break;
          }
          break;
        }
        case Family::Pearson: {
          K.fill(nx2.data(), 0.0f, plane);
          K.fill(ny2.data(), 0.0f, plane);
          for (int64_t c = 0; c < C; ++c) {
            for (int64_t i = 0; i < Hp; ++i) {
              const float* mxr = mean_plane.data() + (i + rd + dy) * W + rd + dx;
              const float* myr = mean_plane.data() + (i + rd) * W + rd;
              K.acc_centered_dot_norms(acc + i * Wp, nx2.data() + i * Wp, ny2.data() + i * Wp,
                                       xrow(c, i), yrow(c, i), mxr, myr, Wp);
            }
          }
          K.final_cosine(acc, nx2.data(), ny2.data(), eps, plane);
          break;
        }
        case Family::Dist: {
          if (m.which == MetricId::Emd) {
            K.fill(scratch_a.data(), 0.0f, plane);
            K.fill(scratch_b.data(), 0.0f, plane);
          } else if (m.which == MetricId::Smith) {
            K.fill(scratch_a.data(), 0.0f, plane);
          }
          for (int64_t c = 0; c < C; ++c) {
            const float* pbase = dist.data() + c * grid;
            for (int64_t i = 0; i < Hp; ++i) {
              const float* pr = pbase + (i + rd + dy) * W + rd + dx;
              const float* qr = pbase + (i + rd) * W + rd;
              float* a = acc + i * Wp;
              switch (m.which) {
                case MetricId::Chi2One:
                  K.acc_chi2_center(a, pr, qr, eps, Wp);
                  break;
                case MetricId::Chi2Two:
                  K.acc_chi2_sym(a, pr, qr, eps, Wp);
                  break;
                case MetricId::Hellinger:
                case MetricId::SquaredChord:
                  K.acc_sqrtdiff2(a, pr, qr, Wp);
                  break;
                case MetricId::Jeffrey:
                  K.acc_jeffrey(a, pr, qr, eps, Wp);
                  break;
                case MetricId::Emd:
                  K.acc_emd(scratch_a.data() + i * Wp, scratch_b.data() + i * Wp, a, pr, qr, Wp);
                  break;
                default:
                  K.acc_smith(a, scratch_a.data() + i * Wp, pr, qr, Wp);
                  break;
              }
            }
          }
          switch (m.which) {
            case MetricId::Hellinger:
              K.final_neg_sqrt_div_by(acc, std::sqrt(2.0f), plane);
              break;
            case MetricId::Smith:
              K.final_smith(acc, scratch_a.data(), plane);
              break;
            default:
              K.negate(acc, plane);
              break;
          }
          break;
        }
      }
    }
  }

  if (!out.all_finite()) {
    throw ValidationError("affinity stack contains non-finite values (metric '" + m.id + "')");
  }
  return out;
}

AffinityStack affinity_forward_naive(const Tensor4& x, const NfpConfig& cfg) {
  const WindowDims dims = window_dims(x, cfg);
  const MetricDescriptor& m = metric_by_id(cfg.metric);
  const int64_t B = x.b(), C = x.c();
  const int64_t Hp = dims.hp, Wp = dims.wp;
  const int rd = dims.rd;
  const auto offsets = neighbor_offsets(cfg.radius, cfg.dilation);
  const int64_t Nr = static_cast<int64_t>(offsets.size());

  AffinityStack out = Tensor4::zeros({B, Nr, Hp, Wp});
  std::vector<float> neighbor(static_cast<size_t>(C)), center(static_cast<size_t>(C));
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t n = 0; n < Nr; ++n) {
      const int dy = offsets[n].first, dx = offsets[n].second;
      for (int64_t i = 0; i < Hp; ++i) {
        for (int64_t j = 0; j < Wp; ++j) {
          for (int64_t c = 0; c < C; ++c) {
            neighbor[c] = x.at(b, c, i + rd + dy, j + rd + dx);
            center[c] = x.at(b, c, i + rd, j + rd);
          }
          out.at(b, n, i, j) = similarity(m, neighbor, center);
        }
      }
    }
  }
  if (!out.all_finite()) {
    throw ValidationError("affinity stack contains non-finite values (metric '" + m.id + "')");
  }
  return out;
}

Matrix nfp_pool(const AffinityStack& s) {
  if (s.h() * s.w() < 1) {
    throw ShapeError("nfp_pool requires a non-empty spatial extent, got H'=" +
                     std::to_string(s.h()) + " W'=" + std::to_string(s.w()));
  }
  return global_average_pool(s);
}

NfpHead NfpHead::init(int projection_out, int n_r, uint64_t seed) {
  if (projection_out < 1 || n_r < 1) throw ConfigError("head dimensions must be positive");
  NfpHead head;
  head.n_r = n_r;
  head.weight = Matrix(projection_out, n_r);
  head.bias.assign(static_cast<size_t>(projection_out), 0.0f);
  const float bound = 1.0f / std::sqrt(static_cast<float>(n_r));
  Rng rng(seed);
  for (auto& w : head.weight.data) w = rng.uniform(-bound, bound);
  return head;
}

NfpHead NfpHead::identity_head(int n_r) {
  if (n_r < 1) throw ConfigError("head dimensions must be positive");
  NfpHead head;
  head.identity = true;
  head.n_r = n_r;
  return head;
}

Matrix project(const Matrix& pooled, const NfpHead& head) {
  if (head.identity) {
    if (pooled.cols != head.n_r) {
      throw ShapeError("identity projection expects " + std::to_string(head.n_r) +
                       " pooled channels, got " + std::to_string(pooled.cols));
    }
    return pooled;
  }
  if (pooled.cols != head.weight.cols ||
      static_cast<int64_t>(head.bias.size()) != head.weight.rows) {
    throw ShapeError("projection dimension mismatch: pooled cols " +
                     std::to_string(pooled.cols) + " vs weight " +
                     std::to_string(head.weight.rows) + "x" + std::to_string(head.weight.cols));
  }
  Matrix out(pooled.rows, head.weight.rows);
  for (int64_t b = 0; b < pooled.rows; ++b) {
    for (int64_t o = 0; o < head.weight.rows; ++o) {
      float acc = head.bias[o];
      const float* wr = head.weight.row(o);
      const float* pr = pooled.row(b);
      for (int64_t n = 0; n < pooled.cols; ++n) acc += pr[n] * wr[n];
      out.at(b, o) = acc;
    }
  }
  return out;
}

Matrix fuse(const Matrix& gap_vec, const Matrix& nfp_vec) {
  if (gap_vec.rows != nfp_vec.rows || gap_vec.cols != nfp_vec.cols) {
    throw ShapeError("fuse shape mismatch: " + std::to_string(gap_vec.rows) + "x" +
                     std::to_string(gap_vec.cols) + " vs " + std::to_string(nfp_vec.rows) + "x" +
                     std::to_string(nfp_vec.cols));
  }
  Matrix out(gap_vec.rows, gap_vec.cols);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = gap_vec.data[i] * nfp_vec.data[i];
  return out;
}

Matrix nfp_forward(const Tensor4& x, const NfpConfig& cfg, const NfpHead& head,
                   NfpForwardCache* cache) {
  if (head.out_channels() != x.c()) {
    throw ShapeError("fusion requires projection width C'=" +
                     std::to_string(head.out_channels()) + " to equal input channels C=" +
                     std::to_string(x.c()));
  }
  AffinityStack stack = affinity_forward(x, cfg);
  Matrix pooled = nfp_pool(stack);
  Matrix proj = project(pooled, head);
  Matrix gap = global_average_pool(x);
  Matrix out = fuse(gap, proj);
  if (cache) {
    cache->input = x;
    cache->gap = gap;
    cache->pooled = pooled;
    cache->nfp_vec = proj;
    cache->valid = true;
  }
  return out;
}

void nfp_head_backward(const Matrix& grad_out, const NfpForwardCache& cache,
                       const NfpHead& head, Matrix* grad_weight,
                       std::vector<float>* grad_bias) {
  if (!cache.valid) throw StateError("nfp_head_backward called without a valid forward cache");
  if (head.identity) {
    if (grad_weight) *grad_weight = Matrix();
    if (grad_bias) grad_bias->clear();
    return;
  }
  const int64_t B = grad_out.rows, Cp = grad_out.cols, Nr = head.weight.cols;
  Matrix gw(Cp, Nr);
  std::vector<float> gb(static_cast<size_t>(Cp), 0.0f);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t o = 0; o < Cp; ++o) {
      const float gproj = grad_out.at(b, o) * cache.gap.at(b, o);
      gb[o] += gproj;
      const float* pr = cache.pooled.row(b);
      float* gwr = gw.row(o);
      for (int64_t n = 0; n < Nr; ++n) gwr[n] += gproj * pr[n];
    }
  }
  if (grad_weight) *grad_weight = std::move(gw);
  if (grad_bias) *grad_bias = std::move(gb);
}

NfpGradients nfp_backward(const Matrix& grad_out, const NfpForwardCache& cache,
                          const NfpConfig& cfg, const NfpHead& head, bool allow_numeric) {
  if (!cache.valid) throw StateError("nfp_backward called without a valid forward cache");
  const MetricDescriptor& m = metric_by_id(cfg.metric);
  if (!m.has_analytic_gradient && !allow_numeric) {
    throw ConfigError("metric '" + m.id +
                      "' has no analytic gradient; enable the numeric fallback");
  }

  const Tensor4& x = cache.input;
  const WindowDims dims = window_dims(x, cfg);
  const int64_t B = x.b(), C = x.c(), H = x.h(), W = x.w();
  const int64_t Hp = dims.hp, Wp = dims.wp;
  const int rd = dims.rd;
  const auto offsets = neighbor_offsets(cfg.radius, cfg.dilation);
  const int64_t Nr = static_cast<int64_t>(offsets.size());

  if (grad_out.rows != B || grad_out.cols != head.out_channels()) {
    throw ShapeError("grad_out shape mismatch in nfp_backward");
  }

  // fuse: d/d(gap) = g .* nfp_vec, d/d(proj) = g .* gap
  Matrix g_proj(B, grad_out.cols);
  Matrix g_gap(B, grad_out.cols);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t o = 0; o < grad_out.cols; ++o) {
      g_proj.at(b, o) = grad_out.at(b, o) * cache.gap.at(b, o);
      g_gap.at(b, o) = grad_out.at(b, o) * cache.nfp_vec.at(b, o);
    }
  }

  NfpGradients grads;
  nfp_head_backward(grad_out, cache, head, &grads.grad_weight, &grads.grad_bias);

  // projection: d/d(pooled) = g_proj * W
  Matrix g_pooled(B, Nr);
  if (head.identity) {
    g_pooled = g_proj;
  } else {
    for (int64_t b = 0; b < B; ++b) {
      for (int64_t n = 0; n < Nr; ++n) {
        float acc = 0.0f;
        for (int64_t o = 0; o < head.weight.rows; ++o) {
          acc += g_proj.at(b, o) * head.weight.at(o, n);
        }
        g_pooled.at(b, n) = acc;
      }
    }
  }

  // spatial mean spreads 1/(H'W'); metric gradients route to both fibers
  std::vector<double> gx(static_cast<size_t>(x.size()), 0.0);
  const double inv_area = 1.0 / static_cast<double>(Hp * Wp);
  std::vector<double> fiber_x(static_cast<size_t>(C)), fiber_y(static_cast<size_t>(C));
  std::vector<double> dfx(static_cast<size_t>(C)), dfy(static_cast<size_t>(C));
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t n = 0; n < Nr; ++n) {
      const int dy = offsets[n].first, dx = offsets[n].second;
      const double gs_base = static_cast<double>(g_pooled.at(b, n)) * inv_area;
      if (gs_base == 0.0) continue;
      for (int64_t i = 0; i < Hp; ++i) {
        for (int64_t j = 0; j < Wp; ++j) {
          const int64_t ny_ = i + rd + dy, nx_ = j + rd + dx;
          const int64_t cy = i + rd, cx = j + rd;
          for (int64_t c = 0; c < C; ++c) {
            fiber_x[c] = x.at(b, c, ny_, nx_);
            fiber_y[c] = x.at(b, c, cy, cx);
          }
          similarity_gradient_d(m, fiber_x, fiber_y, dfx, dfy);
          for (int64_t c = 0; c < C; ++c) {
            gx[static_cast<size_t>(x.index(b, c, ny_, nx_))] += gs_base * dfx[c];
            gx[static_cast<size_t>(x.index(b, c, cy, cx))] += gs_base * dfy[c];
          }
        }
      }
    }
  }

  // GAP branch
  const double inv_grid = 1.0 / static_cast<double>(H * W);
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t c = 0; c < C; ++c) {
      const double g = static_cast<double>(g_gap.at(b, c)) * inv_grid;
      for (int64_t h = 0; h < H; ++h) {
        for (int64_t w = 0; w < W; ++w) {
          gx[static_cast<size_t>(x.index(b, c, h, w))] += g;
        }
      }
    }
  }

  std::vector<float> gxf(gx.size());
  for (size_t i = 0; i < gx.size(); ++i) gxf[i] = static_cast<float>(gx[i]);
  grads.grad_x = Tensor4::create(x.shape(), std::move(gxf));
  return grads;
}

int64_t nfp_parameter_count(int64_t c_prime, int64_t n_r) { return c_prime * n_r + c_prime; }

void save_nfp_layer(const std::string& dir, const NfpConfig& cfg, const NfpHead& head) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json j;
  j["radius"] = cfg.radius;
  j["dilation"] = cfg.dilation;
  j["metric"] = cfg.metric;
  if (cfg.projection_out == 0) {
    j["projection_out"] = "match-input";
  } else {
    j["projection_out"] = cfg.projection_out;
  }
  j["identity"] = head.identity;
  j["n_r"] = head.n_r;
  std::ofstream out(fs::path(dir) / "config.json");
  out << j.dump(2) << "\n";
  if (!head.identity) {
    write_npy(head.weight, (fs::path(dir) / "weight.npy").string());
    Matrix bias(1, static_cast<int64_t>(head.bias.size()));
    bias.data = head.bias;
    write_npy(bias, (fs::path(dir) / "bias.npy").string());
  }
}

std::pair<NfpConfig, NfpHead> load_nfp_layer(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "config.json");
  if (!in) throw FormatError("cannot open " + dir + "/config.json");
  nlohmann::json j = nlohmann::json::parse(in);
  NfpConfig cfg;
  cfg.radius = j.at("radius").get<int>();
  cfg.dilation = j.at("dilation").get<int>();
  cfg.metric = j.at("metric").get<std::string>();
  if (j.at("projection_out").is_string()) {
    cfg.projection_out = 0;
  } else {
    cfg.projection_out = j.at("projection_out").get<int>();
  }
  validate_config(cfg);
  NfpHead head;
  if (j.value("identity", false)) {
    head = NfpHead::identity_head(j.at("n_r").get<int>());
  } else {
    head.n_r = j.at("n_r").get<int>();
    head.weight = read_npy_matrix((fs::path(dir) / "weight.npy").string());
    Matrix bias = read_npy_matrix((fs::path(dir) / "bias.npy").string());
    head.bias = bias.data;
    if (head.weight.cols != head.n_r ||
        static_cast<int64_t>(head.bias.size()) != head.weight.rows) {
      throw FormatError(dir + ": head weight/bias shapes are inconsistent");
    }
  }
  return {cfg, head};
}

}  // namespace nfp
