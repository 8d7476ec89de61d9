#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "nfp/errors.hpp"
#include "nfp/layer.hpp"

using namespace nfp;

namespace {

// Independent double-precision forward of the full composition, written
// against the definitions rather than the library code paths. Used as the
// finite-difference oracle for nfp_backward.
double forward_loss_oracle(const std::vector<double>& xdata, int64_t B, int64_t C, int64_t H,
                           int64_t W, const NfpConfig& cfg, const std::vector<double>& weight,
                           const std::vector<double>& bias, const Matrix& grad_out) {
  const MetricDescriptor& m = metric_by_id(cfg.metric);
  const int k = cfg.kernel_size();
  const int rd = cfg.radius * cfg.dilation;
  const int64_t Hp = H - cfg.dilation * (k - 1);
  const int64_t Wp = W - cfg.dilation * (k - 1);
  auto offs = neighbor_offsets(cfg.radius, cfg.dilation);
  const int64_t Nr = static_cast<int64_t>(offs.size());
  auto at = [&](int64_t b, int64_t c, int64_t h, int64_t w) {
    return xdata[((b * C + c) * H + h) * W + w];
  };

  double loss = 0.0;
  std::vector<double> fx(static_cast<size_t>(C)), fy(static_cast<size_t>(C));
  for (int64_t b = 0; b < B; ++b) {
    // pooled affinities
    std::vector<double> pooled(static_cast<size_t>(Nr), 0.0);
    for (int64_t n = 0; n < Nr; ++n) {
      double acc = 0.0;
      for (int64_t i = 0; i < Hp; ++i) {
        for (int64_t j = 0; j < Wp; ++j) {
          for (int64_t c = 0; c < C; ++c) {
            fx[c] = at(b, c, i + rd + offs[n].first, j + rd + offs[n].second);
            fy[c] = at(b, c, i + rd, j + rd);
          }
          acc += similarity_d(m, fx, fy);
        }
      }
      pooled[static_cast<size_t>(n)] = acc / static_cast<double>(Hp * Wp);
    }
    for (int64_t o = 0; o < C; ++o) {
      double proj = bias[static_cast<size_t>(o)];
      for (int64_t n = 0; n < Nr; ++n) {
        proj += weight[o * Nr + n] * pooled[static_cast<size_t>(n)];
      }
      double gap = 0.0;
      for (int64_t h = 0; h < H; ++h) {
        for (int64_t w = 0; w < W; ++w) gap += at(b, o, h, w);
      }
      gap /= static_cast<double>(H * W);
      loss += static_cast<double>(grad_out.at(b, o)) * gap * proj;
    }
  }
  return loss;
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max({1.0, std::fabs(got), std::fabs(want)});
}

}  // namespace

TEST_CASE("zero upstream gradient gives zero parameter and input gradients") {
  nfp::Rng rng(113);
  auto x = testutil::random_tensor(rng, {1, 3, 6, 6});
  NfpConfig cfg;
  NfpHead head = NfpHead::init(3, 8, 9);
  NfpForwardCache cache;
  nfp_forward(x, cfg, head, &cache);
  Matrix zero(1, 3, 0.0f);
  auto grads = nfp_backward(zero, cache, cfg, head);
  for (float v : grads.grad_x.values()) CHECK(v == 0.0f);
  for (float v : grads.grad_weight.data) CHECK(v == 0.0f);
  for (float v : grads.grad_bias) CHECK(v == 0.0f);
}

TEST_CASE("backward matches finite differences end to end") {
  nfp::Rng rng(127);
  for (const char* metric : {"cosine", "dot", "scaled_dot"}) {
    const int64_t B = 1, C = 3, H = 6, W = 6;
    auto x = testutil::random_tensor(rng, {B, C, H, W}, 0.2f, 1.2f);
    NfpConfig cfg;
    cfg.metric = metric;
    NfpHead head = NfpHead::init(static_cast<int>(C), 8, 21);
    Matrix grad_out(B, C);
    for (auto& v : grad_out.data) v = rng.uniform(-1.0f, 1.0f);

    NfpForwardCache cache;
    nfp_forward(x, cfg, head, &cache);
    auto grads = nfp_backward(grad_out, cache, cfg, head);

    std::vector<double> xd(x.values().begin(), x.values().end());
    std::vector<double> wd(head.weight.data.begin(), head.weight.data.end());
    std::vector<double> bd(head.bias.begin(), head.bias.end());
    const double h = 1e-3;

    double worst = 0.0;
    for (size_t i = 0; i < xd.size(); ++i) {
      double keep = xd[i];
      xd[i] = keep + h;
      double fp = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
      xd[i] = keep - h;
      double fm = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
      xd[i] = keep;
      worst = std::max(worst, rel_err(grads.grad_x.values()[i], (fp - fm) / (2 * h)));
    }
    INFO("metric " << metric << " grad_x");
    CHECK(worst < 1e-3);

    worst = 0.0;
    for (size_t i = 0; i < wd.size(); ++i) {
      double keep = wd[i];
      wd[i] = keep + h;
      double fp = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
      wd[i] = keep - h;
      double fm = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
      wd[i] = keep;
      worst = std::max(worst, rel_err(grads.grad_weight.data[i], (fp - fm) / (2 * h)));
    }
    INFO("metric " << metric << " grad_W");
    CHECK(worst < 1e-3);

    worst = 0.0;
    for (size_t i = 0; i < bd.size(); ++i) {
      double keep = bd[i];
      bd[i] = keep + h;
      double fp = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
      bd[i] = keep - h;
      double fm = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
      bd[i] = keep;
      worst = std::max(worst, rel_err(grads.grad_bias[i], (fp - fm) / (2 * h)));
    }
    INFO("metric " << metric << " grad_b");
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("numeric fallback backward matches finite differences") {
  nfp::Rng rng(131);
  const int64_t B = 1, C = 2, H = 5, W = 5;
  auto x = testutil::random_tensor(rng, {B, C, H, W}, 0.3f, 1.5f);
  NfpConfig cfg;
  cfg.metric = "geman_mcclure";
  NfpHead head = NfpHead::init(static_cast<int>(C), 8, 33);
  Matrix grad_out(B, C, 1.0f);

  NfpForwardCache cache;
  nfp_forward(x, cfg, head, &cache);
  CHECK_THROWS_AS(nfp_backward(grad_out, cache, cfg, head), ConfigError);

  auto grads = nfp_backward(grad_out, cache, cfg, head, /*allow_numeric=*/true);
  std::vector<double> xd(x.values().begin(), x.values().end());
  std::vector<double> wd(head.weight.data.begin(), head.weight.data.end());
  std::vector<double> bd(head.bias.begin(), head.bias.end());
  const double h = 1e-3;
  double worst = 0.0;
  for (size_t i = 0; i < xd.size(); ++i) {
    double keep = xd[i];
    xd[i] = keep + h;
    double fp = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
    xd[i] = keep - h;
    double fm = forward_loss_oracle(xd, B, C, H, W, cfg, wd, bd, grad_out);
    xd[i] = keep;
    worst = std::max(worst, rel_err(grads.grad_x.values()[i], (fp - fm) / (2 * h)));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("fusion identity: all-ones NFP branch reduces to the GAP gradient") {
  nfp::Rng rng(137);
  auto x = testutil::random_tensor(rng, {2, 3, 6, 6});
  NfpConfig cfg;
  NfpHead head;
  head.n_r = 8;
  head.weight = Matrix(3, 8, 0.0f);
  head.bias = {1.0f, 1.0f, 1.0f};

  NfpForwardCache cache;
  Matrix out = nfp_forward(x, cfg, head, &cache);
  CHECK(out == cache.gap);  // branch frozen at ones

  Matrix grad_out(2, 3);
  for (auto& v : grad_out.data) v = rng.uniform(-1.0f, 1.0f);
  auto grads = nfp_backward(grad_out, cache, cfg, head);
  const float inv = 1.0f / 36.0f;
  for (int64_t b = 0; b < 2; ++b) {
    for (int64_t c = 0; c < 3; ++c) {
      const float want = grad_out.at(b, c) * inv;
      for (int64_t h = 0; h < 6; ++h) {
        for (int64_t w = 0; w < 6; ++w) {
          CHECK(grads.grad_x.at(b, c, h, w) == doctest::Approx(want).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("head-only backward agrees with the full backward") {
  nfp::Rng rng(139);
  auto x = testutil::random_tensor(rng, {2, 4, 7, 7});
  NfpConfig cfg;
  cfg.metric = "l2";
  NfpHead head = NfpHead::init(4, 8, 43);
  NfpForwardCache cache;
  nfp_forward(x, cfg, head, &cache);
  Matrix grad_out(2, 4);
  for (auto& v : grad_out.data) v = rng.uniform(-1.0f, 1.0f);

  auto grads = nfp_backward(grad_out, cache, cfg, head);
  Matrix gw;
  std::vector<float> gb;
  nfp_head_backward(grad_out, cache, head, &gw, &gb);
  CHECK(gw == grads.grad_weight);
  CHECK(gb == grads.grad_bias);
}

TEST_CASE("backward without a cache is a state error") {
  NfpForwardCache empty;
  NfpConfig cfg;
  NfpHead head = NfpHead::init(2, 8, 1);
  Matrix g(1, 2);
  CHECK_THROWS_AS(nfp_backward(g, empty, cfg, head), StateError);
  CHECK_THROWS_AS(nfp_head_backward(g, empty, head, nullptr, nullptr), StateError);
}
