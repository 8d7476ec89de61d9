#include "nfp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>

#include "nfp/errors.hpp"
#include "nfp/metrics.hpp"
#include "nfp/rng.hpp"
#include "nfp/silhouette.hpp"

namespace nfp {

namespace {

constexpr float kAdamBeta1 = 0.9f;
constexpr float kAdamBeta2 = 0.999f;
constexpr float kAdamEps = 1e-8f;

Tensor4 conv3x3_s2_relu(const Tensor4& x, const std::vector<float>& w, int out_ch) {
  const int64_t B = x.b(), Cin = x.c(), H = x.h(), W = x.w();
  if (static_cast<int64_t>(w.size()) != static_cast<int64_t>(out_ch) * Cin * 9) {
    throw ShapeError("filter bank weight size mismatch");
  }
  if (H < 3 || W < 3) throw ShapeError("filter bank input smaller than 3x3");
  const int64_t Ho = (H - 3) / 2 + 1, Wo = (W - 3) / 2 + 1;
  Tensor4 out = Tensor4::zeros({B, out_ch, Ho, Wo});
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t o = 0; o < out_ch; ++o) {
      for (int64_t i = 0; i < Ho; ++i) {
        float* orow = out.row(b, o, i);
        for (int64_t ic = 0; ic < Cin; ++ic) {
          const float* wk = w.data() + (o * Cin + ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const float* xr = x.row(b, ic, 2 * i + ky);
            const float w0 = wk[ky * 3], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
            for (int64_t j = 0; j < Wo; ++j) {
              const float* px = xr + 2 * j;
              orow[j] += px[0] * w0 + px[1] * w1 + px[2] * w2;
            }
          }
        }
        for (int64_t j = 0; j < Wo; ++j) orow[j] = std::max(orow[j], 0.0f);
      }
    }
  }
  return out;
}

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

struct AdamState {
  std::vector<float> m, v;
  explicit AdamState(size_t n) : m(n, 0.0f), v(n, 0.0f) {}
};

void adam_step(std::vector<float>& p, const std::vector<float>& g, AdamState& s, float lr,
               int64_t t) {
  const float b1t = 1.0f - std::pow(kAdamBeta1, static_cast<float>(t));
  const float b2t = 1.0f - std::pow(kAdamBeta2, static_cast<float>(t));
  for (size_t i = 0; i < p.size(); ++i) {
    s.m[i] = kAdamBeta1 * s.m[i] + (1.0f - kAdamBeta1) * g[i];
    s.v[i] = kAdamBeta2 * s.v[i] + (1.0f - kAdamBeta2) * g[i] * g[i];
    float mhat = s.m[i] / b1t;
    float vhat = s.v[i] / b2t;
    p[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

struct TapData {
  Matrix gap;     // N x C_tap
  Matrix pooled;  // N x N_r, empty in baseline mode
};

struct SplitData {
  std::vector<TapData> taps;
  int64_t n = 0;
};

SplitData precompute_split(const FilterBank& bank, const LabeledSet& set,
                           const std::vector<int>& taps, const std::vector<NfpConfig>& cfgs,
                           bool baseline) {
  SplitData sd;
  sd.n = set.images.b();
  Tensor4 f1 = bank.stage1(set.images);
  Tensor4 f2;
  bool need2 = std::find(taps.begin(), taps.end(), 2) != taps.end();
  if (need2) f2 = bank.stage2(f1);
  for (size_t t = 0; t < taps.size(); ++t) {
    const Tensor4& f = taps[t] == 1 ? f1 : f2;
    TapData td;
    td.gap = global_average_pool(f);
    if (!baseline) td.pooled = nfp_pool(affinity_forward(f, cfgs[t]));
    sd.taps.push_back(std::move(td));
  }
  return sd;
}

// fused per-tap features for the given rows, concatenated
Matrix assemble_features(const SplitData& sd, const Model& model,
                         const std::vector<int64_t>& rows) {
  Matrix f(static_cast<int64_t>(rows.size()), model.feature_width());
  int64_t off = 0;
  for (size_t t = 0; t < sd.taps.size(); ++t) {
    const TapData& td = sd.taps[t];
    const int64_t ct = td.gap.cols;
    for (size_t r = 0; r < rows.size(); ++r) {
      const float* gap = td.gap.row(rows[r]);
      float* dst = f.row(static_cast<int64_t>(r)) + off;
      if (model.baseline) {
        for (int64_t c = 0; c < ct; ++c) dst[c] = gap[c];
      } else {
        const NfpHead& head = model.heads[t];
        const float* pooled = td.pooled.row(rows[r]);
        for (int64_t c = 0; c < ct; ++c) {
          float proj = head.bias[c];
          const float* wr = head.weight.row(c);
          for (int64_t n = 0; n < head.weight.cols; ++n) proj += pooled[n] * wr[n];
          dst[c] = gap[c] * proj;
        }
      }
    }
    off += ct;
  }
  return f;
}

struct ForwardStats {
  double loss_sum = 0.0;
  int64_t correct = 0;
};

// softmax cross-entropy; writes per-sample probabilities when grads follow
ForwardStats logits_and_loss(const Matrix& f, const Model& model,
                             const std::vector<int64_t>& rows, const std::vector<int>& labels,
                             Matrix* probs_out) {
  const int64_t B = f.rows, K = model.classes;
  Matrix probs(B, K);
  ForwardStats stats;
  for (int64_t b = 0; b < B; ++b) {
    float* pr = probs.row(b);
    for (int64_t k = 0; k < K; ++k) {
      float acc = model.classifier_bias[k];
      const float* wr = model.classifier.row(k);
      const float* fr = f.row(b);
      for (int64_t d = 0; d < f.cols; ++d) acc += wr[d] * fr[d];
      pr[k] = acc;
    }
    float mx = pr[0];
    int64_t arg = 0;
    for (int64_t k = 1; k < K; ++k) {
      if (pr[k] > mx) {
        mx = pr[k];
        arg = k;
      }
    }
    float denom = 0.0f;
    for (int64_t k = 0; k < K; ++k) {
      pr[k] = std::exp(pr[k] - mx);
      denom += pr[k];
    }
    for (int64_t k = 0; k < K; ++k) pr[k] /= denom;
    const int y = labels[static_cast<size_t>(rows[b])];
    stats.loss_sum += -std::log(std::max(pr[y], 1e-30f));
    if (arg == y) ++stats.correct;
  }
  if (probs_out) *probs_out = std::move(probs);
  return stats;
}

struct Snapshot {
  std::vector<Matrix> head_weights;
  std::vector<std::vector<float>> head_biases;
  Matrix classifier;
  std::vector<float> classifier_bias;
};

Snapshot take_snapshot(const Model& m) {
  Snapshot s;
  for (const auto& h : m.heads) {
    s.head_weights.push_back(h.weight);
    s.head_biases.push_back(h.bias);
  }
  s.classifier = m.classifier;
  s.classifier_bias = m.classifier_bias;
  return s;
}

void restore_snapshot(Model& m, const Snapshot& s) {
  for (size_t t = 0; t < m.heads.size(); ++t) {
    m.heads[t].weight = s.head_weights[t];
    m.heads[t].bias = s.head_biases[t];
  }
  m.classifier = s.classifier;
  m.classifier_bias = s.classifier_bias;
}

}  // namespace

FilterBank FilterBank::create(int c1, int c2, uint64_t seed) {
  if (c1 < 1 || c2 < 1) throw ConfigError("filter bank widths must be positive");
  FilterBank bank;
  bank.c1 = c1;
  bank.c2 = c2;
  bank.w1.resize(static_cast<size_t>(c1) * 3 * 9);
  bank.w2.resize(static_cast<size_t>(c2) * c1 * 9);
  Rng rng(seed);
  // gain above plain He keeps GAP feature magnitudes near 1 for inputs
  // standardized to std 0.15, so the lr=0.001 classifier converges within
  // the default epoch budget
  const float gain = 5.0f;
  const float s1 = gain * std::sqrt(2.0f / (3 * 9));
  for (auto& w : bank.w1) w = s1 * rng.gaussian();
  const float s2 = gain * std::sqrt(2.0f / (static_cast<float>(c1) * 9));
  for (auto& w : bank.w2) w = s2 * rng.gaussian();
  return bank;
}

Tensor4 FilterBank::stage1(const Tensor4& x) const { return conv3x3_s2_relu(x, w1, c1); }

Tensor4 FilterBank::stage2(const Tensor4& f1) const { return conv3x3_s2_relu(f1, w2, c2); }

Tensor4 FilterBank::features(const Tensor4& x, int stage) const {
  Tensor4 f1 = stage1(x);
  if (stage == 1) return f1;
  if (stage == 2) return stage2(f1);
  throw ConfigError("filter bank has stages 1 and 2, got " + std::to_string(stage));
}

int FilterBank::stage_channels(int stage) const {
  if (stage == 1) return c1;
  if (stage == 2) return c2;
  throw ConfigError("filter bank has stages 1 and 2, got " + std::to_string(stage));
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.metric = j.value("metric", cfg.metric);
  if (j.contains("taps")) cfg.taps = j.at("taps").get<std::vector<int>>();
  cfg.baseline = j.value("baseline", cfg.baseline);
  if (j.contains("bank_channels")) {
    auto bc = j.at("bank_channels").get<std::vector<int>>();
    if (bc.size() != 2) throw ConfigError("bank_channels needs exactly 2 entries");
    cfg.bank_c1 = bc[0];
    cfg.bank_c2 = bc[1];
  }
  return cfg;
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["seed"] = cfg.seed;
  j["metric"] = cfg.metric;
  j["taps"] = cfg.taps;
  j["baseline"] = cfg.baseline;
  j["bank_channels"] = {cfg.bank_c1, cfg.bank_c2};
  return j;
}

int64_t Model::feature_width() const {
  int64_t w = 0;
  for (int tap : taps) w += bank.stage_channels(tap);
  return w;
}

int64_t Model::trainable_parameter_count() const {
  int64_t count = classifier.rows * classifier.cols +
                  static_cast<int64_t>(classifier_bias.size());
  for (const auto& h : heads) count += h.parameter_count();
  return count;
}

nlohmann::ordered_json report_to_json(const TrainReport& r) {
  nlohmann::ordered_json j;
  j["config"] = train_config_to_json(r.config);
  j["epochs_run"] = r.train_loss.size();
  j["best_epoch"] = r.best_epoch;
  j["train_loss"] = r.train_loss;
  j["train_acc"] = r.train_acc;
  j["val_loss"] = r.val_loss;
  j["val_acc"] = r.val_acc;
  j["test_accuracy"] = r.test_accuracy;
  j["parameter_count"] = r.parameter_count;
  j["silhouette"] = r.silhouette;
  j["meta"] = {{"created", timestamp_utc()}, {"wall_time_sec", r.wall_time_sec}};
  return j;
}

std::pair<Model, TrainReport> train(const TrainConfig& cfg, const DatasetBundle& data) {
  if (cfg.learning_rate <= 0 || cfg.batch_size < 1 || cfg.max_epochs < 1 || cfg.patience < 1) {
    throw ConfigError("hyperparameters must be positive");
  }
  if (cfg.taps.empty()) throw ConfigError("at least one tap is required");
  for (int t : cfg.taps) {
    if (t != 1 && t != 2) throw ConfigError("taps must be stage indices 1 or 2");
  }
  if (data.train.labels.empty() || data.val.labels.empty() || data.test.labels.empty()) {
    throw ConfigError("all three splits must be non-empty");
  }

  const auto t_start = std::chrono::steady_clock::now();

  int classes = 0;
  for (const auto* set : {&data.train, &data.val, &data.test}) {
    for (int l : set->labels) classes = std::max(classes, l + 1);
  }

  Model model;
  model.bank = FilterBank::create(cfg.bank_c1, cfg.bank_c2, derive_seed(cfg.seed, 101));
  model.taps = cfg.taps;
  model.baseline = cfg.baseline;
  model.classes = classes;
  for (size_t t = 0; t < cfg.taps.size(); ++t) {
    NfpConfig lc;
    lc.metric = cfg.metric;
    lc.projection_out = 0;  // match tap channels
    model.cfgs.push_back(lc);
    if (!cfg.baseline) {
      int ct = model.bank.stage_channels(cfg.taps[t]);
      model.heads.push_back(
          NfpHead::init(ct, lc.neighbor_count(), derive_seed(cfg.seed, 201 + t)));
    }
  }
  model.classifier = Matrix(classes, model.feature_width());
  model.classifier_bias.assign(static_cast<size_t>(classes), 0.0f);

  SplitData train_sd = precompute_split(model.bank, data.train, model.taps, model.cfgs,
                                        model.baseline);
  SplitData val_sd = precompute_split(model.bank, data.val, model.taps, model.cfgs,
                                      model.baseline);

  std::vector<AdamState> head_w_state, head_b_state;
  for (const auto& h : model.heads) {
    head_w_state.emplace_back(h.weight.data.size());
    head_b_state.emplace_back(h.bias.size());
  }
  AdamState cls_w_state(model.classifier.data.size());
  AdamState cls_b_state(model.classifier_bias.size());
  int64_t step = 0;

  TrainReport report;
  report.config = cfg;
  report.parameter_count = model.trainable_parameter_count();

  std::vector<int64_t> order(static_cast<size_t>(train_sd.n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int64_t> all_val(static_cast<size_t>(val_sd.n));
  std::iota(all_val.begin(), all_val.end(), 0);

  double best_val_acc = -1.0;
  Snapshot best;
  int bad_epochs = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // fresh pass order each epoch, still fully seeded
    Rng shuffle_rng(derive_seed(cfg.seed, 301 + static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.below(i));
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    int64_t correct = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<int64_t> rows(order.begin() + start, order.begin() + end);
      const int64_t B = static_cast<int64_t>(rows.size());

      Matrix f = assemble_features(train_sd, model, rows);
      Matrix probs;
      ForwardStats stats = logits_and_loss(f, model, rows, data.train.labels, &probs);
      if (!std::isfinite(stats.loss_sum)) {
        throw DivergenceError("training loss diverged at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(start / cfg.batch_size));
      }
      loss_sum += stats.loss_sum;
      correct += stats.correct;

      // d(loss)/d(logit) = (softmax - onehot) / B
      Matrix dlogit(B, model.classes);
      for (int64_t b = 0; b < B; ++b) {
        const int y = data.train.labels[static_cast<size_t>(rows[b])];
        for (int64_t k = 0; k < model.classes; ++k) {
          dlogit.at(b, k) = (probs.at(b, k) - (k == y ? 1.0f : 0.0f)) / static_cast<float>(B);
        }
      }

      std::vector<float> g_cls(model.classifier.data.size(), 0.0f);
      std::vector<float> g_cls_b(model.classifier_bias.size(), 0.0f);
      Matrix df(B, f.cols);
      for (int64_t b = 0; b < B; ++b) {
        for (int64_t k = 0; k < model.classes; ++k) {
          const float g = dlogit.at(b, k);
          g_cls_b[static_cast<size_t>(k)] += g;
          const float* fr = f.row(b);
          float* gw = g_cls.data() + k * f.cols;
          for (int64_t d = 0; d < f.cols; ++d) gw[d] += g * fr[d];
          const float* wr = model.classifier.row(k);
          float* dfr = df.row(b);
          for (int64_t d = 0; d < f.cols; ++d) dfr[d] += g * wr[d];
        }
      }

      ++step;
      if (!model.baseline) {
        int64_t off = 0;
        for (size_t t = 0; t < model.heads.size(); ++t) {
          NfpHead& head = model.heads[t];
          const TapData& td = train_sd.taps[t];
          const int64_t ct = td.gap.cols;
          std::vector<float> g_w(head.weight.data.size(), 0.0f);
          std::vector<float> g_b(head.bias.size(), 0.0f);
          for (int64_t b = 0; b < B; ++b) {
            const float* gap = td.gap.row(rows[static_cast<size_t>(b)]);
            const float* pooled = td.pooled.row(rows[static_cast<size_t>(b)]);
            const float* dfr = df.row(b) + off;
            for (int64_t o = 0; o < ct; ++o) {
              const float dproj = dfr[o] * gap[o];
              g_b[static_cast<size_t>(o)] += dproj;
              float* gw = g_w.data() + o * head.weight.cols;
              for (int64_t n = 0; n < head.weight.cols; ++n) gw[n] += dproj * pooled[n];
            }
          }
          adam_step(head.weight.data, g_w, head_w_state[t], cfg.learning_rate, step);
          adam_step(head.bias, g_b, head_b_state[t], cfg.learning_rate, step);
          off += ct;
        }
      }
      adam_step(model.classifier.data, g_cls, cls_w_state, cfg.learning_rate, step);
      adam_step(model.classifier_bias, g_cls_b, cls_b_state, cfg.learning_rate, step);
    }

    report.train_loss.push_back(static_cast<float>(loss_sum / static_cast<double>(train_sd.n)));
    report.train_acc.push_back(static_cast<float>(correct) / static_cast<float>(train_sd.n));

    Matrix fv = assemble_features(val_sd, model, all_val);
    ForwardStats vstats = logits_and_loss(fv, model, all_val, data.val.labels, nullptr);
    const double val_acc = static_cast<double>(vstats.correct) / static_cast<double>(val_sd.n);
    report.val_loss.push_back(static_cast<float>(vstats.loss_sum / static_cast<double>(val_sd.n)));
    report.val_acc.push_back(static_cast<float>(val_acc));

    if (val_acc > best_val_acc) {
      best_val_acc = val_acc;
      report.best_epoch = epoch;
      best = take_snapshot(model);
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  restore_snapshot(model, best);

  Evaluation test_eval = evaluate(model, data.test);
  report.test_accuracy = test_eval.accuracy;
  report.silhouette = silhouette_score(test_eval.embeddings, data.test.labels);
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(model), std::move(report)};
}

Evaluation evaluate(const Model& model, const LabeledSet& set) {
  SplitData sd = precompute_split(model.bank, set, model.taps, model.cfgs, model.baseline);
  std::vector<int64_t> rows(static_cast<size_t>(sd.n));
  std::iota(rows.begin(), rows.end(), 0);
  Matrix f = assemble_features(sd, model, rows);
  ForwardStats stats = logits_and_loss(f, model, rows, set.labels, nullptr);
  Evaluation out;
  out.accuracy = static_cast<double>(stats.correct) / static_cast<double>(sd.n);
  out.embeddings = std::move(f);
  return out;
}

std::vector<std::string> analytic_metric_ids() {
  std::vector<std::string> ids;
  for (const auto& m : list_metrics()) {
    if (m.has_analytic_gradient) ids.push_back(m.id);
  }
  return ids;
}

std::vector<std::pair<std::string, TrainReport>> metric_sweep(
    const TrainConfig& tmpl, const DatasetBundle& data,
    const std::vector<std::string>& metrics) {
  std::vector<std::pair<std::string, TrainReport>> rows;
  for (const auto& id : metrics) {
    metric_by_id(id);  // fail fast on unknown ids
    TrainConfig cfg = tmpl;
    cfg.metric = id;
    cfg.baseline = false;
    auto [model, report] = train(cfg, data);
    rows.emplace_back(id, std::move(report));
  }
  return rows;
}

std::vector<size_t> rank_by_accuracy(
    const std::vector<std::pair<std::string, TrainReport>>& rows) {
  std::vector<size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return rows[a].second.test_accuracy > rows[b].second.test_accuracy;
  });
  return idx;
}

std::vector<PlacementResult> placement_sweep(const TrainConfig& tmpl,
                                             const DatasetBundle& data) {
  std::vector<PlacementResult> results;
  for (const auto& taps : {std::vector<int>{1}, std::vector<int>{2}, std::vector<int>{1, 2}}) {
    TrainConfig cfg = tmpl;
    cfg.taps = taps;
    cfg.baseline = false;
    auto [model, report] = train(cfg, data);
    results.push_back({taps, std::move(report)});
  }
  return results;
}

}  // namespace nfp
