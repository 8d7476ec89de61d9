#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfp/dataset.hpp"
#include "nfp/layer.hpp"
#include "nfp/tensor.hpp"

namespace nfp {

// Frozen two-stage feature extractor: 3->c1 and c1->c2 channels, 3x3
// kernels, stride 2, valid padding, bias-free, ReLU. Weights come from a
// seeded Gaussian and never train.
struct FilterBank {
  int c1 = 16;
  int c2 = 32;
  std::vector<float> w1;  // c1 x 3 x 3 x 3
  std::vector<float> w2;  // c2 x c1 x 3 x 3

  static FilterBank create(int c1, int c2, uint64_t seed);
  Tensor4 stage1(const Tensor4& x) const;
  Tensor4 stage2(const Tensor4& f1) const;
  // stage in {1, 2}; composes from the input image batch
  Tensor4 features(const Tensor4& x, int stage) const;
  int stage_channels(int stage) const;
};

struct TrainConfig {
  float learning_rate = 0.001f;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  uint64_t seed = 0;
  std::string metric = "cosine";
  std::vector<int> taps = {2};  // backbone stages NFP attaches to
  bool baseline = false;        // GAP-only: no NFP branch, no heads
  int bank_c1 = 16;
  int bank_c2 = 32;
};

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);

struct Model {
  FilterBank bank;
  std::vector<int> taps;
  std::vector<NfpConfig> cfgs;   // one per tap
  std::vector<NfpHead> heads;    // empty when baseline
  bool baseline = false;
  int classes = 0;
  Matrix classifier;             // classes x C_total
  std::vector<float> classifier_bias;

  int64_t feature_width() const;
  // heads + classifier; the filter bank is frozen and excluded
  int64_t trainable_parameter_count() const;
};

struct TrainReport {
  TrainConfig config;
  std::vector<float> train_loss, train_acc, val_loss, val_acc;
  int best_epoch = -1;
  double test_accuracy = 0.0;
  int64_t parameter_count = 0;
  double silhouette = 0.0;
  double wall_time_sec = 0.0;
};

// Stable key order; `meta` carries the only volatile fields (timestamp and
// wall time), so reports are byte-comparable after dropping it.
nlohmann::ordered_json report_to_json(const TrainReport& report);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on softmax cross-entropy. Only NFP
// heads and the classifier train; the bank is frozen and all per-image
// pooled features are precomputed once. Early stopping restores the best
// validation-accuracy weights. Deterministic given (config, data).
std::pair<Model, TrainReport> train(const TrainConfig& cfg, const DatasetBundle& data);

struct Evaluation {
  double accuracy = 0.0;
  Matrix embeddings;  // N x C_total, pre-classifier
};
Evaluation evaluate(const Model& model, const LabeledSet& set);

// The 9 registered metrics with analytic gradients, in registry order.
std::vector<std::string> analytic_metric_ids();

// One full train/evaluate per metric, identical seed and data.
std::vector<std::pair<std::string, TrainReport>> metric_sweep(
    const TrainConfig& tmpl, const DatasetBundle& data, const std::vector<std::string>& metrics);

// Rank by test accuracy descending (stable).
std::vector<size_t> rank_by_accuracy(const std::vector<std::pair<std::string, TrainReport>>& rows);

struct PlacementResult {
  std::vector<int> taps;
  TrainReport report;
};

// {stage 1}, {stage 2}, {both, concatenated}.
std::vector<PlacementResult> placement_sweep(const TrainConfig& tmpl, const DatasetBundle& data);

}  // namespace nfp
