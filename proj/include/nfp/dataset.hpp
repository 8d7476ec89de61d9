#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nfp/tensor.hpp"

namespace nfp {

enum class TextureKind { Checkerboard, Stripes, CorrelatedNoise, Blobs };

const char* texture_kind_name(TextureKind k);
TextureKind texture_kind_from_name(const std::string& name);

// One texture class. Every per-sample draw (jitter, phase, noise) comes from
// a seed derived from (master seed, split, sample index), so identical
// (spec, seed) pairs render bit-identical images.
struct TextureSpec {
  int class_id = 0;
  TextureKind kind = TextureKind::Checkerboard;
  float period = 4.0f;           // checkerboard cell / stripe width, pixels
  float orientation_deg = 0.0f;  // stripes
  float corr_length = 3.0f;      // correlated noise box-blur radius
  float blob_density = 0.01f;    // expected blobs per pixel
  float period_jitter = 0.0f;
  float orientation_jitter = 0.0f;
  float noise_sigma = 0.0f;      // additive per-pixel Gaussian noise
  float contrast_jitter = 0.0f;  // +- fraction on the per-image std target
  int height = 64;
  int width = 64;                // channels fixed at 3
};

struct LabeledSet {
  Tensor4 images;           // (N, 3, H, W)
  std::vector<int> labels;  // in [0, classes)
  std::string split;        // "train" | "val" | "test"
};

struct DatasetBundle {
  LabeledSet train, val, test;
  std::vector<TextureSpec> specs;
  uint64_t master_seed = 0;
};

// 4 classes: checkerboard, stripes-30deg, correlated-noise, blobs; 64x64 RGB.
// Images are standardized per image (mean 0.5, jittered std), so classes are
// not separable by global statistics alone.
std::vector<TextureSpec> default_benchmark_specs();

// Per-sample stream counter; split ranges are disjoint by construction.
uint64_t dataset_sample_counter(int split_index, int64_t sample_index);

// Renders one sample without augmentation (used directly by tests and maps).
Tensor4 render_texture(const TextureSpec& spec, uint64_t sample_seed);

// Deterministic balanced splits. Train samples get horizontal/vertical flips
// and +-15 degree rotations; val/test are rendered as-is.
DatasetBundle synth_dataset(const std::vector<TextureSpec>& specs, int train_per_class,
                            int val_per_class, int test_per_class, uint64_t master_seed);

// NPY image/label pairs per split plus manifest.json.
void export_dataset(const DatasetBundle& data, const std::string& dir);
DatasetBundle load_dataset(const std::string& dir);

}  // namespace nfp
