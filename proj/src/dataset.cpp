#include "nfp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "nfp/errors.hpp"
#include "nfp/npy.hpp"
#include "nfp/rng.hpp"

namespace nfp {

namespace {

constexpr int kChannels = 3;
constexpr uint64_t kSplitStride = 1ull << 30;
constexpr float kBaseStd = 0.15f;
constexpr double kPi = 3.14159265358979323846;

// raw patterns are roughly +-1; standardization fixes the final statistics

void gen_checkerboard(std::vector<float>& img, int h, int w, float period, Rng& rng) {
  float ox = rng.uniform(0.0f, period);
  float oy = rng.uniform(0.0f, period);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int cell = static_cast<int>(std::floor((x + ox) / period)) +
                 static_cast<int>(std::floor((y + oy) / period));
      img[y * w + x] = (cell & 1) ? 1.0f : -1.0f;
    }
  }
}

void gen_stripes(std::vector<float>& img, int h, int w, float period, float orientation_deg,
                 Rng& rng) {
  float theta = orientation_deg * static_cast<float>(kPi) / 180.0f;
  float cx = std::cos(theta), sy = std::sin(theta);
  float phase = rng.uniform(0.0f, 2.0f * period);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float u = cx * x + sy * y + phase;
      int band = static_cast<int>(std::floor(u / period));
      img[y * w + x] = (band & 1) ? 1.0f : -1.0f;
    }
  }
}

void gen_correlated_noise(std::vector<float>& img, int h, int w, float length, Rng& rng) {
  std::vector<float> white(static_cast<size_t>(h) * w);
  for (auto& v : white) v = rng.gaussian();
  int radius = std::max(1, static_cast<int>(std::lround(length)));
  // separable box blur, clamped borders
  std::vector<float> tmp(white.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        int xx = std::clamp(x + k, 0, w - 1);
        acc += white[y * w + xx];
      }
      tmp[y * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int k = -radius; k <= radius; ++k) {
        int yy = std::clamp(y + k, 0, h - 1);
        acc += tmp[yy * w + x];
      }
      img[y * w + x] = acc;
    }
  }
}

void gen_blobs(std::vector<float>& img, int h, int w, float density, Rng& rng) {
  std::fill(img.begin(), img.end(), -1.0f);
  int count = std::max(1, static_cast<int>(std::lround(density * h * w)));
  for (int i = 0; i < count; ++i) {
    float cx = rng.uniform(0.0f, static_cast<float>(w));
    float cy = rng.uniform(0.0f, static_cast<float>(h));
    float r = rng.uniform(2.0f, 4.5f);
    int x0 = std::max(0, static_cast<int>(cx - r) - 1);
    int x1 = std::min(w - 1, static_cast<int>(cx + r) + 1);
    int y0 = std::max(0, static_cast<int>(cy - r) - 1);
    int y1 = std::min(h - 1, static_cast<int>(cy + r) + 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        float dx = x - cx, dy = y - cy;
        if (dx * dx + dy * dy <= r * r) img[y * w + x] = 1.0f;
      }
    }
  }
}

// mean exactly 0.5, std = kBaseStd * (1 +- contrast jitter), over all channels
void standardize(std::vector<float>& img, float target_std) {
  double sum = 0.0;
  for (float v : img) sum += v;
  double mean = sum / static_cast<double>(img.size());
  double var = 0.0;
  for (float v : img) {
    double d = v - mean;
    var += d * d;
  }
  double sd = std::sqrt(var / static_cast<double>(img.size()));
  float scale = target_std / static_cast<float>(std::max(sd, 1e-6));
  for (auto& v : img) v = (v - static_cast<float>(mean)) * scale + 0.5f;
}

int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

void rotate_bilinear(std::vector<float>& img, int h, int w, float deg) {
  float theta = deg * static_cast<float>(kPi) / 180.0f;
  float ct = std::cos(theta), st = std::sin(theta);
  float cx = (w - 1) * 0.5f, cy = (h - 1) * 0.5f;
  std::vector<float> src = img;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float xs = ct * (x - cx) + st * (y - cy) + cx;
      float ys = -st * (x - cx) + ct * (y - cy) + cy;
      int x0 = static_cast<int>(std::floor(xs));
      int y0 = static_cast<int>(std::floor(ys));
      float fx = xs - x0, fy = ys - y0;
      float v00 = src[reflect(y0, h) * w + reflect(x0, w)];
      float v01 = src[reflect(y0, h) * w + reflect(x0 + 1, w)];
      float v10 = src[reflect(y0 + 1, h) * w + reflect(x0, w)];
      float v11 = src[reflect(y0 + 1, h) * w + reflect(x0 + 1, w)];
      img[y * w + x] = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    }
  }
}

void flip_h(std::vector<float>& img, int h, int w) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w / 2; ++x) std::swap(img[y * w + x], img[y * w + (w - 1 - x)]);
  }
}

void flip_v(std::vector<float>& img, int h, int w) {
  for (int y = 0; y < h / 2; ++y) {
    for (int x = 0; x < w; ++x) std::swap(img[y * w + x], img[(h - 1 - y) * w + x]);
  }
}

// Renders all 3 channels of one sample into `out` (channel-major), drawing
// jitters, noise and (optionally) augmentation parameters from `rng`.
void render_sample(const TextureSpec& spec, Rng& rng, bool augment, std::vector<float>& out) {
  const int h = spec.height, w = spec.width;
  const size_t plane = static_cast<size_t>(h) * w;
  out.resize(kChannels * plane);

  float period = spec.period + rng.uniform(-spec.period_jitter, spec.period_jitter);
  period = std::max(1.5f, period);
  float orient = spec.orientation_deg +
                 rng.uniform(-spec.orientation_jitter, spec.orientation_jitter);

  std::vector<float> base(plane);
  switch (spec.kind) {
    case TextureKind::Checkerboard:
      gen_checkerboard(base, h, w, period, rng);
      break;
    case TextureKind::Stripes:
      gen_stripes(base, h, w, period, orient, rng);
      break;
    case TextureKind::CorrelatedNoise:
      gen_correlated_noise(base, h, w, spec.corr_length, rng);
      break;
    case TextureKind::Blobs:
      gen_blobs(base, h, w, spec.blob_density, rng);
      break;
  }

  for (int c = 0; c < kChannels; ++c) {
    float gain = 1.0f + 0.1f * rng.gaussian();
    float* dst = out.data() + c * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] = base[i] * gain;
    if (spec.noise_sigma > 0.0f) {
      for (size_t i = 0; i < plane; ++i) dst[i] += spec.noise_sigma * rng.gaussian();
    }
  }

  if (augment) {
    bool fh = rng.coin();
    bool fv = rng.coin();
    float angle = rng.uniform(-15.0f, 15.0f);
    for (int c = 0; c < kChannels; ++c) {
      std::vector<float> ch(out.begin() + c * plane, out.begin() + (c + 1) * plane);
      if (fh) flip_h(ch, h, w);
      if (fv) flip_v(ch, h, w);
      rotate_bilinear(ch, h, w, angle);
      std::copy(ch.begin(), ch.end(), out.begin() + c * plane);
    }
  }

  float target_std = kBaseStd;
  if (spec.contrast_jitter > 0.0f) {
    target_std *= 1.0f + rng.uniform(-spec.contrast_jitter, spec.contrast_jitter);
  }
  standardize(out, target_std);
}

LabeledSet build_split(const std::vector<TextureSpec>& specs, int per_class, int split_index,
                       const char* split_name, uint64_t master_seed) {
  const int classes = static_cast<int>(specs.size());
  const int h = specs[0].height, w = specs[0].width;
  const int64_t n = static_cast<int64_t>(classes) * per_class;
  LabeledSet set;
  set.split = split_name;
  set.images = Tensor4::zeros({n, kChannels, h, w});
  set.labels.resize(static_cast<size_t>(n));
  std::vector<float> sample;
  const bool augment = split_index == 0;
  for (int k = 0; k < classes; ++k) {
    for (int i = 0; i < per_class; ++i) {
      int64_t idx = static_cast<int64_t>(k) * per_class + i;
      uint64_t counter = dataset_sample_counter(split_index, idx);
      Rng rng(derive_seed(master_seed, counter));
      render_sample(specs[k], rng, augment, sample);
      std::copy(sample.begin(), sample.end(),
                set.images.data() + idx * kChannels * h * w);
      set.labels[static_cast<size_t>(idx)] = specs[k].class_id;
    }
  }
  return set;
}

nlohmann::ordered_json spec_to_json(const TextureSpec& s) {
  nlohmann::ordered_json j;
  j["class_id"] = s.class_id;
  j["kind"] = texture_kind_name(s.kind);
  j["period"] = s.period;
  j["orientation_deg"] = s.orientation_deg;
  j["corr_length"] = s.corr_length;
  j["blob_density"] = s.blob_density;
  j["period_jitter"] = s.period_jitter;
  j["orientation_jitter"] = s.orientation_jitter;
  j["noise_sigma"] = s.noise_sigma;
  j["contrast_jitter"] = s.contrast_jitter;
  j["height"] = s.height;
  j["width"] = s.width;
  return j;
}

TextureSpec spec_from_json(const nlohmann::json& j) {
  TextureSpec s;
  s.class_id = j.at("class_id").get<int>();
  s.kind = texture_kind_from_name(j.at("kind").get<std::string>());
  s.period = j.at("period").get<float>();
  s.orientation_deg = j.at("orientation_deg").get<float>();
  s.corr_length = j.at("corr_length").get<float>();
  s.blob_density = j.at("blob_density").get<float>();
  s.period_jitter = j.at("period_jitter").get<float>();
  s.orientation_jitter = j.at("orientation_jitter").get<float>();
  s.noise_sigma = j.at("noise_sigma").get<float>();
  s.contrast_jitter = j.at("contrast_jitter").get<float>();
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  return s;
}

}  // namespace

const char* texture_kind_name(TextureKind k) {
  switch (k) {
    case TextureKind::Checkerboard:
      return "checkerboard";
    case TextureKind::Stripes:
      return "stripes";
    case TextureKind::CorrelatedNoise:
      return "correlated_noise";
    case TextureKind::Blobs:
      return "blobs";
  }
  return "unknown";
}

TextureKind texture_kind_from_name(const std::string& name) {
  if (name == "checkerboard") return TextureKind::Checkerboard;
  if (name == "stripes") return TextureKind::Stripes;
  if (name == "correlated_noise") return TextureKind::CorrelatedNoise;
  if (name == "blobs") return TextureKind::Blobs;
  throw ConfigError("unknown texture kind '" + name + "'");
}

std::vector<TextureSpec> default_benchmark_specs() {
  std::vector<TextureSpec> specs(4);
  specs[0].class_id = 0;
  specs[0].kind = TextureKind::Checkerboard;
  specs[0].period = 4.0f;
  specs[0].period_jitter = 1.0f;
  specs[1].class_id = 1;
  specs[1].kind = TextureKind::Stripes;
  specs[1].orientation_deg = 30.0f;
  specs[1].period = 4.0f;
  specs[1].period_jitter = 1.0f;
  specs[1].orientation_jitter = 5.0f;
  specs[2].class_id = 2;
  specs[2].kind = TextureKind::CorrelatedNoise;
  specs[2].corr_length = 2.0f;
  specs[3].class_id = 3;
  specs[3].kind = TextureKind::Blobs;
  specs[3].blob_density = 0.01f;
  // noise and per-image contrast jitter calibrated so the GAP-only baseline
  // neither saturates nor collapses; the contrast jitter is what rewards
  // scale-invariant neighborhood similarity over raw channel means
  for (auto& s : specs) {
    s.noise_sigma = 0.3f;
    s.contrast_jitter = 0.2f;
  }
  return specs;
}

uint64_t dataset_sample_counter(int split_index, int64_t sample_index) {
  if (split_index < 0 || split_index > 2) throw ConfigError("split index must be 0, 1 or 2");
  if (sample_index < 0 || static_cast<uint64_t>(sample_index) >= kSplitStride) {
    throw ConfigError("sample index out of range");
  }
  return kSplitStride * static_cast<uint64_t>(split_index + 1) +
         static_cast<uint64_t>(sample_index);
}

Tensor4 render_texture(const TextureSpec& spec, uint64_t sample_seed) {
  Rng rng(sample_seed);
  std::vector<float> sample;
  render_sample(spec, rng, /*augment=*/false, sample);
  return Tensor4::create({1, kChannels, spec.height, spec.width}, std::move(sample));
}

DatasetBundle synth_dataset(const std::vector<TextureSpec>& specs, int train_per_class,
                            int val_per_class, int test_per_class, uint64_t master_seed) {
  if (specs.size() < 2) throw ConfigError("need at least 2 texture classes");
  if (train_per_class < 1 || val_per_class < 1 || test_per_class < 1) {
    throw ConfigError("per-class counts must be >= 1");
  }
  for (const auto& s : specs) {
    if (s.height != specs[0].height || s.width != specs[0].width) {
      throw ConfigError("all texture specs must share one image size");
    }
  }
  DatasetBundle out;
  out.specs = specs;
  out.master_seed = master_seed;
  out.train = build_split(specs, train_per_class, 0, "train", master_seed);
  out.val = build_split(specs, val_per_class, 1, "val", master_seed);
  out.test = build_split(specs, test_per_class, 2, "test", master_seed);
  return out;
}

void export_dataset(const DatasetBundle& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto dump = [&](const LabeledSet& set) {
    write_npy(set.images, (fs::path(dir) / (set.split + "_images.npy")).string());
    Matrix labels(static_cast<int64_t>(set.labels.size()), 1);
    for (size_t i = 0; i < set.labels.size(); ++i) {
      labels.data[i] = static_cast<float>(set.labels[i]);
    }
    write_npy(labels, (fs::path(dir) / (set.split + "_labels.npy")).string());
  };
  dump(data.train);
  dump(data.val);
  dump(data.test);

  nlohmann::ordered_json manifest;
  manifest["master_seed"] = data.master_seed;
  manifest["classes"] = data.specs.size();
  manifest["splits"] = {{"train", data.train.labels.size()},
                        {"val", data.val.labels.size()},
                        {"test", data.test.labels.size()}};
  manifest["specs"] = nlohmann::ordered_json::array();
  for (const auto& s : data.specs) manifest["specs"].push_back(spec_to_json(s));
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

DatasetBundle load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw FormatError("cannot open " + dir + "/manifest.json");
  nlohmann::json manifest = nlohmann::json::parse(in);

  DatasetBundle out;
  out.master_seed = manifest.at("master_seed").get<uint64_t>();
  for (const auto& sj : manifest.at("specs")) out.specs.push_back(spec_from_json(sj));

  auto load = [&](const char* split) {
    LabeledSet set;
    set.split = split;
    set.images = read_npy((fs::path(dir) / (std::string(split) + "_images.npy")).string());
    Matrix labels =
        read_npy_matrix((fs::path(dir) / (std::string(split) + "_labels.npy")).string());
    set.labels.resize(static_cast<size_t>(labels.rows));
    for (int64_t i = 0; i < labels.rows; ++i) {
      set.labels[static_cast<size_t>(i)] = static_cast<int>(labels.at(i, 0));
    }
    if (set.images.b() != static_cast<int64_t>(set.labels.size())) {
      throw FormatError(dir + ": image/label count mismatch for split " + split);
    }
    return set;
  };
  out.train = load("train");
  out.val = load("val");
  out.test = load("test");
  return out;
}

}  // namespace nfp
