#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "helpers.hpp"
#include "nfp/dataset.hpp"
#include "nfp/errors.hpp"
#include "nfp/rng.hpp"

using namespace nfp;

TEST_CASE("same seed renders bit-identical datasets") {
  auto specs = default_benchmark_specs();
  auto a = synth_dataset(specs, 4, 2, 2, 42);
  auto b = synth_dataset(specs, 4, 2, 2, 42);
  CHECK(std::equal(a.train.images.values().begin(), a.train.images.values().end(),
                   b.train.images.values().begin()));
  CHECK(a.train.labels == b.train.labels);
  CHECK(std::equal(a.test.images.values().begin(), a.test.images.values().end(),
                   b.test.images.values().begin()));

  auto c = synth_dataset(specs, 4, 2, 2, 43);
  CHECK_FALSE(std::equal(a.train.images.values().begin(), a.train.images.values().end(),
                         c.train.images.values().begin()));
}

TEST_CASE("classes are balanced by construction") {
  auto specs = default_benchmark_specs();
  auto data = synth_dataset(specs, 32, 8, 8, 7);
  std::map<int, int> hist;
  for (int l : data.train.labels) ++hist[l];
  REQUIRE(hist.size() == 4);
  for (const auto& [cls, n] : hist) CHECK(n == 32);
  CHECK(data.train.labels.size() == 128);
  CHECK(data.val.labels.size() == 32);
}

TEST_CASE("split seed ranges never overlap") {
  CHECK(dataset_sample_counter(0, 0) != dataset_sample_counter(1, 0));
  uint64_t max_train = dataset_sample_counter(0, (1 << 30) - 1);
  uint64_t min_val = dataset_sample_counter(1, 0);
  uint64_t max_val = dataset_sample_counter(1, (1 << 30) - 1);
  uint64_t min_test = dataset_sample_counter(2, 0);
  CHECK(max_train < min_val);
  CHECK(max_val < min_test);
  CHECK_THROWS_AS(dataset_sample_counter(3, 0), ConfigError);
  CHECK_THROWS_AS(dataset_sample_counter(0, int64_t(1) << 31), ConfigError);
}

TEST_CASE("checkerboard autocorrelation peaks at one full cycle") {
  TextureSpec spec;
  spec.kind = TextureKind::Checkerboard;
  spec.period = 4.0f;
  spec.period_jitter = 0.0f;
  spec.noise_sigma = 0.0f;
  spec.contrast_jitter = 0.0f;
  auto img = render_texture(spec, 99);

  // direct (non-FFT) autocorrelation of channel 0 at axis lags
  auto autocorr = [&](int dy, int dx) {
    double num = 0.0, count = 0.0, mean = 0.0;
    for (int64_t y = 0; y < img.h(); ++y) {
      for (int64_t x = 0; x < img.w(); ++x) mean += img.at(0, 0, y, x);
    }
    mean /= static_cast<double>(img.h() * img.w());
    double var = 0.0;
    for (int64_t y = 0; y < img.h(); ++y) {
      for (int64_t x = 0; x < img.w(); ++x) {
        double d = img.at(0, 0, y, x) - mean;
        var += d * d;
      }
    }
    for (int64_t y = 0; y + dy < img.h(); ++y) {
      for (int64_t x = 0; x + dx < img.w(); ++x) {
        num += (img.at(0, 0, y, x) - mean) * (img.at(0, 0, y + dy, x + dx) - mean);
        count += 1.0;
      }
    }
    return num / (var * count / static_cast<double>(img.h() * img.w()));
  };

  // lag 8 = one full cycle of a period-4 checkerboard; lag 4 is anti-phase
  CHECK(autocorr(8, 0) > 0.9);
  CHECK(autocorr(0, 8) > 0.9);
  CHECK(autocorr(4, 0) < -0.9);
  CHECK(autocorr(0, 4) < -0.9);
}

TEST_CASE("class-conditional pixel means are indistinguishable") {
  auto specs = default_benchmark_specs();
  auto data = synth_dataset(specs, 16, 4, 4, 11);
  std::map<int, double> sums;
  std::map<int, int64_t> counts;
  const int64_t per_image = 3LL * 64 * 64;
  for (int64_t i = 0; i < data.train.images.b(); ++i) {
    double s = 0.0;
    const float* base = data.train.images.data() + i * per_image;
    for (int64_t j = 0; j < per_image; ++j) s += base[j];
    sums[data.train.labels[static_cast<size_t>(i)]] += s / static_cast<double>(per_image);
    counts[data.train.labels[static_cast<size_t>(i)]] += 1;
  }
  std::vector<double> means;
  for (const auto& [cls, s] : sums) means.push_back(s / counts[cls]);
  for (size_t a = 0; a < means.size(); ++a) {
    for (size_t b = a + 1; b < means.size(); ++b) {
      CHECK(std::fabs(means[a] - means[b]) < 0.05);
    }
  }
}

TEST_CASE("export then load round trips bit-exactly") {
  auto dir = testutil::temp_dir("dataset_io");
  auto specs = default_benchmark_specs();
  auto data = synth_dataset(specs, 3, 2, 2, 5);
  export_dataset(data, dir.string());
  auto back = load_dataset(dir.string());
  CHECK(back.master_seed == 5);
  CHECK(back.specs.size() == 4);
  CHECK(back.train.labels == data.train.labels);
  CHECK(std::equal(data.train.images.values().begin(), data.train.images.values().end(),
                   back.train.images.values().begin()));
  CHECK(std::equal(data.test.images.values().begin(), data.test.images.values().end(),
                   back.test.images.values().begin()));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(synth_dataset({}, 1, 1, 1, 0), ConfigError);
  auto specs = default_benchmark_specs();
  CHECK_THROWS_AS(synth_dataset(specs, 0, 1, 1, 0), ConfigError);
  CHECK_THROWS_AS(texture_kind_from_name("marble"), ConfigError);
}
