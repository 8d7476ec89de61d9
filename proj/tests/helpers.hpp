#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nfp/rng.hpp"
#include "nfp/tensor.hpp"

namespace testutil {

inline std::vector<float> random_vector(nfp::Rng& rng, size_t n, float lo = -2.0f,
                                        float hi = 2.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline nfp::Tensor4 random_tensor(nfp::Rng& rng, const std::array<int64_t, 4>& shape,
                                  float lo = -1.0f, float hi = 1.0f) {
  int64_t n = shape[0] * shape[1] * shape[2] * shape[3];
  std::vector<float> data(static_cast<size_t>(n));
  for (auto& x : data) x = rng.uniform(lo, hi);
  return nfp::Tensor4::create(shape, std::move(data));
}

// unique scratch directory under the build tree
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("nfp_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
