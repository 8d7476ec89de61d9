#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace nfp {

// Dense rank-4 float32 array, layout (B, C, H, W), row-major with W fastest.
// All public operations leave tensors finite; treat instances as immutable
// values once built.
class Tensor4 {
 public:
  Tensor4() : shape_{0, 0, 0, 0} {}

  // Validates length and finiteness (ShapeError / ValidationError).
  static Tensor4 create(const std::array<int64_t, 4>& shape, std::vector<float> data);
  static Tensor4 zeros(const std::array<int64_t, 4>& shape);

  const std::array<int64_t, 4>& shape() const { return shape_; }
  int64_t b() const { return shape_[0]; }
  int64_t c() const { return shape_[1]; }
  int64_t h() const { return shape_[2]; }
  int64_t w() const { return shape_[3]; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }

  int64_t index(int64_t b, int64_t c, int64_t h, int64_t w) const {
    return ((b * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  float at(int64_t b, int64_t c, int64_t h, int64_t w) const {
    return data_[index(b, c, h, w)];
  }
  float& at(int64_t b, int64_t c, int64_t h, int64_t w) {
    return data_[index(b, c, h, w)];
  }

  // Pointer to the start of row (b, c, h, 0); contiguous over w.
  const float* row(int64_t b, int64_t c, int64_t h) const {
    return data_.data() + index(b, c, h, 0);
  }
  float* row(int64_t b, int64_t c, int64_t h) {
    return data_.data() + index(b, c, h, 0);
  }

  const float* data() const { return data_.data(); }
  float* data() { return data_.data(); }
  std::span<const float> values() const { return data_; }

  // Length-C channel fiber at one spatial position (stride H*W).
  std::vector<float> fiber(int64_t b, int64_t h, int64_t w) const;

  bool all_finite() const;

 private:
  std::array<int64_t, 4> shape_;
  std::vector<float> data_;
};

// Small row-major matrix; carries pooled features, weights, logits.
struct Matrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c, float fill = 0.0f)
      : rows(r), cols(c), data(static_cast<size_t>(r * c), fill) {}

  float at(int64_t r, int64_t c) const { return data[r * cols + c]; }
  float& at(int64_t r, int64_t c) { return data[r * cols + c]; }
  const float* row(int64_t r) const { return data.data() + r * cols; }
  float* row(int64_t r) { return data.data() + r * cols; }

  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

// out[b, c] = mean over (h, w) of x[b, c, h, w]. ShapeError on empty spatial
// extent. Accumulation is sequential per channel, so results are reproducible.
Matrix global_average_pool(const Tensor4& x);

}  // namespace nfp
