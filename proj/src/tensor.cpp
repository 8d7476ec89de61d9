#include "nfp/tensor.hpp"

#include <cmath>
#include <string>

#include "nfp/errors.hpp"

namespace nfp {

Tensor4 Tensor4::create(const std::array<int64_t, 4>& shape, std::vector<float> data) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e < 0) throw ShapeError("tensor extent must be non-negative, got " + std::to_string(e));
    n *= e;
  }
  if (n != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape product " + std::to_string(n));
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw ValidationError("tensor data contains a non-finite value");
  }
  Tensor4 t;
  t.shape_ = shape;
  t.data_ = std::move(data);
  return t;
}

Tensor4 Tensor4::zeros(const std::array<int64_t, 4>& shape) {
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e < 0) throw ShapeError("tensor extent must be non-negative, got " + std::to_string(e));
    n *= e;
  }
  Tensor4 t;
  t.shape_ = shape;
  t.data_.assign(static_cast<size_t>(n), 0.0f);
  return t;
}

std::vector<float> Tensor4::fiber(int64_t b, int64_t h, int64_t w) const {
  std::vector<float> out(static_cast<size_t>(shape_[1]));
  for (int64_t c = 0; c < shape_[1]; ++c) out[c] = at(b, c, h, w);
  return out;
}

bool Tensor4::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix global_average_pool(const Tensor4& x) {
  if (x.h() * x.w() < 1) {
    throw ShapeError("global_average_pool requires H*W >= 1, got H=" + std::to_string(x.h()) +
                     " W=" + std::to_string(x.w()));
  }
  Matrix out(x.b(), x.c());
  const float inv = 1.0f / static_cast<float>(x.h() * x.w());
  for (int64_t b = 0; b < x.b(); ++b) {
    for (int64_t c = 0; c < x.c(); ++c) {
      float acc = 0.0f;
      for (int64_t h = 0; h < x.h(); ++h) {
        const float* r = x.row(b, c, h);
        for (int64_t w = 0; w < x.w(); ++w) acc += r[w];
      }
      out.at(b, c) = acc * inv;
    }
  }
  return out;
}

}  // namespace nfp
