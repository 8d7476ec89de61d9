#pragma once

#include <string>
#include <vector>

#include "nfp/tensor.hpp"

namespace nfp {

// Loads an 8-bit grayscale or RGB PNG into a (1, C, H, W) tensor with
// pixel p mapped to (p/255 - mean[c]) / std[c]. mean/std must have one
// entry per channel, or a single entry broadcast to all channels.
Tensor4 load_image(const std::string& path, const std::vector<float>& mean = {0.0f},
                   const std::vector<float>& stddev = {1.0f});

// Writes one plane of values in [0, 1] as an 8-bit grayscale PNG.
void save_gray_png(const std::string& path, const float* values, int64_t h, int64_t w);

// Writes a (1, 1|3, H, W) tensor of [0, 1] values as 8-bit gray or RGB.
void save_png(const std::string& path, const Tensor4& t);

}  // namespace nfp
