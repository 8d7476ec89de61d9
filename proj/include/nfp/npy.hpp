#pragma once

#include <string>

#include "nfp/tensor.hpp"

namespace nfp {

// NPY v1.0 only, little-endian '<f4'/'<f8', C order. Rank 2-4 accepted on
// read; rank < 4 is left-padded with unit extents. float64 input is narrowed
// to float32. FormatError names the offending header field.
Tensor4 read_npy(const std::string& path);

// Writes the full rank-4 shape as '<f4'. write -> read round trips are
// bit-exact.
void write_npy(const Tensor4& t, const std::string& path);

// Rank-2 convenience for pooled features, weights, embeddings.
void write_npy(const Matrix& m, const std::string& path);
Matrix read_npy_matrix(const std::string& path);  // rank-2 view of read_npy

}  // namespace nfp
