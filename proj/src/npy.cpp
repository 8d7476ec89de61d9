#include "nfp/npy.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "nfp/errors.hpp"

namespace nfp {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

// Pulls the value of one key out of the header dict literal. The header is
// machine-written python, so simple scanning is enough.
std::string dict_value(const std::string& header, const std::string& key) {
  auto kpos = header.find("'" + key + "'");
  if (kpos == std::string::npos) throw FormatError("npy header missing field '" + key + "'");
  auto colon = header.find(':', kpos);
  if (colon == std::string::npos) throw FormatError("npy header malformed near '" + key + "'");
  size_t i = colon + 1;
  while (i < header.size() && header[i] == ' ') ++i;
  size_t end = i;
  if (i < header.size() && header[i] == '(') {
    end = header.find(')', i);
    if (end == std::string::npos) throw FormatError("npy header: unterminated shape tuple");
    ++end;
  } else if (i < header.size() && header[i] == '\'') {
    end = header.find('\'', i + 1);
    if (end == std::string::npos) throw FormatError("npy header: unterminated string");
    ++end;
  } else {
    while (end < header.size() && header[end] != ',' && header[end] != '}') ++end;
  }
  return header.substr(i, end - i);
}

std::vector<int64_t> parse_shape(const std::string& tuple) {
  std::vector<int64_t> dims;
  int64_t cur = 0;
  bool in_num = false;
  for (char ch : tuple) {
    if (ch >= '0' && ch <= '9') {
      cur = cur * 10 + (ch - '0');
      in_num = true;
    } else {
      if (in_num) dims.push_back(cur);
      cur = 0;
      in_num = false;
    }
  }
  return dims;
}

void write_raw(const std::string& path, const std::vector<int64_t>& dims, const float* data,
               size_t count) {
  std::string shape = "(";
  for (size_t i = 0; i < dims.size(); ++i) {
    shape += std::to_string(dims[i]);
    shape += (dims.size() == 1 && i == 0) ? "," : (i + 1 < dims.size() ? ", " : "");
  }
  shape += ")";
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape + ", }";
  size_t total = 10 + header.size() + 1;  // +1 for trailing newline
  size_t padded = (total + 63) / 64 * 64;
  header.append(padded - total, ' ');
  header += '\n';

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kMagic, 6);
  char ver[2] = {1, 0};
  out.write(ver, 2);
  uint16_t hlen = static_cast<uint16_t>(header.size());
  char lenb[2] = {static_cast<char>(hlen & 0xff), static_cast<char>(hlen >> 8)};
  out.write(lenb, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
  if (!out) throw FormatError("short write to '" + path + "'");
}

}  // namespace

Tensor4 read_npy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");

  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0) {
    throw FormatError("'" + path + "': bad npy magic");
  }
  unsigned char ver[2];
  in.read(reinterpret_cast<char*>(ver), 2);
  if (!in || ver[0] != 1 || ver[1] != 0) {
    throw FormatError("'" + path + "': unsupported npy version " + std::to_string(ver[0]) + "." +
                      std::to_string(ver[1]) + " (only 1.0)");
  }
  unsigned char lenb[2];
  in.read(reinterpret_cast<char*>(lenb), 2);
  if (!in) throw FormatError("'" + path + "': truncated header length");
  size_t hlen = lenb[0] | (static_cast<size_t>(lenb[1]) << 8);
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw FormatError("'" + path + "': truncated header");

  std::string descr = dict_value(header, "descr");
  bool f64;
  if (descr == "'<f4'") {
    f64 = false;
  } else if (descr == "'<f8'") {
    f64 = true;
  } else {
    throw FormatError("'" + path + "': unsupported descr " + descr + " (need '<f4' or '<f8')");
  }
  std::string forder = dict_value(header, "fortran_order");
  if (forder.find("False") == std::string::npos) {
    throw FormatError("'" + path + "': fortran_order must be False");
  }
  std::vector<int64_t> dims = parse_shape(dict_value(header, "shape"));
  if (dims.size() < 2 || dims.size() > 4) {
    throw FormatError("'" + path + "': shape rank " + std::to_string(dims.size()) +
                      " unsupported (need 2-4)");
  }
  std::array<int64_t, 4> shape = {1, 1, 1, 1};
  for (size_t i = 0; i < dims.size(); ++i) shape[4 - dims.size() + i] = dims[i];

  int64_t n = shape[0] * shape[1] * shape[2] * shape[3];
  std::vector<float> data(static_cast<size_t>(n));
  if (f64) {
    std::vector<double> tmp(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(tmp.data()), n * 8);
    if (!in) throw FormatError("'" + path + "': truncated data");
    for (int64_t i = 0; i < n; ++i) {
      data[i] = static_cast<float>(tmp[i]);
      if (!std::isfinite(data[i])) {
        throw ValidationError("'" + path + "': value at index " + std::to_string(i) +
                              " is non-finite after float32 narrowing");
      }
    }
  } else {
    in.read(reinterpret_cast<char*>(data.data()), n * 4);
    if (!in) throw FormatError("'" + path + "': truncated data");
  }
  return Tensor4::create(shape, std::move(data));
}

void write_npy(const Tensor4& t, const std::string& path) {
  write_raw(path, {t.b(), t.c(), t.h(), t.w()}, t.data(), static_cast<size_t>(t.size()));
}

void write_npy(const Matrix& m, const std::string& path) {
  write_raw(path, {m.rows, m.cols}, m.data.data(), m.data.size());
}

Matrix read_npy_matrix(const std::string& path) {
  Tensor4 t = read_npy(path);
  if (t.b() != 1 || t.c() != 1) {
    throw FormatError("'" + path + "': expected a rank-2 array");
  }
  Matrix m(t.h(), t.w());
  std::copy(t.values().begin(), t.values().end(), m.data.begin());
  return m;
}

}  // namespace nfp
