#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "helpers.hpp"
#include "nfp/errors.hpp"
#include "nfp/image.hpp"
#include "nfp/npy.hpp"
#include "nfp/tensor.hpp"

using namespace nfp;

TEST_CASE("tensor_create basics") {
  auto t = Tensor4::create({1, 1, 1, 1}, {0.0f});
  CHECK(t.size() == 1);
  CHECK(t.at(0, 0, 0, 0) == 0.0f);

  std::vector<float> data(8);
  for (int i = 0; i < 8; ++i) data[i] = static_cast<float>(i);
  auto t2 = Tensor4::create({1, 2, 2, 2}, data);
  CHECK(t2.at(0, 1, 1, 1) == data[7]);
  CHECK(t2.at(0, 0, 0, 1) == data[1]);

  CHECK_THROWS_AS(Tensor4::create({2, 3, 4, 4}, std::vector<float>(95, 0.0f)), ShapeError);
  std::vector<float> bad = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  CHECK_THROWS_AS(Tensor4::create({1, 1, 1, 2}, bad), ValidationError);
}

TEST_CASE("global_average_pool") {
  auto t = Tensor4::create({1, 1, 2, 2}, {1, 2, 3, 4});
  Matrix out = global_average_pool(t);
  CHECK(out.rows == 1);
  CHECK(out.cols == 1);
  CHECK(out.at(0, 0) == doctest::Approx(2.5));

  auto c = Tensor4::create({2, 3, 2, 2}, std::vector<float>(24, 0.75f));
  Matrix oc = global_average_pool(c);
  for (int64_t b = 0; b < 2; ++b) {
    for (int64_t ch = 0; ch < 3; ++ch) CHECK(oc.at(b, ch) == doctest::Approx(0.75f));
  }

  // independent scalar-loop oracle
  nfp::Rng rng(5);
  auto r = testutil::random_tensor(rng, {2, 3, 5, 5});
  Matrix og = global_average_pool(r);
  for (int64_t b = 0; b < 2; ++b) {
    for (int64_t ch = 0; ch < 3; ++ch) {
      double sum = 0.0;
      for (int64_t h = 0; h < 5; ++h) {
        for (int64_t w = 0; w < 5; ++w) sum += r.at(b, ch, h, w);
      }
      CHECK(og.at(b, ch) == doctest::Approx(sum / 25.0).epsilon(1e-6));
    }
  }

  CHECK_THROWS_AS(global_average_pool(Tensor4::zeros({1, 1, 0, 4})), ShapeError);
}

TEST_CASE("global_average_pool is linear") {
  nfp::Rng rng(9);
  auto x = testutil::random_tensor(rng, {2, 2, 4, 4});
  auto y = testutil::random_tensor(rng, {2, 2, 4, 4});
  const float a = 1.7f, b = -0.6f;
  std::vector<float> mix(x.values().begin(), x.values().end());
  for (size_t i = 0; i < mix.size(); ++i) mix[i] = a * mix[i] + b * y.values()[i];
  Matrix pm = global_average_pool(Tensor4::create(x.shape(), mix));
  Matrix px = global_average_pool(x);
  Matrix py = global_average_pool(y);
  for (size_t i = 0; i < pm.data.size(); ++i) {
    float want = a * px.data[i] + b * py.data[i];
    CHECK(pm.data[i] == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("npy round trip is bit exact") {
  auto dir = testutil::temp_dir("npy");
  nfp::Rng rng(13);
  auto t = testutil::random_tensor(rng, {1, 8, 4, 4});
  auto path = (dir / "t.npy").string();
  write_npy(t, path);
  auto back = read_npy(path);
  CHECK(back.shape() == t.shape());
  CHECK(std::equal(t.values().begin(), t.values().end(), back.values().begin()));
}

TEST_CASE("npy rank-2 reads left-padded") {
  auto dir = testutil::temp_dir("npy2");
  Matrix m(8, 8);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<float>(i) * 0.5f;
  auto path = (dir / "m.npy").string();
  write_npy(m, path);
  auto t = read_npy(path);
  CHECK(t.shape() == std::array<int64_t, 4>{1, 1, 8, 8});
  CHECK(t.at(0, 0, 1, 0) == 4.0f);
  Matrix back = read_npy_matrix(path);
  CHECK(back == m);
}

namespace {

void write_bytes(const std::string& path, const std::string& header,
                 const void* payload, size_t payload_len) {
  std::ofstream out(path, std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  uint16_t hlen = static_cast<uint16_t>(header.size());
  out.put(static_cast<char>(hlen & 0xff));
  out.put(static_cast<char>(hlen >> 8));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_len));
}

}  // namespace

TEST_CASE("npy format errors name the offending field") {
  auto dir = testutil::temp_dir("npybad");
  float some[4] = {1, 2, 3, 4};

  auto fortran = (dir / "fortran.npy").string();
  write_bytes(fortran, "{'descr': '<f4', 'fortran_order': True, 'shape': (2, 2), }\n", some,
              sizeof(some));
  CHECK_THROWS_WITH_AS(read_npy(fortran), doctest::Contains("fortran_order"), FormatError);

  auto badtype = (dir / "badtype.npy").string();
  write_bytes(badtype, "{'descr': '<i4', 'fortran_order': False, 'shape': (2, 2), }\n", some,
              sizeof(some));
  CHECK_THROWS_WITH_AS(read_npy(badtype), doctest::Contains("descr"), FormatError);

  auto rank1 = (dir / "rank1.npy").string();
  write_bytes(rank1, "{'descr': '<f4', 'fortran_order': False, 'shape': (4,), }\n", some,
              sizeof(some));
  CHECK_THROWS_AS(read_npy(rank1), FormatError);

  auto garbage = (dir / "garbage.npy").string();
  std::ofstream g(garbage, std::ios::binary);
  g << "not an npy";
  g.close();
  CHECK_THROWS_WITH_AS(read_npy(garbage), doctest::Contains("magic"), FormatError);
}

TEST_CASE("npy float64 input narrows to float32") {
  auto dir = testutil::temp_dir("npyf8");
  double payload[4] = {0.5, -1.25, 3.125, 1e-3};
  auto path = (dir / "f8.npy").string();
  write_bytes(path, "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }\n", payload,
              sizeof(payload));
  auto t = read_npy(path);
  CHECK(t.shape() == std::array<int64_t, 4>{1, 1, 2, 2});
  CHECK(t.at(0, 0, 0, 0) == 0.5f);
  CHECK(t.at(0, 0, 0, 1) == -1.25f);
  CHECK(t.at(0, 0, 1, 1) == doctest::Approx(1e-3).epsilon(1e-7));
}

TEST_CASE("png round trips and normalization") {
  auto dir = testutil::temp_dir("png");

  // all-white 2x2 RGB
  auto white = Tensor4::create({1, 3, 2, 2}, std::vector<float>(12, 1.0f));
  auto wpath = (dir / "white.png").string();
  save_png(wpath, white);

  auto loaded = load_image(wpath);
  CHECK(loaded.shape() == std::array<int64_t, 4>{1, 3, 2, 2});
  for (float v : loaded.values()) CHECK(v == doctest::Approx(1.0));

  auto norm = load_image(wpath, {0.5f}, {0.5f});
  for (float v : norm.values()) CHECK(v == doctest::Approx(1.0));

  // 3x5 grayscale
  std::vector<float> gray(15);
  for (size_t i = 0; i < gray.size(); ++i) gray[i] = static_cast<float>(i) / 15.0f;
  auto gpath = (dir / "gray.png").string();
  save_gray_png(gpath, gray.data(), 3, 5);
  auto gt = load_image(gpath);
  CHECK(gt.shape() == std::array<int64_t, 4>{1, 1, 3, 5});
  for (size_t i = 0; i < gray.size(); ++i) {
    CHECK(gt.values()[i] == doctest::Approx(gray[i]).epsilon(0.01));
  }

  auto bad = (dir / "bad.png").string();
  std::ofstream b(bad, std::ios::binary);
  b << "definitely not a png";
  b.close();
  CHECK_THROWS_AS(load_image(bad), FormatError);
}
