#include "nfp/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "nfp/errors.hpp"

namespace nfp {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

uint8_t to_byte(float v) {
  float s = v * 255.0f;
  if (s <= 0.0f) return 0;
  if (s >= 255.0f) return 255;
  return static_cast<uint8_t>(std::lround(s));
}

}  // namespace

Tensor4 load_image(const std::string& path, const std::vector<float>& mean,
                   const std::vector<float>& stddev) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError("cannot open '" + path + "'");

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("'" + path + "' is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "': PNG decode error");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (depth != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("'" + path + "': only 8-bit grayscale or RGB PNG is supported");
  }
  const int64_t channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;

  std::vector<png_byte> rowbuf(static_cast<size_t>(w) * channels);
  Tensor4 out = Tensor4::zeros({1, channels, static_cast<int64_t>(h), static_cast<int64_t>(w)});

  auto stat = [&](const std::vector<float>& v, int64_t c) {
    if (v.empty()) return c == 0 ? 0.0f : 1.0f;
    return v.size() == 1 ? v[0] : v[static_cast<size_t>(c)];
  };
  if ((mean.size() != 1 && mean.size() != static_cast<size_t>(channels)) ||
      (stddev.size() != 1 && stddev.size() != static_cast<size_t>(channels))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("normalization mean/std must have 1 or C entries");
  }

  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int64_t c = 0; c < channels; ++c) {
        float p = static_cast<float>(rowbuf[x * channels + c]) / 255.0f;
        out.at(0, c, y, x) = (p - stat(mean, c)) / stat(stddev, c);
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!out.all_finite()) throw ValidationError("'" + path + "': normalization produced non-finite values");
  return out;
}

void save_gray_png(const std::string& path, const float* values, int64_t h, int64_t w) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError("cannot open '" + path + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("'" + path + "': PNG encode error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<size_t>(w));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) row[x] = to_byte(values[y * w + x]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_png(const std::string& path, const Tensor4& t) {
  if (t.b() != 1 || (t.c() != 1 && t.c() != 3)) {
    throw ShapeError("save_png expects shape (1, 1|3, H, W)");
  }
  if (t.c() == 1) {
    save_gray_png(path, t.row(0, 0, 0), t.h(), t.w());
    return;
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("'" + path + "': PNG encode error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(t.w()), static_cast<png_uint_32>(t.h()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>(t.w()) * 3);
  for (int64_t y = 0; y < t.h(); ++y) {
    for (int64_t x = 0; x < t.w(); ++x) {
      for (int64_t c = 0; c < 3; ++c) row[x * 3 + c] = to_byte(t.at(0, c, y, x));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace nfp
