#pragma once

// Single-channel grayscale PNG images (8 or 16 bit).

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fluoroplan/core.hpp"

namespace fluoroplan {

struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;               // 8 or 16
  std::vector<std::uint16_t> pixels;  // row-major, width * height

  std::uint16_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_quiet_warning(png_structp, png_const_charp) {}

}  // namespace detail

inline GrayImage read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::ImageError, "cannot open image " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(ErrorCode::ImageError, path.string() + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           detail::png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::ImageError, "libpng initialisation failed");
  }

  // Everything with a destructor lives above the setjmp point.
  GrayImage img;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  std::string failure;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::ImageError,
                failure.empty() ? "corrupt PNG data in " + path.string() : failure);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    failure = path.string() + " is not single-channel grayscale";
    png_error(png, failure.c_str());
  }
  if (depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.bit_depth = depth;
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  raw.resize(row_bytes * img.height);
  rows.resize(img.height);
  for (int v = 0; v < img.height; ++v) rows[v] = raw.data() + v * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      const png_byte* r = rows[v];
      img.pixels[static_cast<std::size_t>(v) * img.width + u] =
          depth == 16 ? static_cast<std::uint16_t>((r[2 * u] << 8) | r[2 * u + 1]) : r[u];
    }
  return img;
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  if (img.bit_depth != 8 && img.bit_depth != 16)
    throw Error(ErrorCode::ImageError, "only 8- and 16-bit grayscale images can be written");
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw Error(ErrorCode::ImageError, "image buffer does not match its dimensions");

  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoError, "cannot write image " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            detail::png_quiet_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::ImageError, "libpng initialisation failed");
  }

  const std::size_t bytes_per_px = img.bit_depth / 8;
  std::vector<png_byte> raw(static_cast<std::size_t>(img.width) * img.height * bytes_per_px);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (bytes_per_px == 1) {
      raw[i] = static_cast<png_byte>(img.pixels[i]);
    } else {
      raw[2 * i] = static_cast<png_byte>(img.pixels[i] >> 8);  // PNG is big-endian
      raw[2 * i + 1] = static_cast<png_byte>(img.pixels[i] & 0xff);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (int v = 0; v < img.height; ++v) rows[v] = raw.data() + v * img.width * bytes_per_px;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "failed writing PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, img.bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace fluoroplan
