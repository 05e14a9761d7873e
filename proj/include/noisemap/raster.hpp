/*
 * Copyright 2026 The noisemap Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "noisemap/error.hpp"
#include "noisemap/legend_band.hpp"

namespace noisemap {

// 8-bit RGB raster with an alpha plane. Row-major, row 0 at the top.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<RgbColor> pixels;
  std::vector<std::uint8_t> alpha;

  Image() = default;
  Image(std::size_t w, std::size_t h, RgbColor fill = {255, 255, 255}, std::uint8_t a = 255)
      : width(w), height(h), pixels(w * h, fill), alpha(w * h, a) {}

  RgbColor& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  const RgbColor& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  bool empty() const { return width == 0 || height == 0; }
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_error_fn(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace detail

// Reads any PNG libpng understands, normalized to 8-bit RGBA. Alpha is kept
// but the scanner ignores it.
inline Image read_png(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorCategory::kIo, "cannot open image " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    fail(ErrorCategory::kIo, path.string() + " is not a PNG file");
  }

  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, detail::png_error_fn,
                                           detail::png_warning_fn);
  if (!png) fail(ErrorCategory::kIo, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  Image image;
  std::vector<std::uint8_t> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCategory::kIo, path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);

  buffer.resize(static_cast<std::size_t>(width) * height * 4);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * 4;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  image.width = width;
  image.height = height;
  image.pixels.resize(static_cast<std::size_t>(width) * height);
  image.alpha.resize(image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    image.pixels[i] = {buffer[4 * i], buffer[4 * i + 1], buffer[4 * i + 2]};
    image.alpha[i] = buffer[4 * i + 3];
  }
  if (image.empty()) fail(ErrorCategory::kIo, path.string() + ": image is empty");
  return image;
}

// Writes 8-bit RGBA. The output carries no timestamp chunk, so identical
// images produce identical files.
inline void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) fail(ErrorCategory::kIo, "refusing to write an empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    detail::FilePtr file(std::fopen(tmp.c_str(), "wb"));
    if (!file) fail(ErrorCategory::kIo, "cannot write " + tmp.string());
    std::string error;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, detail::png_error_fn,
                                              detail::png_warning_fn);
    if (!png) fail(ErrorCategory::kIo, "libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> row(image.width * 4);
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fail(ErrorCategory::kIo, tmp.string() + ": " + error);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y) {
      for (std::size_t x = 0; x < image.width; ++x) {
        const auto& p = image.at(x, y);
        row[4 * x] = p.red;
        row[4 * x + 1] = p.green;
        row[4 * x + 2] = p.blue;
        row[4 * x + 3] = image.alpha.empty() ? 255 : image.alpha[y * image.width + x];
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace noisemap
