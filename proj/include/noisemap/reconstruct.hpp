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

// Heatmap -> point samples. Every pixel is classified against the legend on
// its own; pixels that match no band closely enough (transitions between
// bands, labels, sea, building interiors) are dropped.

#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisemap/colorspace.hpp"
#include "noisemap/error.hpp"
#include "noisemap/georef.hpp"
#include "noisemap/legend.hpp"
#include "noisemap/parallel.hpp"
#include "noisemap/raster.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

struct NoiseSample {
  double latitude = 0.0;
  double longitude = 0.0;
  RgbColor color;
  double noise_db = 0.0;

  friend bool operator==(const NoiseSample&, const NoiseSample&) = default;
};

using SampleSink = std::function<void(const NoiseSample&)>;

struct ScanOptions {
  double threshold = kDefaultColorThreshold;
  int workers = 1;
  // Rows classified per batch. Bounds the memory held for out-of-order rows
  // when several workers are active.
  std::size_t rows_per_batch = 256;
};

struct ScanStats {
  std::size_t pixels = 0;
  std::size_t matched = 0;
};

// Emits one sample per matched pixel, in row-major order, to `sink`.
// Coordinates are those of the pixel center (x + 0.5, y + 0.5).
inline ScanStats scan_image(const Image& image, const AffineTransform& transform,
                            std::span<const LegendBand> palette, const SampleSink& sink,
                            const ScanOptions& options = {}) {
  if (image.empty()) fail(ErrorCategory::kIo, "image is empty");
  require_non_degenerate(transform);
  validate_palette(palette);

  const int workers = std::max(1, options.workers);
  std::vector<ColorClassifier> classifiers;
  classifiers.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) classifiers.emplace_back(palette, options.threshold);

  ScanStats stats;
  stats.pixels = image.width * image.height;
  const std::size_t batch = std::max<std::size_t>(1, options.rows_per_batch);
  std::vector<std::vector<NoiseSample>> row_out(std::min(batch, image.height));

  for (std::size_t first = 0; first < image.height; first += batch) {
    const std::size_t count = std::min(batch, image.height - first);
    // Rows are split into `workers` contiguous stripes so each stripe owns
    // one classifier.
    const std::size_t stripe = (count + static_cast<std::size_t>(workers) - 1) / workers;
    parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
      auto& classifier = classifiers[w];
      const std::size_t lo = std::min(count, w * stripe);
      const std::size_t hi = std::min(count, lo + stripe);
      for (std::size_t r = lo; r < hi; ++r) {
        const std::size_t y = first + r;
        auto& out = row_out[r];
        out.clear();
        for (std::size_t x = 0; x < image.width; ++x) {
          const RgbColor pixel = image.at(x, y);
          const auto band = classifier.classify_index(pixel);
          if (!band) continue;
          const GeoPoint geo = pixel_to_geo(transform, static_cast<double>(x) + 0.5,
                                            static_cast<double>(y) + 0.5);
          out.push_back({geo.latitude, geo.longitude, pixel, palette[*band].midpoint_db});
        }
      }
    });
    for (std::size_t r = 0; r < count; ++r) {
      for (const auto& s : row_out[r]) sink(s);
      stats.matched += row_out[r].size();
    }
  }
  return stats;
}

inline std::vector<NoiseSample> scan_image(const Image& image, const AffineTransform& transform,
                                           std::span<const LegendBand> palette,
                                           const ScanOptions& options = {}) {
  std::vector<NoiseSample> out;
  scan_image(image, transform, palette, [&](const NoiseSample& s) { out.push_back(s); }, options);
  return out;
}

// --- files -----------------------------------------------------------------

inline const std::vector<std::string>& sample_header() {
  static const std::vector<std::string> header{"latitude", "longitude", "red", "green", "blue", "noise"};
  return header;
}

inline std::string format_sample(const NoiseSample& s) {
  return format_double(s.latitude) + ',' + format_double(s.longitude) + ',' +
         std::to_string(s.color.red) + ',' + std::to_string(s.color.green) + ',' +
         std::to_string(s.color.blue) + ',' + format_double(s.noise_db) + '\n';
}

// Streams samples to a file as they arrive; the file is moved into place on
// commit() so a failed run never leaves a truncated output behind.
class SampleWriter {
 public:
  explicit SampleWriter(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    tmp_ = path_;
    tmp_ += ".tmp";
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) fail(ErrorCategory::kIo, "cannot write " + tmp_.string());
    out_ << join_fields(sample_header()) << '\n';
  }

  void operator()(const NoiseSample& s) { out_ << format_sample(s); }

  void commit() {
    out_.close();
    if (!out_) fail(ErrorCategory::kIo, "write failed for " + tmp_.string());
    std::filesystem::rename(tmp_, path_);
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
};

inline NoiseSample parse_sample(const Table& table, std::size_t r) {
  auto channel = [&](std::size_t c) {
    const double v = table.number(r, c);
    if (v < 0 || v > 255 || v != static_cast<int>(v)) {
      fail(ErrorCategory::kSchema, "sample row " + std::to_string(r + 1) + ": bad color channel");
    }
    return static_cast<std::uint8_t>(v);
  };
  return {table.number(r, 0), table.number(r, 1), {channel(2), channel(3), channel(4)},
          table.number(r, 5)};
}

inline std::vector<NoiseSample> read_samples(const std::filesystem::path& path) {
  const Table table = read_table(path);
  require_header(table, sample_header(), path.string());
  std::vector<NoiseSample> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) out.push_back(parse_sample(table, r));
  return out;
}

}  // namespace noisemap
