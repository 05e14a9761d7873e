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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "noisemap/colorspace.hpp"
#include "noisemap/georef.hpp"
#include "noisemap/legend.hpp"
#include "noisemap/raster.hpp"
#include "noisemap/tessellate.hpp"

namespace noisemap {

struct RenderedMap {
  Image image;
  // Pixel -> lon/lat for the rendered raster; feed it back to scan_image.
  AffineTransform transform;
  std::size_t tiles_drawn = 0;
  std::size_t tiles_skipped = 0;  // mean outside every band
  std::size_t tiles_lossy = 0;    // drawn solid although members were asked for
};

// Background for cells without a tile: the candidate farthest (by
// CIEDE2000) from every band color, so a rescan drops it. Fails when even
// that candidate would classify.
inline RgbColor background_for(std::span<const LegendBand> palette, double threshold) {
  const RgbColor candidates[] = {{255, 255, 255}, {0, 0, 0},     {128, 128, 128},
                                 {255, 0, 255},   {0, 255, 255}, {0, 255, 0}};
  RgbColor best = candidates[0];
  double best_gap = -1.0;
  for (const auto& c : candidates) {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& band : palette) gap = std::min(gap, delta_e_2000(c, band.color));
    if (gap > best_gap) {
      best_gap = gap;
      best = c;
    }
  }
  if (!(best_gap >= threshold)) {
    fail(ErrorCategory::kConfiguration, "no background color is distinguishable from the palette");
  }
  return best;
}

// Lower edge, in units, of the cell holding tile key `units`. Truncation
// toward zero makes negative cells extend downward from their key.
inline std::int64_t cell_lower_units(std::int64_t units) { return units < 0 ? units - 1 : units; }

struct RenderOptions {
  int decimals = kDefaultTileDecimals;
  // Pixels per cell side; 0 picks the smallest side holding every tile's
  // members.
  int pixels_per_cell = 0;
  double threshold = kDefaultColorThreshold;
  // Draw each tile as a solid square in the band containing its mean. Good
  // for viewing, but a rescan then returns band midpoints and ppc^2 counts.
  bool fill = false;
};

// Band colors for a tile's members: `count` band indices, at most two
// distinct, whose midpoints reproduce the tile mean bit for bit under the
// tessellator's accumulator. Empty when no such pair exists.
inline std::vector<std::size_t> member_bands(const Tile& tile, std::span<const LegendBand> palette) {
  const auto n = tile.sample_count;
  const double target = tile.mean_noise_db * static_cast<double>(n);
  auto reproduces = [&](std::size_t lo, std::size_t hi, std::size_t a) {
    NoiseAccumulator acc;
    for (std::size_t k = 0; k < n; ++k) acc.add(palette[k < a ? lo : hi].midpoint_db);
    return acc.mean() == tile.mean_noise_db;
  };
  for (std::size_t i = 0; i < palette.size(); ++i) {
    const double mi = palette[i].midpoint_db;
    if (mi == tile.mean_noise_db && reproduces(i, i, n)) return std::vector<std::size_t>(n, i);
    for (std::size_t j = i + 1; j < palette.size(); ++j) {
      const double mj = palette[j].midpoint_db;
      // a members at mi and n - a at mj.
      const double a_real = (static_cast<double>(n) * mj - target) / (mj - mi);
      const double a_round = std::round(a_real);
      if (a_round <= 0.0 || a_round >= static_cast<double>(n)) continue;
      const auto a = static_cast<std::size_t>(a_round);
      if (reproduces(i, j, a)) {
        std::vector<std::size_t> out(n, j);
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(a), i);
        return out;
      }
    }
  }
  return {};
}

// Rasterizes tiles on their tessellation grid, one cell per key. By default
// a cell receives one colored pixel per member sample (row-major from its
// top-left), with colors chosen so that scanning and re-tessellating the
// image gives back the same key, count and mean. The rest of the cell, and
// every cell without a tile, is transparent background. Tiles whose mean no
// pair of band midpoints reproduces fall back to a solid square.
inline RenderedMap render_tiles(std::span<const Tile> tiles, std::span<const LegendBand> palette,
                                const RenderOptions& opt = {}) {
  validate_palette(palette);
  if (tiles.empty()) fail(ErrorCategory::kInsufficientData, "no tiles to render");
  if (opt.pixels_per_cell < 0) fail(ErrorCategory::kConfiguration, "pixels per cell must be >= 0");
  const double scale = decimal_scale(opt.decimals);

  std::int64_t min_lon = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_lon = std::numeric_limits<std::int64_t>::min();
  std::int64_t min_lat = min_lon;
  std::int64_t max_lat = max_lon;
  std::size_t max_count = 1;
  std::vector<std::pair<std::int64_t, std::int64_t>> lower(tiles.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto lat = cell_lower_units(std::llround(tiles[i].lat_key * scale));
    const auto lon = cell_lower_units(std::llround(tiles[i].lon_key * scale));
    lower[i] = {lat, lon};
    min_lat = std::min(min_lat, lat);
    max_lat = std::max(max_lat, lat);
    min_lon = std::min(min_lon, lon);
    max_lon = std::max(max_lon, lon);
    max_count = std::max(max_count, tiles[i].sample_count);
  }
  std::size_t ppc = static_cast<std::size_t>(opt.pixels_per_cell);
  if (ppc == 0) {
    ppc = opt.fill ? 1 : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(max_count))));
    while (!opt.fill && ppc * ppc < max_count) ++ppc;
  }
  const auto cols = static_cast<std::size_t>(max_lon - min_lon + 1);
  const auto rows = static_cast<std::size_t>(max_lat - min_lat + 1);
  if (static_cast<double>(cols * ppc) * static_cast<double>(rows * ppc) > 200e6) {
    fail(ErrorCategory::kConfiguration, "rendered raster would exceed 200M pixels");
  }

  RenderedMap map;
  map.image = Image(cols * ppc, rows * ppc, background_for(palette, opt.threshold), 0);
  const double pixel_deg = 1.0 / (scale * static_cast<double>(ppc));
  map.transform = {pixel_deg, 0.0, static_cast<double>(min_lon) / scale,
                   0.0, -pixel_deg, static_cast<double>(max_lat + 1) / scale};

  for (std::size_t i = 0; i < tiles.size(); ++i) {
    std::vector<std::size_t> bands;
    if (!opt.fill && tiles[i].sample_count <= ppc * ppc) bands = member_bands(tiles[i], palette);
    if (bands.empty()) {
      const auto band = band_containing(palette, tiles[i].mean_noise_db);
      if (!band) {
        ++map.tiles_skipped;
        continue;
      }
      if (!opt.fill) ++map.tiles_lossy;
      bands.assign(ppc * ppc, *band);
    }
    ++map.tiles_drawn;
    const auto col = static_cast<std::size_t>(lower[i].second - min_lon);
    const auto row = static_cast<std::size_t>(max_lat - lower[i].first);
    for (std::size_t k = 0; k < bands.size(); ++k) {
      const std::size_t x = col * ppc + k % ppc;
      const std::size_t y = row * ppc + k / ppc;
      map.image.at(x, y) = palette[bands[k]].color;
      map.image.alpha[y * map.image.width + x] = 255;
    }
  }
  return map;
}

// Polyline chart of y against x on a white canvas with a frame. Intended as
// a quick look; the delimited-text curve is the canonical output.
inline Image plot_curve(std::span<const double> xs, std::span<const double> ys,
                        std::size_t width = 480, std::size_t height = 320) {
  Image img(width, height, {255, 255, 255}, 255);
  const std::size_t margin = 20;
  const RgbColor frame{160, 160, 160};
  for (std::size_t x = margin; x < width - margin; ++x) {
    img.at(x, margin) = frame;
    img.at(x, height - margin - 1) = frame;
  }
  for (std::size_t y = margin; y < height - margin; ++y) {
    img.at(margin, y) = frame;
    img.at(width - margin - 1, y) = frame;
  }
  if (xs.size() < 2 || xs.size() != ys.size()) return img;
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  const double xr = *xmax > *xmin ? *xmax - *xmin : 1.0;
  const double yr = *ymax > *ymin ? *ymax - *ymin : 1.0;
  const double w = static_cast<double>(width - 2 * margin - 1);
  const double h = static_cast<double>(height - 2 * margin - 1);
  auto to_px = [&](std::size_t i) {
    return std::pair<double, double>{margin + (xs[i] - *xmin) / xr * w,
                                     height - margin - 1 - (ys[i] - *ymin) / yr * h};
  };
  const RgbColor line{31, 119, 180};
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const auto [x0, y0] = to_px(i - 1);
    const auto [x1, y1] = to_px(i);
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const auto px = static_cast<std::size_t>(std::lround(x0 + t * (x1 - x0)));
      const auto py = static_cast<std::size_t>(std::lround(y0 + t * (y1 - y0)));
      if (px < width && py < height) img.at(px, py) = line;
    }
  }
  return img;
}

}  // namespace noisemap
