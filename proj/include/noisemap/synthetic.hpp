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

// Seeded synthetic inputs with known ground truth: legend-coded heatmaps of
// a smooth decibel field, control points for a known transform, and
// property listings whose price carries a planted noise effect.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "noisemap/dataset.hpp"
#include "noisemap/georef.hpp"
#include "noisemap/legend.hpp"
#include "noisemap/property_prep.hpp"
#include "noisemap/raster.hpp"
#include "noisemap/seed.hpp"

namespace noisemap {

struct HeatmapOptions {
  std::size_t width = 256;
  std::size_t height = 256;
  double origin_longitude = 22.94;
  double origin_latitude = 40.64;  // top edge
  double pixel_deg = 5e-5;
  bool blend_borders = true;
  std::uint64_t seed = 1;
};

struct SyntheticHeatmap {
  Image image;
  AffineTransform transform;  // pixel -> lon/lat
  std::vector<double> field_db;
  std::vector<int> band;           // true band per pixel
  std::vector<std::uint8_t> border;  // 1 where the color is a blend
  std::vector<int> blend_partner;  // band mixed in at border pixels, else -1
};

// Smooth field spanning the palette's range: three seeded sinusoids.
inline double smooth_field(double u, double v, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "field"));
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
  constexpr double tau = 2.0 * std::numbers::pi;
  const double s = 0.5 * std::sin(tau * (1.3 * u + p1)) + 0.3 * std::sin(tau * (1.1 * v + p2)) +
                   0.2 * std::sin(tau * (0.7 * (u + v) + p3));
  return lo + (hi - lo) * (s + 1.0) / 2.0;
}

inline RgbColor blend(RgbColor a, RgbColor b) {
  auto mix = [](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>((static_cast<unsigned>(x) + static_cast<unsigned>(y) + 1U) / 2U);
  };
  return {mix(a.red, b.red), mix(a.green, b.green), mix(a.blue, b.blue)};
}

// Quantizes the field to bands. With blending on, a pixel whose right (or
// else lower) neighbor lies in another band is drawn as the 50/50 mix of
// the two band colors, imitating anti-aliased borders.
inline SyntheticHeatmap synthetic_heatmap(std::span<const LegendBand> palette, const HeatmapOptions& opt) {
  validate_palette(palette);
  if (opt.width < 2 || opt.height < 2) fail(ErrorCategory::kConfiguration, "heatmap must be at least 2x2");
  SyntheticHeatmap out;
  const std::size_t n = opt.width * opt.height;
  out.image = Image(opt.width, opt.height);
  out.transform = {opt.pixel_deg, 0.0, opt.origin_longitude, 0.0, -opt.pixel_deg, opt.origin_latitude};
  out.field_db.resize(n);
  out.band.resize(n);
  out.border.assign(n, 0);
  out.blend_partner.assign(n, -1);
  const double lo = palette.front().low_db;
  const double hi = palette.back().high_db;
  for (std::size_t y = 0; y < opt.height; ++y) {
    for (std::size_t x = 0; x < opt.width; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(opt.width);
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(opt.height);
      const double db = smooth_field(u, v, lo, hi, opt.seed);
      const std::size_t i = y * opt.width + x;
      out.field_db[i] = db;
      out.band[i] = static_cast<int>(*band_containing(palette, std::clamp(db, lo, hi)));
    }
  }
  for (std::size_t y = 0; y < opt.height; ++y) {
    for (std::size_t x = 0; x < opt.width; ++x) {
      const std::size_t i = y * opt.width + x;
      const int own = out.band[i];
      RgbColor c = palette[static_cast<std::size_t>(own)].color;
      if (opt.blend_borders) {
        int other = -1;
        if (x + 1 < opt.width && out.band[i + 1] != own) {
          other = out.band[i + 1];
        } else if (y + 1 < opt.height && out.band[i + opt.width] != own) {
          other = out.band[i + opt.width];
        }
        if (other >= 0) {
          out.border[i] = 1;
          out.blend_partner[i] = other;
          c = blend(c, palette[static_cast<std::size_t>(other)].color);
        }
      }
      out.image.at(x, y) = c;
    }
  }
  return out;
}

// Control points at random pixel positions mapped through `truth`, with
// optional Gaussian pixel jitter applied to the pixel side.
inline std::vector<GroundControlPoint> synthetic_gcps(const AffineTransform& truth, std::size_t count,
                                                     double width, double height, double pixel_sigma,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "gcps"));
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height);
  std::normal_distribution<double> jitter(0.0, pixel_sigma > 0.0 ? pixel_sigma : 1.0);
  std::vector<GroundControlPoint> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng), y = uy(rng);
    const auto geo = pixel_to_geo(truth, x, y);
    double px = x, py = y;
    if (pixel_sigma > 0.0) {
      px += jitter(rng);
      py += jitter(rng);
    }
    out.push_back({px, py, geo.longitude, geo.latitude});
  }
  return out;
}

// --- planted-effect properties ---------------------------------------------------

struct PlantedOptions {
  std::size_t rows = 2000;
  double beta_a = 300.0;   // euros per dB in the western region
  double beta_c = -300.0;  // euros per dB in the eastern region
  // Residual noise standard deviation as a fraction of the standard
  // deviation of the noise-free price.
  double noise_fraction = 0.10;
  bool dummy_column = true;
  std::uint64_t seed = 1;
};

struct PlantedData {
  Dataset data;
  std::vector<int> region;  // 0 = A-like, 1 = C-like
};

constexpr const char* kPlantedNoiseColumn = "noise_combined";
constexpr const char* kDummyColumn = "dummy_random";

inline double planted_base_price(double size, int rooms, int floor) {
  return 20000.0 + 1200.0 * size + 4000.0 * rooms + 1500.0 * floor;
}

// Population standard deviation; the residual noise is scaled by it.
inline double price_spread(std::span<const double> prices) {
  if (prices.empty()) return 0.0;
  double mean = 0.0;
  for (double p : prices) mean += p;
  mean /= static_cast<double>(prices.size());
  double var = 0.0;
  for (double p : prices) var += (p - mean) * (p - mean);
  return std::sqrt(var / static_cast<double>(prices.size()));
}

// Two side-by-side regions; noise is drawn per property independently of
// position, so location alone cannot stand in for it.
inline PlantedData planted_dataset(const PlantedOptions& opt) {
  std::mt19937_64 rng(derive_seed(opt.seed, "planted"));
  std::uniform_real_distribution<double> size_d(35.0, 160.0), noise_d(50.0, 75.0), lat_d(40.58, 40.64),
      lon_a(22.90, 22.95), lon_c(22.97, 23.02), unit(0.0, 1.0);
  std::uniform_int_distribution<int> floor_d(0, 6), jitter_d(-1, 1);

  PlantedData out;
  out.data.columns = {column::kSize, column::kRooms, column::kFloor, column::kLatitude, column::kLongitude,
                      kPlantedNoiseColumn};
  if (opt.dummy_column) out.data.columns.push_back(kDummyColumn);
  std::vector<std::vector<double>> rows;
  std::vector<double> signal;
  for (std::size_t i = 0; i < opt.rows; ++i) {
    const int region = i % 2 == 0 ? 0 : 1;
    const double size = size_d(rng);
    const int rooms = std::clamp(static_cast<int>(std::lround(size / 30.0)) + jitter_d(rng), 1, 6);
    const int floor = floor_d(rng);
    const double lat = lat_d(rng);
    const double lon = region == 0 ? lon_a(rng) : lon_c(rng);
    const double noise = noise_d(rng);
    const double beta = region == 0 ? opt.beta_a : opt.beta_c;
    std::vector<double> row{size, static_cast<double>(rooms), static_cast<double>(floor), lat, lon, noise};
    if (opt.dummy_column) row.push_back(unit(rng));
    rows.push_back(std::move(row));
    signal.push_back(planted_base_price(size, rooms, floor) + beta * noise);
    out.region.push_back(region);
  }
  std::normal_distribution<double> eps(0.0, opt.noise_fraction * price_spread(signal));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.data.append_row(rows[i], signal[i] + eps(rng), "p" + std::to_string(i));
  }
  return out;
}

// Property listings scattered over a lon/lat box, priced from their size,
// rooms and floor plus beta * noise_fn(lat, lon). Western half uses beta_a,
// eastern half beta_c. Missing values follow the rates of a typical listing
// export: dates about 14%, heating and door frame about 30%.
template <typename NoiseFn>
std::vector<PropertyRecord> synthetic_properties(std::size_t count, double lon_min, double lon_max, double lat_min,
                                                 double lat_max, const NoiseFn& noise_fn, const PlantedOptions& opt) {
  std::mt19937_64 rng(derive_seed(opt.seed, "properties"));
  std::uniform_real_distribution<double> size_d(35.0, 160.0), lat_d(lat_min, lat_max), lon_d(lon_min, lon_max),
      unit(0.0, 1.0);
  std::uniform_int_distribution<int> jitter_d(-1, 1), floor_d(0, 6), energy_d(0, 5), sub_d(0, 2), heat_d(0, 2),
      door_d(0, 1), date_d(-7300, 18000);
  const std::vector<std::string> energy{"A", "B", "C", "D", "E", "F"};
  const std::vector<std::string> floors{"0", "1", "2", "3", "4", "5", "6"};
  const std::vector<std::string> subs{"apartment", "maisonette", "studio"};
  const std::vector<std::string> heats{"autonomous", "central", "none"};
  const std::vector<std::string> doors{"aluminium", "wood"};
  const double lon_mid = 0.5 * (lon_min + lon_max);

  std::vector<PropertyRecord> out;
  std::vector<double> signal;
  for (std::size_t i = 0; i < count; ++i) {
    PropertyRecord p;
    p.id = "h" + std::to_string(i + 1);
    p.size_m2 = std::round(size_d(rng));
    p.number_of_rooms = std::clamp(static_cast<int>(std::lround(p.size_m2 / 30.0)) + jitter_d(rng), 1, 6);
    p.latitude = lat_d(rng);
    p.longitude = lon_d(rng);
    const int floor = floor_d(rng);
    p.floor_level = floors[static_cast<std::size_t>(floor)];
    p.energy_efficiency = energy[static_cast<std::size_t>(energy_d(rng))];
    p.construction_date = date_d(rng);
    p.sub_type = subs[static_cast<std::size_t>(sub_d(rng))];
    p.basic_heating_type = heats[static_cast<std::size_t>(heat_d(rng))];
    p.door_frame_type = doors[static_cast<std::size_t>(door_d(rng))];
    if (unit(rng) < 0.14) p.construction_date.reset();
    if (unit(rng) < 0.01) p.sub_type.reset();
    if (unit(rng) < 0.01) p.floor_level.reset();
    if (unit(rng) < 0.30) p.basic_heating_type.reset();
    if (unit(rng) < 0.30) p.door_frame_type.reset();
    const double beta = p.longitude < lon_mid ? opt.beta_a : opt.beta_c;
    signal.push_back(planted_base_price(p.size_m2, p.number_of_rooms, floor) + beta * noise_fn(p.latitude, p.longitude));
    out.push_back(std::move(p));
  }
  std::normal_distribution<double> eps(0.0, opt.noise_fraction * price_spread(signal));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].price_eur = std::round(signal[i] + eps(rng));
  return out;
}

}  // namespace noisemap
