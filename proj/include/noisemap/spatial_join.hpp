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

// Noise features for property locations: the plain mean of the tile values
// whose keys lie within a great-circle radius of the property.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "noisemap/error.hpp"
#include "noisemap/property_prep.hpp"
#include "noisemap/tessellate.hpp"

namespace noisemap {

constexpr double kEarthRadiusM = 6'371'000.0;

struct LatLon {
  double latitude = 0.0;
  double longitude = 0.0;
};

namespace detail {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

inline double haversine_m(LatLon p1, LatLon p2) {
  const double phi1 = p1.latitude * detail::kDegToRad;
  const double phi2 = p2.latitude * detail::kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (p2.longitude - p1.longitude) * detail::kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

// Uniform hash grid over tile keys with cells one radius tall. Queries visit
// the cells overlapping a lat/lon window that provably contains the radius
// disc, then filter by exact haversine distance.
class TileIndex {
 public:
  TileIndex(std::span<const Tile> tiles, double radius_m) : tiles_(tiles.begin(), tiles.end()), radius_m_(radius_m) {
    if (!(radius_m > 0.0)) fail(ErrorCategory::kConfiguration, "join radius must be positive");
    cell_lat_deg_ = radius_m / (kEarthRadiusM * detail::kDegToRad);
    double max_abs_lat = 0.0;
    for (const auto& t : tiles_) max_abs_lat = std::max(max_abs_lat, std::abs(t.lat_key));
    const double c = std::max(0.01, std::cos(std::min(89.0, max_abs_lat) * detail::kDegToRad));
    cell_lon_deg_ = cell_lat_deg_ / c;
    for (std::size_t i = 0; i < tiles_.size(); ++i) {
      cells_[cell_of(tiles_[i].lat_key, tiles_[i].lon_key)].push_back(static_cast<std::uint32_t>(i));
    }
  }

  double radius_m() const { return radius_m_; }
  const std::vector<Tile>& tiles() const { return tiles_; }

  // Indices of tiles within the radius, ascending.
  std::vector<std::size_t> within(LatLon p) const {
    std::vector<std::size_t> hits;
    const double dlat = cell_lat_deg_ * (1.0 + 1e-9) + 1e-12;
    const double lat_lo = p.latitude - dlat;
    const double lat_hi = p.latitude + dlat;
    // hav(d) >= cos(phi1) cos(phi2) hav(dlambda) bounds the longitude span.
    const double phi_max = std::min(90.0, std::max(std::abs(lat_lo), std::abs(lat_hi)));
    const double cmin = std::cos(phi_max * detail::kDegToRad);
    const double hav_d = std::pow(std::sin(radius_m_ / kEarthRadiusM / 2.0), 2.0);
    double dlon = 360.0;
    if (cmin > 0.0) {
      const double s = hav_d / (cmin * cmin);
      if (s < 1.0) dlon = 2.0 * std::asin(std::sqrt(s)) / detail::kDegToRad * (1.0 + 1e-9) + 1e-12;
    }
    const auto r0 = cell_row(lat_lo);
    const auto r1 = cell_row(lat_hi);
    auto c0 = cell_col(p.longitude - dlon);
    auto c1 = cell_col(p.longitude + dlon);
    if (dlon >= 180.0) {
      // Degenerate near the poles: scan everything.
      for (std::size_t i = 0; i < tiles_.size(); ++i) {
        if (haversine_m(p, {tiles_[i].lat_key, tiles_[i].lon_key}) <= radius_m_) hits.push_back(i);
      }
      return hits;
    }
    for (auto r = r0; r <= r1; ++r) {
      for (auto c = c0; c <= c1; ++c) {
        auto it = cells_.find(key(r, c));
        if (it == cells_.end()) continue;
        for (auto i : it->second) {
          if (haversine_m(p, {tiles_[i].lat_key, tiles_[i].lon_key}) <= radius_m_) hits.push_back(i);
        }
      }
    }
    std::sort(hits.begin(), hits.end());
    return hits;
  }

  // Unweighted mean of tile means within the radius; empty if none.
  std::optional<double> noise_at(LatLon p) const {
    const auto hits = within(p);
    if (hits.empty()) return std::nullopt;
    double sum = 0.0;
    for (auto i : hits) sum += tiles_[i].mean_noise_db;
    return sum / static_cast<double>(hits.size());
  }

 private:
  std::int64_t cell_row(double lat) const { return static_cast<std::int64_t>(std::floor(lat / cell_lat_deg_)); }
  std::int64_t cell_col(double lon) const { return static_cast<std::int64_t>(std::floor(lon / cell_lon_deg_)); }
  std::uint64_t cell_of(double lat, double lon) const { return key(cell_row(lat), cell_col(lon)); }
  static std::uint64_t key(std::int64_t r, std::int64_t c) {
    return (static_cast<std::uint64_t>(r) << 32) ^ (static_cast<std::uint64_t>(c) & 0xFFFFFFFFULL);
  }

  std::vector<Tile> tiles_;
  double radius_m_;
  double cell_lat_deg_ = 0.0;
  double cell_lon_deg_ = 0.0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

inline std::optional<double> noise_at(LatLon point, const TileIndex& index) { return index.noise_at(point); }

// Which noise columns a model receives.
enum class NoiseCharacteristic {
  kDayAndNight,  // I: noise_day and noise_night
  kCombined,     // II: noise_combined = mean of the day and night values
  kDayOnly,      // III: noise_day
  kNightOnly,    // IV: noise_night
};

inline const char* characteristic_name(NoiseCharacteristic c) {
  switch (c) {
    case NoiseCharacteristic::kDayAndNight: return "I";
    case NoiseCharacteristic::kCombined: return "II";
    case NoiseCharacteristic::kDayOnly: return "III";
    case NoiseCharacteristic::kNightOnly: return "IV";
  }
  return "?";
}

inline NoiseCharacteristic parse_characteristic(const std::string& s) {
  if (s == "I") return NoiseCharacteristic::kDayAndNight;
  if (s == "II") return NoiseCharacteristic::kCombined;
  if (s == "III") return NoiseCharacteristic::kDayOnly;
  if (s == "IV") return NoiseCharacteristic::kNightOnly;
  fail(ErrorCategory::kConfiguration, "noise characteristic must be I, II, III or IV, got '" + s + "'");
}

inline std::vector<std::string> characteristic_columns(NoiseCharacteristic c) {
  switch (c) {
    case NoiseCharacteristic::kDayAndNight: return {"noise_day", "noise_night"};
    case NoiseCharacteristic::kCombined: return {"noise_combined"};
    case NoiseCharacteristic::kDayOnly: return {"noise_day"};
    case NoiseCharacteristic::kNightOnly: return {"noise_night"};
  }
  return {};
}

struct JoinConfig {
  double radius_m = 100.0;
  NoiseCharacteristic characteristic = NoiseCharacteristic::kDayAndNight;
};

struct JoinReport {
  std::size_t rows_in = 0;
  std::size_t rows_out = 0;
};

// Appends the characteristic's noise columns to each property. Properties
// missing any required value within the radius are removed. Existing noise
// columns are replaced.
inline std::vector<PropertyRecord> attach_noise(std::span<const PropertyRecord> properties,
                                                const TileIndex* day, const TileIndex* night,
                                                NoiseCharacteristic characteristic,
                                                JoinReport* report = nullptr) {
  const bool need_day = characteristic != NoiseCharacteristic::kNightOnly;
  const bool need_night = characteristic != NoiseCharacteristic::kDayOnly;
  if (need_day && !day) fail(ErrorCategory::kConfiguration, "characteristic needs day tiles");
  if (need_night && !night) fail(ErrorCategory::kConfiguration, "characteristic needs night tiles");

  std::vector<PropertyRecord> out;
  for (const auto& p : properties) {
    const LatLon at{p.latitude, p.longitude};
    std::optional<double> d, n;
    if (need_day) {
      d = day->noise_at(at);
      if (!d) continue;
    }
    if (need_night) {
      n = night->noise_at(at);
      if (!n) continue;
    }
    PropertyRecord q = p;
    q.noise.clear();
    switch (characteristic) {
      case NoiseCharacteristic::kDayAndNight:
        q.noise = {{"noise_day", *d}, {"noise_night", *n}};
        break;
      case NoiseCharacteristic::kCombined:
        q.noise = {{"noise_combined", 0.5 * (*d + *n)}};
        break;
      case NoiseCharacteristic::kDayOnly:
        q.noise = {{"noise_day", *d}};
        break;
      case NoiseCharacteristic::kNightOnly:
        q.noise = {{"noise_night", *n}};
        break;
    }
    out.push_back(std::move(q));
  }
  if (report) {
    report->rows_in = properties.size();
    report->rows_out = out.size();
  }
  return out;
}

inline std::vector<PropertyRecord> attach_noise(std::span<const PropertyRecord> properties,
                                                std::span<const Tile> day_tiles,
                                                std::span<const Tile> night_tiles, const JoinConfig& cfg,
                                                JoinReport* report = nullptr) {
  std::optional<TileIndex> day, night;
  if (!day_tiles.empty()) day.emplace(day_tiles, cfg.radius_m);
  if (!night_tiles.empty()) night.emplace(night_tiles, cfg.radius_m);
  return attach_noise(properties, day ? &*day : nullptr, night ? &*night : nullptr, cfg.characteristic,
                      report);
}

}  // namespace noisemap
