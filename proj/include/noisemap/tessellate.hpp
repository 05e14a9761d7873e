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

// Square tessellation by coordinate truncation. A sample at (lat, lon) falls
// in the tile keyed by both coordinates truncated toward zero to `decimals`
// digits; the tile's value is the mean noise of its members.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "noisemap/error.hpp"
#include "noisemap/parallel.hpp"
#include "noisemap/reconstruct.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

constexpr int kDefaultTileDecimals = 4;
constexpr int kMaxTileDecimals = 6;

inline double decimal_scale(int decimals) {
  static constexpr double kScales[] = {1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  if (decimals < 0 || decimals > kMaxTileDecimals) {
    fail(ErrorCategory::kConfiguration, "tessellation decimals must be in [0, 6]");
  }
  return kScales[decimals];
}

// Integer tile coordinate: the value truncated toward zero in units of
// 10^-decimals. Values within 1e-6 units of an integer snap to it first, so
// a coordinate written as 40.6301 keys to 406301 even though the nearest
// double is 40.63009999...
inline std::int64_t truncate_units(double value, int decimals) {
  const double scaled = value * decimal_scale(decimals);
  const double nearest = std::round(scaled);
  if (std::abs(scaled - nearest) <= 1e-6) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::trunc(scaled));
}

inline double truncate_coordinate(double value, int decimals) {
  return static_cast<double>(truncate_units(value, decimals)) / decimal_scale(decimals);
}

struct TileKey {
  std::int64_t lat_units = 0;
  std::int64_t lon_units = 0;

  friend bool operator==(const TileKey&, const TileKey&) = default;
  friend auto operator<=>(const TileKey&, const TileKey&) = default;
};

struct TileKeyHash {
  std::size_t operator()(const TileKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.lat_units) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(k.lon_units) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct Tile {
  double lat_key = 0.0;
  double lon_key = 0.0;
  double mean_noise_db = 0.0;
  std::size_t sample_count = 0;

  friend bool operator==(const Tile&, const Tile&) = default;
};

// Neumaier-compensated running sum with count and range.
class NoiseAccumulator {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      compensation_ += (sum_ - t) + v;
    } else {
      compensation_ += (v - t) + sum_;
    }
    sum_ = t;
    if (count_ == 0) {
      min_ = max_ = v;
    } else {
      min_ = std::min(min_, v);
      max_ = std::max(max_, v);
    }
    ++count_;
  }

  // Rounding can push sum/count an ulp outside the member range; the clamp
  // keeps the mean inside it.
  double mean() const {
    return std::clamp((sum_ + compensation_) / static_cast<double>(count_), min_, max_);
  }
  std::size_t count() const { return count_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::size_t count_ = 0;
};

// Incremental tessellation for streamed samples.
class Tessellator {
 public:
  explicit Tessellator(int decimals = kDefaultTileDecimals) : decimals_(decimals) {
    decimal_scale(decimals_);
  }

  void add(const NoiseSample& s) {
    groups_[{truncate_units(s.latitude, decimals_), truncate_units(s.longitude, decimals_)}].add(
        s.noise_db);
  }

  std::size_t samples_seen() const {
    std::size_t n = 0;
    for (const auto& [key, acc] : groups_) n += acc.count();
    return n;
  }

  // Tiles sorted by (latitude key, longitude key).
  std::vector<Tile> finish() const {
    std::vector<std::pair<TileKey, const NoiseAccumulator*>> items;
    items.reserve(groups_.size());
    for (const auto& [key, acc] : groups_) items.emplace_back(key, &acc);
    std::sort(items.begin(), items.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    const double scale = decimal_scale(decimals_);
    std::vector<Tile> tiles;
    tiles.reserve(items.size());
    for (const auto& [key, acc] : items) {
      tiles.push_back({static_cast<double>(key.lat_units) / scale,
                       static_cast<double>(key.lon_units) / scale, acc->mean(), acc->count()});
    }
    return tiles;
  }

  int decimals() const { return decimals_; }

 private:
  int decimals_;
  std::unordered_map<TileKey, NoiseAccumulator, TileKeyHash> groups_;
};

// Parallel tessellation: worker w owns the keys whose hash is w modulo the
// worker count and sees them in input order, so the result is bit-identical
// for any worker count.
inline std::vector<Tile> tessellate(std::span<const NoiseSample> samples,
                                    int decimals = kDefaultTileDecimals, int workers = 1) {
  decimal_scale(decimals);
  const std::size_t shards = static_cast<std::size_t>(std::max(1, workers));
  if (shards == 1) {
    Tessellator t(decimals);
    for (const auto& s : samples) t.add(s);
    return t.finish();
  }
  std::vector<std::vector<Tile>> partial(shards);
  parallel_for(shards, workers, [&](std::size_t w) {
    Tessellator t(decimals);
    TileKeyHash hash;
    for (const auto& s : samples) {
      const TileKey key{truncate_units(s.latitude, decimals), truncate_units(s.longitude, decimals)};
      if (hash(key) % shards == w) t.add(s);
    }
    partial[w] = t.finish();
  });
  std::vector<Tile> tiles;
  for (auto& p : partial) tiles.insert(tiles.end(), p.begin(), p.end());
  const double scale = decimal_scale(decimals);
  std::sort(tiles.begin(), tiles.end(), [scale](const Tile& l, const Tile& r) {
    const TileKey kl{std::llround(l.lat_key * scale), std::llround(l.lon_key * scale)};
    const TileKey kr{std::llround(r.lat_key * scale), std::llround(r.lon_key * scale)};
    return kl < kr;
  });
  return tiles;
}

// Fraction of rows removed by tessellation, 1 - tiles/samples.
inline double reduction_ratio(std::size_t samples_in, std::size_t tiles_out) {
  if (samples_in == 0) fail(ErrorCategory::kUndefinedRatio, "reduction ratio of zero samples");
  if (tiles_out > samples_in) {
    fail(ErrorCategory::kPrecondition, "more tiles than samples");
  }
  return 1.0 - static_cast<double>(tiles_out) / static_cast<double>(samples_in);
}

// --- files -----------------------------------------------------------------

inline std::string format_tiles(std::span<const Tile> tiles, int decimals) {
  std::string out = "latitude,longitude,noise,count\n";
  for (const auto& t : tiles) {
    out += format_fixed(t.lat_key, decimals) + ',' + format_fixed(t.lon_key, decimals) + ',' +
           format_double(t.mean_noise_db) + ',' + std::to_string(t.sample_count) + '\n';
  }
  return out;
}

inline std::vector<Tile> read_tiles(const std::filesystem::path& path) {
  const Table table = read_table(path);
  require_header(table, {"latitude", "longitude", "noise", "count"}, path.string());
  std::vector<Tile> tiles;
  tiles.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double count = table.number(r, 3);
    if (count < 1 || count != std::floor(count)) {
      fail(ErrorCategory::kSchema, path.string() + ": tile count must be a positive integer");
    }
    tiles.push_back({table.number(r, 0), table.number(r, 1), table.number(r, 2),
                     static_cast<std::size_t>(count)});
  }
  return tiles;
}

}  // namespace noisemap
