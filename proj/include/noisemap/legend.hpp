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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "noisemap/error.hpp"
#include "noisemap/legend_band.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

enum class BuiltinPalette { kThessalonikiNeapoli, kKalamaria };

inline double band_midpoint(const LegendBand& band) {
  return 0.5 * (band.low_db + band.high_db);
}

inline LegendBand make_band(double low_db, double high_db, RgbColor color,
                            bool open_ended = false) {
  LegendBand band{low_db, high_db, color, 0.0, open_ended};
  band.midpoint_db = band_midpoint(band);
  return band;
}

// Upper bound given to a legend's open "80+" band.
constexpr double kOpenBandCeilingDb = 85.0;

inline Palette builtin_palette(BuiltinPalette name) {
  switch (name) {
    case BuiltinPalette::kThessalonikiNeapoli:
      return {
          make_band(40, 45, {182, 254, 191}),
          make_band(45, 50, {255, 255, 0}),
          make_band(50, 55, {254, 196, 71}),
          make_band(55, 60, {253, 103, 2}),
          make_band(60, 65, {255, 51, 50}),
          make_band(65, 70, {152, 0, 51}),
          make_band(70, 75, {174, 155, 219}),
          make_band(75, 80, {1, 0, 251}),
          make_band(80, kOpenBandCeilingDb, {1, 1, 65}, true),
      };
    case BuiltinPalette::kKalamaria:
      return {
          make_band(35, 40, {80, 167, 50}),
          make_band(40, 45, {14, 113, 49}),
          make_band(45, 50, {255, 243, 59}),
          make_band(50, 55, {172, 121, 78}),
          make_band(55, 60, {255, 94, 55}),
          make_band(60, 65, {192, 23, 18}),
          make_band(65, 70, {138, 18, 19}),
          make_band(70, 75, {144, 14, 102}),
          make_band(75, 80, {40, 115, 183}),
          make_band(80, kOpenBandCeilingDb, {10, 65, 121}, true),
      };
  }
  fail(ErrorCategory::kConfiguration, "unknown builtin palette");
}

inline Palette builtin_palette(std::string_view name) {
  if (name == "thessaloniki_neapoli") return builtin_palette(BuiltinPalette::kThessalonikiNeapoli);
  if (name == "kalamaria") return builtin_palette(BuiltinPalette::kKalamaria);
  fail(ErrorCategory::kConfiguration, "unknown palette '" + std::string(name) +
                                          "' (expected thessaloniki_neapoli or kalamaria)");
}

// Checks the band invariants: positive width, consistent midpoints, ascending
// non-overlapping ranges and pairwise distinct colors.
inline void validate_palette(std::span<const LegendBand> palette) {
  if (palette.empty()) fail(ErrorCategory::kConfiguration, "palette is empty");
  for (std::size_t i = 0; i < palette.size(); ++i) {
    const auto& band = palette[i];
    if (!(band.low_db < band.high_db)) {
      fail(ErrorCategory::kConfiguration, "band " + std::to_string(i) + ": low_db must be < high_db");
    }
    if (band.midpoint_db != band_midpoint(band)) {
      fail(ErrorCategory::kConfiguration, "band " + std::to_string(i) + ": midpoint mismatch");
    }
    if (i > 0 && palette[i - 1].high_db > band.low_db) {
      fail(ErrorCategory::kConfiguration,
           "bands must be sorted ascending and non-overlapping (band " + std::to_string(i) + ")");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (palette[j].color == band.color) {
        fail(ErrorCategory::kConfiguration, "bands " + std::to_string(j) + " and " +
                                                std::to_string(i) + " share a color");
      }
    }
  }
}

// Band whose [low, high) interval holds `db`; the last band also accepts its
// closing bound so a tile averaging exactly 85 dB still renders.
inline std::optional<std::size_t> band_containing(std::span<const LegendBand> palette, double db) {
  for (std::size_t i = 0; i < palette.size(); ++i) {
    const auto& band = palette[i];
    if (db >= band.low_db && (db < band.high_db || (i + 1 == palette.size() && db == band.high_db))) {
      return i;
    }
  }
  return std::nullopt;
}

// Palette files are JSON:
//   {"bands": [{"low_db": 40, "high_db": 45, "red": 182, "green": 254,
//               "blue": 191, "open_ended": false}, ...]}
// `open_ended` is optional.
inline Palette palette_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("bands") || !doc["bands"].is_array()) {
    fail(ErrorCategory::kConfiguration, "palette file needs a 'bands' array");
  }
  Palette palette;
  for (const auto& entry : doc["bands"]) {
    auto channel = [&](const char* key) {
      const int v = entry.at(key).get<int>();
      if (v < 0 || v > 255) {
        fail(ErrorCategory::kConfiguration, std::string("palette channel '") + key + "' out of range");
      }
      return static_cast<std::uint8_t>(v);
    };
    try {
      palette.push_back(make_band(entry.at("low_db").get<double>(),
                                  entry.at("high_db").get<double>(),
                                  {channel("red"), channel("green"), channel("blue")},
                                  entry.value("open_ended", false)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCategory::kConfiguration, std::string("bad palette entry: ") + e.what());
    }
  }
  validate_palette(palette);
  return palette;
}

inline nlohmann::json palette_to_json(std::span<const LegendBand> palette) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& band : palette) {
    bands.push_back({{"low_db", band.low_db},
                     {"high_db", band.high_db},
                     {"red", band.color.red},
                     {"green", band.color.green},
                     {"blue", band.color.blue},
                     {"open_ended", band.open_ended}});
  }
  return {{"bands", bands}};
}

inline Palette load_palette(const std::filesystem::path& path) {
  try {
    return palette_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::kConfiguration, path.string() + ": " + e.what());
  }
}

// A built-in name, or a path to a palette file.
inline Palette resolve_palette(const std::string& name_or_path) {
  if (name_or_path == "thessaloniki_neapoli" || name_or_path == "kalamaria") {
    return builtin_palette(name_or_path);
  }
  if (std::filesystem::exists(name_or_path)) return load_palette(name_or_path);
  fail(ErrorCategory::kConfiguration, "unknown palette '" + name_or_path + "'");
}

}  // namespace noisemap
