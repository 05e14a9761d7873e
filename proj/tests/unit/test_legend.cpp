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

#include <algorithm>

#include <gtest/gtest.h>

#include "noisemap/legend.hpp"
#include "noisemap/table.hpp"
#include "test_support.hpp"

namespace noisemap {
namespace {

bool has_band(const Palette& pal, double low, double high, RgbColor color) {
  return std::any_of(pal.begin(), pal.end(), [&](const LegendBand& b) {
    return b.low_db == low && b.high_db == high && b.color == color;
  });
}

TEST(BuiltinPalette, ThessalonikiBands) {
  const auto pal = builtin_palette("thessaloniki_neapoli");
  ASSERT_EQ(pal.size(), 9u);
  EXPECT_TRUE(has_band(pal, 40, 45, {182, 254, 191}));
  EXPECT_TRUE(has_band(pal, 45, 50, {255, 255, 0}));
  const auto& top = pal.back();
  EXPECT_EQ(top.low_db, 80.0);
  EXPECT_EQ(top.high_db, 85.0);
  EXPECT_EQ(top.color, (RgbColor{1, 1, 65}));
  EXPECT_TRUE(top.open_ended);
}

TEST(BuiltinPalette, KalamariaBands) {
  const auto pal = builtin_palette("kalamaria");
  ASSERT_EQ(pal.size(), 10u);
  EXPECT_TRUE(has_band(pal, 35, 40, {80, 167, 50}));
  EXPECT_EQ(pal.back().high_db, kOpenBandCeilingDb);
}

TEST(BuiltinPalette, UnknownNameIsConfigurationError) {
  EXPECT_NM_ERROR(builtin_palette("athens"), ErrorCategory::kConfiguration);
}

TEST(BandMidpoint, Values) {
  EXPECT_EQ(band_midpoint(make_band(50, 55, {})), 52.5);
  EXPECT_EQ(band_midpoint(make_band(40, 45, {})), 42.5);
  EXPECT_EQ(builtin_palette("thessaloniki_neapoli").back().midpoint_db, 82.5);
}

TEST(BuiltinPalette, Invariants) {
  for (const char* name : {"thessaloniki_neapoli", "kalamaria"}) {
    const auto pal = builtin_palette(name);
    EXPECT_NO_THROW(validate_palette(pal));
    for (std::size_t i = 0; i < pal.size(); ++i) {
      EXPECT_GT(pal[i].midpoint_db, pal[i].low_db);
      EXPECT_LT(pal[i].midpoint_db, pal[i].high_db);
      if (i > 0) {
        EXPECT_EQ(pal[i].midpoint_db - pal[i - 1].midpoint_db, 5.0) << name << " band " << i;
      }
    }
  }
}

TEST(BandContaining, HalfOpenWithClosedTop) {
  const auto pal = builtin_palette("thessaloniki_neapoli");
  EXPECT_EQ(band_containing(pal, 40.0), 0u);
  EXPECT_EQ(band_containing(pal, 44.999), 0u);
  EXPECT_EQ(band_containing(pal, 45.0), 1u);
  EXPECT_EQ(band_containing(pal, 85.0), 8u);
  EXPECT_FALSE(band_containing(pal, 39.9).has_value());
  EXPECT_FALSE(band_containing(pal, 85.1).has_value());
}

TEST(ValidatePalette, RejectsBrokenPalettes) {
  EXPECT_NM_ERROR(validate_palette(Palette{}), ErrorCategory::kConfiguration);
  EXPECT_NM_ERROR(validate_palette(Palette{make_band(45, 40, {1, 2, 3})}), ErrorCategory::kConfiguration);
  EXPECT_NM_ERROR(validate_palette(Palette{make_band(40, 46, {1, 2, 3}), make_band(45, 50, {4, 5, 6})}),
                  ErrorCategory::kConfiguration);
  EXPECT_NM_ERROR(validate_palette(Palette{make_band(40, 45, {1, 2, 3}), make_band(45, 50, {1, 2, 3})}),
                  ErrorCategory::kConfiguration);
  auto bad_mid = make_band(40, 45, {1, 2, 3});
  bad_mid.midpoint_db = 41.0;
  EXPECT_NM_ERROR(validate_palette(Palette{bad_mid}), ErrorCategory::kConfiguration);
}

TEST(PaletteFile, RoundTrip) {
  testing::TempDir dir;
  const auto pal = builtin_palette("kalamaria");
  write_file_atomic(dir / "pal.json", palette_to_json(pal).dump());
  EXPECT_EQ(load_palette(dir / "pal.json"), pal);
  EXPECT_EQ(resolve_palette((dir / "pal.json").string()), pal);
  EXPECT_EQ(resolve_palette("kalamaria"), pal);
}

TEST(PaletteFile, RejectsMalformed) {
  testing::TempDir dir;
  write_file_atomic(dir / "a.json", "{\"bands\": [{\"low_db\": 40, \"high_db\": 45, \"red\": 300, "
                                    "\"green\": 0, \"blue\": 0}]}");
  EXPECT_NM_ERROR(load_palette(dir / "a.json"), ErrorCategory::kConfiguration);
  write_file_atomic(dir / "b.json", "{\"colors\": []}");
  EXPECT_NM_ERROR(load_palette(dir / "b.json"), ErrorCategory::kConfiguration);
  write_file_atomic(dir / "c.json", "{not json");
  EXPECT_NM_ERROR(load_palette(dir / "c.json"), ErrorCategory::kConfiguration);
  EXPECT_NM_ERROR(resolve_palette((dir / "missing.json").string()), ErrorCategory::kConfiguration);
}

}  // namespace
}  // namespace noisemap
