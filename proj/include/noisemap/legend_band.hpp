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

#include <cstdint>
#include <vector>

namespace noisemap {

struct RgbColor {
  std::uint8_t red = 0;
  std::uint8_t green = 0;
  std::uint8_t blue = 0;

  friend bool operator==(const RgbColor&, const RgbColor&) = default;

  std::uint32_t packed() const {
    return (std::uint32_t{red} << 16) | (std::uint32_t{green} << 8) | blue;
  }
};

// One legend entry: a color standing for the decibel interval
// [low_db, high_db). `open_ended` marks a band the legend printed as "N+";
// its upper bound is a closing convention, not a measured limit.
struct LegendBand {
  double low_db = 0.0;
  double high_db = 0.0;
  RgbColor color;
  double midpoint_db = 0.0;
  bool open_ended = false;

  friend bool operator==(const LegendBand&, const LegendBand&) = default;
};

using Palette = std::vector<LegendBand>;

}  // namespace noisemap
