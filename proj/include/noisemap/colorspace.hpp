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

// sRGB -> CIELAB conversion and the CIEDE2000 color difference, plus the
// nearest-legend-color classifier built on top of them.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "noisemap/error.hpp"
#include "noisemap/legend_band.hpp"

namespace noisemap {

struct LabColor {
  double lightness = 0.0;
  double a_component = 0.0;
  double b_component = 0.0;

  friend bool operator==(const LabColor&, const LabColor&) = default;
};

namespace detail {

inline double srgb_to_linear(std::uint8_t channel) {
  const double c = channel / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace detail

// sRGB (IEC 61966-2-1 transfer curve) to XYZ to CIELAB, D65 reference white.
inline LabColor rgb_to_lab(RgbColor color) {
  const double r = detail::srgb_to_linear(color.red);
  const double g = detail::srgb_to_linear(color.green);
  const double b = detail::srgb_to_linear(color.blue);

  const double x = 0.412453 * r + 0.357580 * g + 0.180423 * b;
  const double y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
  const double z = 0.019334 * r + 0.119193 * g + 0.950227 * b;

  constexpr double xn = 0.95047;
  constexpr double yn = 1.0;
  constexpr double zn = 1.08883;
  const double fx = detail::lab_f(x / xn);
  const double fy = detail::lab_f(y / yn);
  const double fz = detail::lab_f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// CIEDE2000 with unit weighting factors (kL = kC = kH = 1).
inline double delta_e_2000(const LabColor& c1, const LabColor& c2) {
  using detail::deg2rad;
  using detail::rad2deg;

  const double l1 = c1.lightness, a1 = c1.a_component, b1 = c1.b_component;
  const double l2 = c2.lightness, a2 = c2.a_component, b2 = c2.b_component;

  const double c1ab = std::hypot(a1, b1);
  const double c2ab = std::hypot(a2, b2);
  const double cbar = 0.5 * (c1ab + c2ab);
  const double cbar7 = std::pow(cbar, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(cbar7 / (cbar7 + std::pow(25.0, 7.0))));

  const double a1p = (1.0 + g) * a1;
  const double a2p = (1.0 + g) * a2;
  const double c1p = std::hypot(a1p, b1);
  const double c2p = std::hypot(a2p, b2);

  auto hue = [](double b, double ap) {
    if (b == 0.0 && ap == 0.0) return 0.0;
    double h = rad2deg(std::atan2(b, ap));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double h1p = hue(b1, a1p);
  const double h2p = hue(b2, a2p);

  const double dlp = l2 - l1;
  const double dcp = c2p - c1p;

  double dhp = 0.0;
  if (c1p * c2p != 0.0) {
    dhp = h2p - h1p;
    if (dhp > 180.0) {
      dhp -= 360.0;
    } else if (dhp < -180.0) {
      dhp += 360.0;
    }
  }
  const double dHp = 2.0 * std::sqrt(c1p * c2p) * std::sin(deg2rad(dhp / 2.0));

  const double lbarp = 0.5 * (l1 + l2);
  const double cbarp = 0.5 * (c1p + c2p);

  double hbarp = h1p + h2p;
  if (c1p * c2p != 0.0) {
    if (std::abs(h1p - h2p) <= 180.0) {
      hbarp *= 0.5;
    } else if (h1p + h2p < 360.0) {
      hbarp = 0.5 * (hbarp + 360.0);
    } else {
      hbarp = 0.5 * (hbarp - 360.0);
    }
  }

  const double t = 1.0 - 0.17 * std::cos(deg2rad(hbarp - 30.0)) +
                   0.24 * std::cos(deg2rad(2.0 * hbarp)) +
                   0.32 * std::cos(deg2rad(3.0 * hbarp + 6.0)) -
                   0.20 * std::cos(deg2rad(4.0 * hbarp - 63.0));
  const double dtheta = 30.0 * std::exp(-std::pow((hbarp - 275.0) / 25.0, 2.0));
  const double cbarp7 = std::pow(cbarp, 7.0);
  const double rc = 2.0 * std::sqrt(cbarp7 / (cbarp7 + std::pow(25.0, 7.0)));
  const double lterm = (lbarp - 50.0) * (lbarp - 50.0);
  const double sl = 1.0 + 0.015 * lterm / std::sqrt(20.0 + lterm);
  const double sc = 1.0 + 0.045 * cbarp;
  const double sh = 1.0 + 0.015 * cbarp * t;
  const double rt = -std::sin(deg2rad(2.0 * dtheta)) * rc;

  const double tl = dlp / sl;
  const double tc = dcp / sc;
  const double th = dHp / sh;
  const double sum = tl * tl + tc * tc + th * th + rt * tc * th;
  return std::sqrt(std::max(0.0, sum));
}

inline double delta_e_2000(RgbColor c1, RgbColor c2) {
  return delta_e_2000(rgb_to_lab(c1), rgb_to_lab(c2));
}

constexpr double kDefaultColorThreshold = 20.0;

// Nearest palette band by CIEDE2000, accepted only when the distance is below
// `threshold`. Equidistant bands resolve to the one with the lower decibel
// range. Palette LAB values are computed once and per-pixel results are
// memoized, since heatmaps reuse a handful of colors across millions of
// pixels. Not thread-safe; give each worker its own instance.
class ColorClassifier {
 public:
  ColorClassifier(std::span<const LegendBand> palette, double threshold)
      : palette_(palette.begin(), palette.end()), threshold_(threshold) {
    if (palette_.empty()) fail(ErrorCategory::kConfiguration, "palette is empty");
    if (!(threshold_ > 0.0)) {
      fail(ErrorCategory::kConfiguration, "color threshold must be positive");
    }
    lab_.reserve(palette_.size());
    for (const auto& band : palette_) lab_.push_back(rgb_to_lab(band.color));
  }

  // Index into the palette, or nullopt when no band is close enough.
  std::optional<std::size_t> classify_index(RgbColor pixel) {
    const auto key = pixel.packed();
    if (auto it = cache_.find(key); it != cache_.end()) {
      return it->second < 0 ? std::nullopt
                            : std::optional<std::size_t>(static_cast<std::size_t>(it->second));
    }
    const auto result = compute(pixel);
    cache_.emplace(key, result ? static_cast<int>(*result) : -1);
    return result;
  }

  const std::vector<LegendBand>& palette() const { return palette_; }
  double threshold() const { return threshold_; }

 private:
  std::optional<std::size_t> compute(RgbColor pixel) const {
    const LabColor lab = rgb_to_lab(pixel);
    std::optional<std::size_t> best;
    double best_distance = 0.0;
    for (std::size_t i = 0; i < palette_.size(); ++i) {
      const double d = delta_e_2000(lab, lab_[i]);
      if (!best || d < best_distance ||
          (d == best_distance && palette_[i].low_db < palette_[*best].low_db)) {
        best = i;
        best_distance = d;
      }
    }
    if (best && best_distance < threshold_) return best;
    return std::nullopt;
  }

  std::vector<LegendBand> palette_;
  std::vector<LabColor> lab_;
  double threshold_;
  std::unordered_map<std::uint32_t, int> cache_;
};

inline std::optional<LegendBand> classify_color(RgbColor pixel,
                                                std::span<const LegendBand> palette,
                                                double threshold = kDefaultColorThreshold) {
  ColorClassifier classifier(palette, threshold);
  const auto idx = classifier.classify_index(pixel);
  if (!idx) return std::nullopt;
  return palette[*idx];
}

}  // namespace noisemap
