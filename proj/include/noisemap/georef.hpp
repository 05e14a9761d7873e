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

// Pixel -> lon/lat georeferencing from ground control points.
//
// The model is the six-parameter affine
//
//   longitude = a*x + b*y + c
//   latitude  = d*x + e*y + f
//
// fitted by least squares over all control points. Pixel coordinates are
// centered on their mean before the normal equations are formed, which keeps
// the 3x3 system well conditioned for image-sized coordinates; the offsets
// are folded back into c and f afterwards.

#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "noisemap/error.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

struct GroundControlPoint {
  double pixel_x = 0.0;
  double pixel_y = 0.0;
  double longitude = 0.0;
  double latitude = 0.0;
};

struct GeoPoint {
  double longitude = 0.0;
  double latitude = 0.0;
};

struct AffineTransform {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  double determinant() const { return a * e - b * d; }

  friend bool operator==(const AffineTransform&, const AffineTransform&) = default;
};

inline GeoPoint pixel_to_geo(const AffineTransform& t, double x, double y) {
  return {t.a * x + t.b * y + t.c, t.d * x + t.e * y + t.f};
}

inline void require_non_degenerate(const AffineTransform& t) {
  const double scale = std::max({std::abs(t.a), std::abs(t.b), std::abs(t.d), std::abs(t.e)});
  if (!(scale > 0.0) || !(std::abs(t.determinant()) > 1e-12 * scale * scale)) {
    fail(ErrorCategory::kDegenerateGeometry, "affine transform has a singular linear part");
  }
}

// Geographic -> pixel, the inverse mapping.
inline AffineTransform invert(const AffineTransform& t) {
  require_non_degenerate(t);
  const double det = t.determinant();
  AffineTransform inv;
  inv.a = t.e / det;
  inv.b = -t.b / det;
  inv.d = -t.d / det;
  inv.e = t.a / det;
  inv.c = -(inv.a * t.c + inv.b * t.f);
  inv.f = -(inv.d * t.c + inv.e * t.f);
  return inv;
}

struct AffineFit {
  AffineTransform transform;
  // 1-norm condition number of the (centered) normal matrix.
  double condition_number = 0.0;
};

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Gaussian elimination with partial pivoting; `rhs` holds two right-hand
// sides that are solved together.
inline std::array<std::array<double, 3>, 2> solve3(Mat3 m, std::array<std::array<double, 3>, 2> rhs) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (m[pivot][col] == 0.0) {
      fail(ErrorCategory::kDegenerateGeometry, "normal equations are singular");
    }
    std::swap(m[col], m[pivot]);
    for (auto& b : rhs) std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double factor = m[r][col] / m[col][col];
      for (int k = col; k < 3; ++k) m[r][k] -= factor * m[col][k];
      for (auto& b : rhs) b[r] -= factor * b[col];
    }
  }
  std::array<std::array<double, 3>, 2> out{};
  for (std::size_t s = 0; s < 2; ++s) {
    for (int r = 2; r >= 0; --r) {
      double acc = rhs[s][r];
      for (int k = r + 1; k < 3; ++k) acc -= m[r][k] * out[s][k];
      out[s][r] = acc / m[r][r];
    }
  }
  return out;
}

inline double norm1(const Mat3& m) {
  double best = 0.0;
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int r = 0; r < 3; ++r) s += std::abs(m[r][c]);
    best = std::max(best, s);
  }
  return best;
}

inline Mat3 inverse3(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

}  // namespace detail

constexpr double kConditionWarningThreshold = 1e8;

inline AffineFit fit_affine_detailed(std::span<const GroundControlPoint> gcps) {
  if (gcps.size() < 3) {
    fail(ErrorCategory::kInsufficientData, "affine fit needs at least 3 control points, got " +
                                               std::to_string(gcps.size()));
  }
  const double n = static_cast<double>(gcps.size());
  double mx = 0.0, my = 0.0;
  for (const auto& g : gcps) {
    mx += g.pixel_x;
    my += g.pixel_y;
  }
  mx /= n;
  my /= n;

  // Collinearity test on the centered scatter matrix.
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& g : gcps) {
    const double dx = g.pixel_x - mx;
    const double dy = g.pixel_y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  const double scatter_det = sxx * syy - sxy * sxy;
  if (!(scatter_det > 1e-12 * std::max(1e-300, (sxx + syy) * (sxx + syy)))) {
    fail(ErrorCategory::kDegenerateGeometry, "control points are collinear in pixel space");
  }

  detail::Mat3 normal{};
  std::array<std::array<double, 3>, 2> rhs{};
  for (const auto& g : gcps) {
    const std::array<double, 3> row{g.pixel_x - mx, g.pixel_y - my, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) normal[i][j] += row[i] * row[j];
      rhs[0][i] += row[i] * g.longitude;
      rhs[1][i] += row[i] * g.latitude;
    }
  }
  const auto sol = detail::solve3(normal, rhs);

  AffineFit fit;
  auto& t = fit.transform;
  t.a = sol[0][0];
  t.b = sol[0][1];
  t.c = sol[0][2] - t.a * mx - t.b * my;
  t.d = sol[1][0];
  t.e = sol[1][1];
  t.f = sol[1][2] - t.d * mx - t.e * my;
  fit.condition_number = detail::norm1(normal) * detail::norm1(detail::inverse3(normal));
  require_non_degenerate(t);
  return fit;
}

inline AffineTransform fit_affine(std::span<const GroundControlPoint> gcps,
                                  std::ostream* warnings = &std::cerr) {
  auto fit = fit_affine_detailed(gcps);
  if (warnings && fit.condition_number > kConditionWarningThreshold) {
    *warnings << "warning: ill-conditioned control point geometry (condition number "
              << fit.condition_number << ")\n";
  }
  return fit.transform;
}

// Root mean square of the Euclidean residuals, in degrees.
inline double residual_rmse(const AffineTransform& t, std::span<const GroundControlPoint> gcps) {
  if (gcps.empty()) fail(ErrorCategory::kInsufficientData, "residual needs at least one point");
  double sum = 0.0;
  for (const auto& g : gcps) {
    const auto p = pixel_to_geo(t, g.pixel_x, g.pixel_y);
    const double dx = p.longitude - g.longitude;
    const double dy = p.latitude - g.latitude;
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(gcps.size()));
}

// --- files -----------------------------------------------------------------

inline std::vector<GroundControlPoint> read_gcps(const std::filesystem::path& path) {
  const Table table = read_table(path);
  require_header(table, {"pixel_x", "pixel_y", "longitude", "latitude"}, path.string());
  std::vector<GroundControlPoint> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    GroundControlPoint g{table.number(r, 0), table.number(r, 1), table.number(r, 2),
                         table.number(r, 3)};
    if (g.longitude < -180 || g.longitude > 180 || g.latitude < -90 || g.latitude > 90) {
      fail(ErrorCategory::kSchema, path.string() + ": control point " + std::to_string(r + 1) +
                                       " has out-of-range coordinates");
    }
    if (g.pixel_x < 0 || g.pixel_y < 0) {
      fail(ErrorCategory::kSchema, path.string() + ": control point " + std::to_string(r + 1) +
                                       " has negative pixel coordinates");
    }
    out.push_back(g);
  }
  return out;
}

inline std::string format_gcps(std::span<const GroundControlPoint> gcps) {
  std::string out = "pixel_x,pixel_y,longitude,latitude\n";
  for (const auto& g : gcps) {
    out += format_double(g.pixel_x) + ',' + format_double(g.pixel_y) + ',' +
           format_double(g.longitude) + ',' + format_double(g.latitude) + '\n';
  }
  return out;
}

inline nlohmann::json transform_to_json(const AffineTransform& t) {
  return {{"a", t.a}, {"b", t.b}, {"c", t.c}, {"d", t.d}, {"e", t.e}, {"f", t.f}};
}

inline AffineTransform transform_from_json(const nlohmann::json& j) {
  try {
    AffineTransform t{j.at("a").get<double>(), j.at("b").get<double>(), j.at("c").get<double>(),
                      j.at("d").get<double>(), j.at("e").get<double>(), j.at("f").get<double>()};
    return t;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kSchema, std::string("bad transform: ") + e.what());
  }
}

inline AffineTransform load_transform(const std::filesystem::path& path) {
  try {
    return transform_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::kSchema, path.string() + ": " + e.what());
  }
}

}  // namespace noisemap
