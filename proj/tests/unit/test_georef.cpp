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
#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "noisemap/georef.hpp"
#include "noisemap/synthetic.hpp"
#include "test_support.hpp"

namespace noisemap {
namespace {

const AffineTransform kTruth{5.1e-5, 1.3e-6, 22.9371, -0.9e-6, -3.8e-5, 40.6412};

GroundControlPoint exact(double x, double y, const AffineTransform& t = kTruth) {
  const auto g = pixel_to_geo(t, x, y);
  return {x, y, g.longitude, g.latitude};
}

TEST(FitAffine, IdentityFromUnitTriangle) {
  const std::vector<GroundControlPoint> gcps{{0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}};
  const auto t = fit_affine(gcps, nullptr);
  EXPECT_NEAR(t.a, 1.0, 1e-12);
  EXPECT_NEAR(t.b, 0.0, 1e-12);
  EXPECT_NEAR(t.c, 0.0, 1e-12);
  EXPECT_NEAR(t.d, 0.0, 1e-12);
  EXPECT_NEAR(t.e, 1.0, 1e-12);
  EXPECT_NEAR(t.f, 0.0, 1e-12);
}

TEST(FitAffine, AxisAlignedScaleAndTranslation) {
  const std::vector<GroundControlPoint> gcps{
      {0, 0, 22.90, 40.60}, {100, 0, 22.91, 40.60}, {0, 100, 22.90, 40.59}};
  const auto t = fit_affine(gcps, nullptr);
  EXPECT_NEAR(t.a, 1e-4, 1e-12);
  EXPECT_NEAR(t.b, 0.0, 1e-12);
  EXPECT_NEAR(t.c, 22.90, 1e-12);
  EXPECT_NEAR(t.d, 0.0, 1e-12);
  EXPECT_NEAR(t.e, -1e-4, 1e-12);
  EXPECT_NEAR(t.f, 40.60, 1e-12);
}

TEST(FitAffine, ThreeExactPointsInterpolate) {
  const std::vector<GroundControlPoint> gcps{exact(12, 30), exact(240, 18), exact(100, 220)};
  const auto t = fit_affine(gcps, nullptr);
  EXPECT_LE(residual_rmse(t, gcps), 1e-9);
}

TEST(FitAffine, NoiselessFitRecoversOutputs) {
  const auto gcps = synthetic_gcps(kTruth, 12, 512, 512, 0.0, 8);
  const auto t = fit_affine(gcps, nullptr);
  for (double x : {0.0, 100.5, 511.0}) {
    for (double y : {3.0, 256.0, 480.25}) {
      const auto a = pixel_to_geo(t, x, y);
      const auto b = pixel_to_geo(kTruth, x, y);
      EXPECT_NEAR(a.longitude, b.longitude, 1e-9);
      EXPECT_NEAR(a.latitude, b.latitude, 1e-9);
    }
  }
}

// Independent uncentered normal-equations solve (Cramer's rule, long double).
AffineTransform cramer_oracle(const std::vector<GroundControlPoint>& gcps) {
  long double sxx = 0, sxy = 0, sx = 0, syy = 0, sy = 0, n = 0;
  long double bx[2] = {0, 0}, by[2] = {0, 0}, b1[2] = {0, 0};
  for (const auto& g : gcps) {
    sxx += g.pixel_x * static_cast<long double>(g.pixel_x);
    sxy += g.pixel_x * static_cast<long double>(g.pixel_y);
    syy += g.pixel_y * static_cast<long double>(g.pixel_y);
    sx += g.pixel_x;
    sy += g.pixel_y;
    n += 1;
    const long double t[2] = {g.longitude, g.latitude};
    for (int k = 0; k < 2; ++k) {
      bx[k] += g.pixel_x * t[k];
      by[k] += g.pixel_y * t[k];
      b1[k] += t[k];
    }
  }
  auto det3 = [](long double a, long double b, long double c, long double d, long double e, long double f,
                 long double g, long double h, long double i) {
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  };
  const long double det = det3(sxx, sxy, sx, sxy, syy, sy, sx, sy, n);
  long double coef[2][3];
  for (int k = 0; k < 2; ++k) {
    coef[k][0] = det3(bx[k], sxy, sx, by[k], syy, sy, b1[k], sy, n) / det;
    coef[k][1] = det3(sxx, bx[k], sx, sxy, by[k], sy, sx, b1[k], n) / det;
    coef[k][2] = det3(sxx, sxy, bx[k], sxy, syy, by[k], sx, sy, b1[k]) / det;
  }
  return {static_cast<double>(coef[0][0]), static_cast<double>(coef[0][1]), static_cast<double>(coef[0][2]),
          static_cast<double>(coef[1][0]), static_cast<double>(coef[1][1]), static_cast<double>(coef[1][2])};
}

TEST(FitAffine, NoisyPointsMatchNormalEquations) {
  const double sigma = 0.5;
  const auto gcps = synthetic_gcps(kTruth, 10, 256, 256, sigma, 99);
  const auto t = fit_affine(gcps, nullptr);
  const auto o = cramer_oracle(gcps);
  EXPECT_NEAR(t.a, o.a, 1e-9);
  EXPECT_NEAR(t.b, o.b, 1e-9);
  EXPECT_NEAR(t.c, o.c, 1e-9);
  EXPECT_NEAR(t.d, o.d, 1e-9);
  EXPECT_NEAR(t.e, o.e, 1e-9);
  EXPECT_NEAR(t.f, o.f, 1e-9);
  EXPECT_NEAR(residual_rmse(t, gcps), residual_rmse(o, gcps), 1e-9);

  // Predicted positions stay within 2 sigma pixels of the truth.
  const double scale = std::hypot(kTruth.a, kTruth.d);
  const auto held_out = synthetic_gcps(kTruth, 20, 256, 256, 0.0, 100);
  double sum = 0.0;
  for (const auto& g : held_out) {
    const auto p = pixel_to_geo(t, g.pixel_x, g.pixel_y);
    sum += std::pow(p.longitude - g.longitude, 2) + std::pow(p.latitude - g.latitude, 2);
  }
  EXPECT_LT(std::sqrt(sum / static_cast<double>(held_out.size())), 2.0 * sigma * scale);
}

TEST(FitAffine, OrderInvariant) {
  auto gcps = synthetic_gcps(kTruth, 10, 256, 256, 0.5, 3);
  const auto t1 = fit_affine(gcps, nullptr);
  std::reverse(gcps.begin(), gcps.end());
  std::rotate(gcps.begin(), gcps.begin() + 3, gcps.end());
  const auto t2 = fit_affine(gcps, nullptr);
  EXPECT_NEAR(t1.a, t2.a, 1e-15);
  EXPECT_NEAR(t1.e, t2.e, 1e-15);
  EXPECT_NEAR(t1.c, t2.c, 1e-12);
  EXPECT_NEAR(t1.f, t2.f, 1e-12);
}

TEST(FitAffine, Errors) {
  const std::vector<GroundControlPoint> two{exact(0, 0), exact(1, 1)};
  EXPECT_NM_ERROR(fit_affine(two, nullptr), ErrorCategory::kInsufficientData);
  const std::vector<GroundControlPoint> collinear{exact(0, 0), exact(10, 10), exact(20, 20), exact(35, 35)};
  EXPECT_NM_ERROR(fit_affine(collinear, nullptr), ErrorCategory::kDegenerateGeometry);
}

TEST(FitAffine, IllConditionedGeometryWarns) {
  // Nearly collinear points far from the origin.
  const std::vector<GroundControlPoint> gcps{exact(1000, 1000), exact(1100, 1100), exact(1200, 1200.02)};
  std::ostringstream warnings;
  fit_affine(gcps, &warnings);
  EXPECT_NE(warnings.str().find("ill-conditioned"), std::string::npos);

  std::ostringstream quiet;
  fit_affine(std::vector<GroundControlPoint>{exact(0, 0), exact(100, 0), exact(0, 100)}, &quiet);
  EXPECT_TRUE(quiet.str().empty());
}

TEST(PixelToGeo, Examples) {
  EXPECT_EQ(pixel_to_geo(AffineTransform{}, 3.5, 7.25).longitude, 3.5);
  EXPECT_EQ(pixel_to_geo(AffineTransform{}, 3.5, 7.25).latitude, 7.25);
  const AffineTransform shift{1, 0, 10, 0, 1, 20};
  EXPECT_EQ(pixel_to_geo(shift, 0, 0).longitude, 10.0);
  EXPECT_EQ(pixel_to_geo(shift, 0, 0).latitude, 20.0);
}

TEST(Invert, RoundTrip) {
  const auto inv = invert(kTruth);
  const auto g = pixel_to_geo(kTruth, 123.25, 77.5);
  const auto p = pixel_to_geo(inv, g.longitude, g.latitude);
  EXPECT_NEAR(p.longitude, 123.25, 1e-6);
  EXPECT_NEAR(p.latitude, 77.5, 1e-6);
  EXPECT_NM_ERROR(invert(AffineTransform{1, 2, 0, 2, 4, 0}), ErrorCategory::kDegenerateGeometry);
}

TEST(ResidualRmse, ConflictingDuplicatesArePositive) {
  const std::vector<GroundControlPoint> gcps{
      {0, 0, 0, 0}, {0, 0, 1, 1}, {10, 0, 10, 0}, {0, 10, 0, 10}};
  const auto t = fit_affine(gcps, nullptr);
  EXPECT_GT(residual_rmse(t, gcps), 0.0);
  EXPECT_NM_ERROR(residual_rmse(t, std::vector<GroundControlPoint>{}), ErrorCategory::kInsufficientData);
}

TEST(GcpFile, RoundTripAndSchema) {
  testing::TempDir dir;
  const auto gcps = synthetic_gcps(kTruth, 5, 100, 100, 0.0, 1);
  write_file_atomic(dir / "gcps.csv", format_gcps(gcps));
  const auto back = read_gcps(dir / "gcps.csv");
  ASSERT_EQ(back.size(), gcps.size());
  for (std::size_t i = 0; i < gcps.size(); ++i) {
    EXPECT_EQ(back[i].pixel_x, gcps[i].pixel_x);
    EXPECT_EQ(back[i].latitude, gcps[i].latitude);
  }
  write_file_atomic(dir / "bad.csv", "x,y,lon,lat\n1,2,3,4\n");
  EXPECT_NM_ERROR(read_gcps(dir / "bad.csv"), ErrorCategory::kSchema);
}

TEST(TransformJson, RoundTrip) {
  EXPECT_EQ(transform_from_json(transform_to_json(kTruth)), kTruth);
}

}  // namespace
}  // namespace noisemap
