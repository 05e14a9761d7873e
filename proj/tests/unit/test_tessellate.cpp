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

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "noisemap/tessellate.hpp"
#include "test_support.hpp"

namespace noisemap {
namespace {

NoiseSample at(double lat, double lon, double db) { return {lat, lon, {0, 0, 0}, db}; }

TEST(Tessellate, SingleSample) {
  const std::vector<NoiseSample> s{at(40.63001, 22.95002, 52.5)};
  const auto tiles = tessellate(s);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0], (Tile{40.63, 22.95, 52.5, 1}));
}

TEST(Tessellate, TwoSamplesShareTile) {
  const std::vector<NoiseSample> s{at(40.63001, 22.95002, 52.5), at(40.63009, 22.95008, 57.5)};
  const auto tiles = tessellate(s);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0].lat_key, 40.63);
  EXPECT_EQ(tiles[0].lon_key, 22.95);
  EXPECT_EQ(tiles[0].mean_noise_db, 55.0);
  EXPECT_EQ(tiles[0].sample_count, 2u);
}

TEST(Tessellate, TruncationBoundarySplitsTiles) {
  const std::vector<NoiseSample> s{at(40.63010, 22.95, 60), at(40.63001, 22.95, 50)};
  const auto tiles = tessellate(s);
  ASSERT_EQ(tiles.size(), 2u);
  EXPECT_EQ(tiles[0].lat_key, 40.63);
  EXPECT_EQ(tiles[1].lat_key, 40.6301);
}

TEST(Tessellate, TruncatesTowardZero) {
  EXPECT_EQ(truncate_units(-1.23456, 4), -12345);
  EXPECT_EQ(truncate_units(1.23459, 4), 12345);
  EXPECT_EQ(truncate_units(40.6301, 4), 406301);
  EXPECT_NM_ERROR(truncate_units(1.0, 7), ErrorCategory::kConfiguration);
}

TEST(Tessellate, EmptyInput) {
  EXPECT_TRUE(tessellate(std::vector<NoiseSample>{}).empty());
  EXPECT_TRUE(tessellate(std::vector<NoiseSample>{}, 4, 4).empty());
}

TEST(Tessellate, MatchesGroupingOracleForAnyWorkerCount) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lat(-0.01, 0.01), lon(22.95, 22.97);
  std::uniform_int_distribution<int> band(0, 8);
  std::vector<NoiseSample> samples;
  std::map<std::pair<long long, long long>, std::pair<long double, std::size_t>> oracle;
  for (int i = 0; i < 3000; ++i) {
    const auto s = at(lat(rng), lon(rng), 42.5 + 5.0 * band(rng));
    samples.push_back(s);
    auto& g = oracle[{static_cast<long long>(s.latitude * 1e4), static_cast<long long>(s.longitude * 1e4)}];
    g.first += s.noise_db;
    ++g.second;
  }
  const auto tiles = tessellate(samples, 4, 1);
  ASSERT_EQ(tiles.size(), oracle.size());
  std::size_t total = 0;
  for (const auto& t : tiles) {
    const auto it = oracle.find({std::llround(t.lat_key * 1e4), std::llround(t.lon_key * 1e4)});
    ASSERT_NE(it, oracle.end());
    EXPECT_EQ(t.sample_count, it->second.second);
    EXPECT_NEAR(t.mean_noise_db, static_cast<double>(it->second.first / it->second.second), 1e-9);
    total += t.sample_count;
  }
  EXPECT_EQ(total, samples.size());
  for (int w : {2, 5}) EXPECT_EQ(tessellate(samples, 4, w), tiles);
}

TEST(Tessellator, StreamingMatchesBatch) {
  const std::vector<NoiseSample> s{at(40.1, 22.1, 50), at(40.10001, 22.10003, 60), at(40.2, 22.1, 70)};
  Tessellator t;
  for (const auto& x : s) t.add(x);
  EXPECT_EQ(t.samples_seen(), 3u);
  EXPECT_EQ(t.finish(), tessellate(s));
}

TEST(ReductionRatio, Values) {
  EXPECT_NEAR(reduction_ratio(3312310, 197445), 0.94, 0.005);
  EXPECT_EQ(reduction_ratio(7, 7), 0.0);
  // 0.99494 exactly; published as 99.4%, i.e. the percentage truncated to one decimal.
  EXPECT_EQ(std::trunc(reduction_ratio(21606947, 109245) * 1000.0), 994.0);
  EXPECT_NM_ERROR(reduction_ratio(0, 0), ErrorCategory::kUndefinedRatio);
  EXPECT_NM_ERROR(reduction_ratio(3, 4), ErrorCategory::kPrecondition);
}

TEST(TileFile, RoundTrip) {
  testing::TempDir dir;
  const std::vector<Tile> tiles{{40.6301, 22.95, 55.0, 2}, {-3.1, 100.0001, 47.5, 1}};
  write_file_atomic(dir / "t.csv", format_tiles(tiles, 4));
  EXPECT_EQ(read_tiles(dir / "t.csv"), tiles);
  write_file_atomic(dir / "bad.csv", "latitude,longitude,noise,count\n1,2,3,0\n");
  EXPECT_NM_ERROR(read_tiles(dir / "bad.csv"), ErrorCategory::kSchema);
}

}  // namespace
}  // namespace noisemap
