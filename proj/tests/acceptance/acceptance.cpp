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

// Acceptance runner. Prints one "PASS"/"FAIL" line per criterion, followed
// by indented detail lines for each sub-check. `--criterion N` runs one
// criterion; the exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisemap/colorspace.hpp"
#include "noisemap/ensemble.hpp"
#include "noisemap/experiment.hpp"
#include "noisemap/georef.hpp"
#include "noisemap/interpret.hpp"
#include "noisemap/legend.hpp"
#include "noisemap/pipeline.hpp"
#include "noisemap/reconstruct.hpp"
#include "noisemap/render.hpp"
#include "noisemap/spatial_join.hpp"
#include "noisemap/synthetic.hpp"
#include "noisemap/tessellate.hpp"

namespace fs = std::filesystem;
using namespace noisemap;

namespace {

// Sub-check bookkeeping for one criterion.
class Checks {
 public:
  void check(bool ok, const std::string& what) {
    all_ok_ = all_ok_ && ok;
    lines_.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
  }
  bool ok() const { return all_ok_; }
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  bool all_ok_ = true;
  std::vector<std::string> lines_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("noisemap_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// --- 1: color science -----------------------------------------------------------

struct CiedePair {
  LabColor a, b;
  double expected;
};

// Published CIEDE2000 verification pairs, 4-decimal expected differences.
const std::vector<CiedePair>& ciede_pairs() {
  static const std::vector<CiedePair> pairs{
      {{50, 2.6772, -79.7751}, {50, 0, -82.7485}, 2.0425},
      {{50, 3.1571, -77.2803}, {50, 0, -82.7485}, 2.8615},
      {{50, 2.8361, -74.0200}, {50, 0, -82.7485}, 3.4412},
      {{50, -1.3802, -84.2814}, {50, 0, -82.7485}, 1.0000},
      {{50, -1.1848, -84.8006}, {50, 0, -82.7485}, 1.0000},
      {{50, -0.9009, -85.5211}, {50, 0, -82.7485}, 1.0000},
      {{50, 0, 0}, {50, -1, 2}, 2.3669},
      {{50, -1, 2}, {50, 0, 0}, 2.3669},
      {{50, 2.49, -0.001}, {50, -2.49, 0.0009}, 7.1792},
      {{50, 2.49, -0.001}, {50, -2.49, 0.0010}, 7.1792},
      {{50, 2.49, -0.001}, {50, -2.49, 0.0011}, 7.2195},
      {{50, 2.49, -0.001}, {50, -2.49, 0.0012}, 7.2195},
      {{50, -0.001, 2.49}, {50, 0.0009, -2.49}, 4.8045},
      {{50, -0.001, 2.49}, {50, 0.0010, -2.49}, 4.8045},
      {{50, -0.001, 2.49}, {50, 0.0011, -2.49}, 4.7461},
      {{50, 2.5, 0}, {50, 0, -2.5}, 4.3065},
      {{50, 2.5, 0}, {73, 25, -18}, 27.1492},
      {{50, 2.5, 0}, {61, -5, 29}, 22.8977},
      {{50, 2.5, 0}, {56, -27, -3}, 31.9030},
      {{50, 2.5, 0}, {58, 24, 15}, 19.4535},
      {{50, 2.5, 0}, {50, 3.1736, 0.5854}, 1.0000},
      {{50, 2.5, 0}, {50, 3.2972, 0}, 1.0000},
      {{50, 2.5, 0}, {50, 1.8634, 0.5757}, 1.0000},
      {{50, 2.5, 0}, {50, 3.2592, 0.3350}, 1.0000},
      {{60.2574, -34.0099, 36.2677}, {60.4626, -34.1751, 39.4387}, 1.2644},
      {{63.0109, -31.0961, -5.8663}, {62.8187, -29.7946, -4.0864}, 1.2630},
      {{61.2901, 3.7196, -5.3901}, {61.4292, 2.2480, -4.9620}, 1.8731},
      {{35.0831, -44.1164, 3.7933}, {35.0232, -40.0716, 1.5901}, 1.8645},
      {{22.7233, 20.0904, -46.6940}, {23.0331, 14.9730, -42.5619}, 2.0373},
      {{36.4612, 47.8580, 18.3852}, {36.2715, 50.5065, 21.2231}, 1.4146},
      {{90.8027, -2.0831, 1.4410}, {91.1528, -1.6435, 0.0447}, 1.4441},
      {{90.9257, -0.5406, -0.9208}, {88.6381, -0.8985, -0.7239}, 1.5381},
      {{6.7747, -0.2908, -2.4247}, {5.8714, -0.0985, -2.2286}, 0.6377},
      {{2.0776, 0.0795, -1.1350}, {0.9033, -0.0636, -0.5514}, 0.9082},
  };
  return pairs;
}

void criterion_color(Checks& c) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& p : ciede_pairs()) worst = std::max(worst, std::abs(delta_e_2000(p.a, p.b) - p.expected));
  c.check(worst <= 1e-4, std::to_string(ciede_pairs().size()) + " verification pairs, max |error| = " + num(worst));

  for (const char* name : {"thessaloniki_neapoli", "kalamaria"}) {
    const auto pal = builtin_palette(std::string_view(name));
    double min_de = std::numeric_limits<double>::infinity();
    std::size_t close = 0;
    std::string closest;
    for (std::size_t i = 0; i < pal.size(); ++i) {
      for (std::size_t j = i + 1; j < pal.size(); ++j) {
        const double d = delta_e_2000(pal[i].color, pal[j].color);
        if (d <= 20.0) ++close;
        if (d < min_de) {
          min_de = d;
          closest = num(pal[i].low_db, 3) + "-" + num(pal[i].high_db, 3) + " dB vs " + num(pal[j].low_db, 3) +
                    "-" + num(pal[j].high_db, 3) + " dB";
        }
      }
    }
    c.check(close == 0, std::string(name) + ": " + std::to_string(pal.size()) +
                            " colors pairwise dE2000 > 20; pairs at or below 20: " + std::to_string(close) +
                            ", minimum " + num(min_de) + " (" + closest + ")");
  }
  const double secs = seconds_since(t0);
  c.check(secs < 1.0, "runtime " + num(secs, 3) + " s < 1 s");
}

// --- 2: round-trip reconstruction ---------------------------------------------------

void criterion_round_trip(Checks& c) {
  const auto t0 = Clock::now();
  const auto pal = builtin_palette(BuiltinPalette::kThessalonikiNeapoli);
  HeatmapOptions opt;
  opt.width = opt.height = 256;
  opt.blend_borders = true;
  opt.seed = 2024;
  const auto map = synthetic_heatmap(pal, opt);

  // Band assigned to each pixel by the reconstruction, -1 when dropped.
  std::vector<int> got(opt.width * opt.height, -1);
  const auto inverse = invert(map.transform);
  ScanOptions scan;
  scan.threshold = 20.0;
  scan_image(
      map.image, map.transform, pal,
      [&](const NoiseSample& s) {
        const auto px = pixel_to_geo(inverse, s.longitude, s.latitude);
        const auto x = static_cast<std::size_t>(std::floor(px.longitude));
        const auto y = static_cast<std::size_t>(std::floor(px.latitude));
        int band = -1;
        for (std::size_t b = 0; b < pal.size(); ++b) {
          if (pal[b].midpoint_db == s.noise_db) band = static_cast<int>(b);
        }
        got[y * opt.width + x] = band;
      },
      scan);

  std::size_t interior = 0, interior_ok = 0, non_adjacent = 0, border = 0, border_kept = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    const int truth = map.band[i];
    if (got[i] >= 0 && std::abs(got[i] - truth) > 1) ++non_adjacent;
    if (map.border[i]) {
      ++border;
      if (got[i] >= 0) ++border_kept;
    } else {
      ++interior;
      if (got[i] == truth) ++interior_ok;
    }
  }
  const double rate = static_cast<double>(interior_ok) / static_cast<double>(interior);
  c.check(rate >= 0.99, "non-border pixels with the correct midpoint: " + std::to_string(interior_ok) + "/" +
                            std::to_string(interior) + " = " + num(100.0 * rate, 5) + "% (>= 99%)");
  c.check(non_adjacent == 0, "pixels assigned a non-adjacent band: " + std::to_string(non_adjacent));
  c.check(border_kept == 0, "blended border pixels kept: " + std::to_string(border_kept) + "/" +
                                std::to_string(border) + " (all must be dropped)");
  const double secs = seconds_since(t0);
  c.check(secs < 10.0, "runtime " + num(secs, 3) + " s < 10 s");
}

// --- 3: tessellation oracle -----------------------------------------------------

void criterion_tessellation(Checks& c) {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> noise(40.0, 85.0);
  // Two clusters, one with negative coordinates; ~4 samples per cell.
  const std::array<std::array<double, 2>, 2> origin{{{40.6000, 22.9400}, {-33.8600, -70.6500}}};
  std::vector<NoiseSample> samples;
  while (samples.size() < 10000) {
    const auto& o = origin[samples.size() % 2];
    const double lat = o[0] + std::uniform_real_distribution<double>(0.0, 0.0035)(rng);
    const double lon = o[1] + std::uniform_real_distribution<double>(0.0, 0.0035)(rng);
    // Keep clear of cell boundaries so the oracle's truncation is unambiguous.
    auto near_edge = [](double v) {
      const double frac = std::abs(v * 1e4 - std::round(v * 1e4));
      return frac < 1e-2;  // 1e-6 degrees
    };
    if (near_edge(lat) || near_edge(lon)) continue;
    samples.push_back({lat, lon, {}, noise(rng)});
  }

  // Brute force: group by integer truncation, sum in long double.
  struct Group {
    long double sum = 0.0L;
    std::size_t count = 0;
  };
  std::map<std::pair<long long, long long>, Group> oracle;
  for (const auto& s : samples) {
    const auto key = std::pair{static_cast<long long>(std::trunc(static_cast<long double>(s.latitude) * 10000.0L)),
                               static_cast<long long>(std::trunc(static_cast<long double>(s.longitude) * 10000.0L))};
    auto& g = oracle[key];
    g.sum += s.noise_db;
    ++g.count;
  }

  for (int workers : {1, 4}) {
    const auto tiles = tessellate(samples, 4, workers);
    bool keys_ok = tiles.size() == oracle.size();
    bool counts_ok = keys_ok;
    double worst_mean = 0.0;
    std::size_t members = 0;
    std::size_t i = 0;
    for (const auto& [key, g] : oracle) {
      if (i >= tiles.size()) break;
      const auto& t = tiles[i++];
      keys_ok = keys_ok && t.lat_key == static_cast<double>(key.first) / 1e4 &&
                t.lon_key == static_cast<double>(key.second) / 1e4;
      counts_ok = counts_ok && t.sample_count == g.count;
      worst_mean = std::max(worst_mean, static_cast<double>(std::abs(
                                            static_cast<long double>(t.mean_noise_db) - g.sum / g.count)));
    }
    for (const auto& t : tiles) members += t.sample_count;
    const std::string w = " (workers " + std::to_string(workers) + ")";
    c.check(keys_ok, "tile keys match the grouping oracle, " + std::to_string(tiles.size()) + " tiles" + w);
    c.check(counts_ok, "tile counts match the grouping oracle" + w);
    c.check(worst_mean <= 1e-9, "tile means within 1e-9, max |error| = " + num(worst_mean) + w);
    c.check(members == samples.size(),
            "member count conserved: " + std::to_string(members) + " = " + std::to_string(samples.size()) + w);
  }

  const double ratio = reduction_ratio(3'312'310, 197'445);
  c.check(std::abs(100.0 * ratio - 94.0) <= 0.5,
          "reduction ratio 3312310 -> 197445 = " + num(100.0 * ratio, 5) + "% (94 +/- 0.5)");
}

// --- 4: georeferencing -------------------------------------------------------------

// Uncentered normal equations solved in long double by Gauss-Jordan.
std::array<long double, 6> normal_equations_oracle(const std::vector<GroundControlPoint>& gcps) {
  long double m[3][5] = {};
  for (const auto& g : gcps) {
    const long double r[3] = {g.pixel_x, g.pixel_y, 1.0L};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += r[i] * r[j];
      m[i][3] += r[i] * g.longitude;
      m[i][4] += r[i] * g.latitude;
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    for (int k = 0; k < 5; ++k) std::swap(m[col][k], m[piv][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const long double f = m[r][col] / m[col][col];
      for (int k = 0; k < 5; ++k) m[r][k] -= f * m[col][k];
    }
  }
  return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2],
          m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2]};
}

void criterion_georef(Checks& c) {
  const AffineTransform truth{5.1e-5, 1.3e-6, 22.9371, -0.9e-6, -3.8e-5, 40.6412};

  const std::vector<GroundControlPoint> three{
      {12.0, 30.0, pixel_to_geo(truth, 12, 30).longitude, pixel_to_geo(truth, 12, 30).latitude},
      {240.0, 18.0, pixel_to_geo(truth, 240, 18).longitude, pixel_to_geo(truth, 240, 18).latitude},
      {100.0, 220.0, pixel_to_geo(truth, 100, 220).longitude, pixel_to_geo(truth, 100, 220).latitude},
  };
  const auto fit3 = fit_affine(three, nullptr);
  const double rmse3 = residual_rmse(fit3, three);
  c.check(rmse3 <= 1e-9, "3 exact control points: residual RMSE " + num(rmse3) + " deg <= 1e-9");

  const auto ten = synthetic_gcps(truth, 10, 256.0, 256.0, 0.5, 99);
  const auto fit10 = fit_affine(ten, nullptr);
  const auto o = normal_equations_oracle(ten);
  const std::array<double, 6> got{fit10.a, fit10.b, fit10.c, fit10.d, fit10.e, fit10.f};
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    worst = std::max(worst, static_cast<double>(std::abs(static_cast<long double>(got[i]) - o[i])));
  }
  c.check(worst <= 1e-9, "10 control points, sigma 0.5 px: max |coefficient - oracle| = " + num(worst) + " <= 1e-9");
}

// --- 5: spatial join ------------------------------------------------------------------

void criterion_join(Checks& c) {
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<int> lat_u(0, 499), lon_u(0, 499);
  std::uniform_real_distribution<double> db(40.0, 85.0);
  std::set<std::pair<int, int>> used;
  std::vector<Tile> tiles;
  while (tiles.size() < 5000) {
    const int a = lat_u(rng), b = lon_u(rng);
    if (!used.insert({a, b}).second) continue;
    tiles.push_back({(406000 + a) / 1e4, (229200 + b) / 1e4, db(rng), 1});
  }
  std::uniform_real_distribution<double> qlat(40.6000, 40.6500), qlon(22.9200, 22.9700);
  std::vector<LatLon> queries(500);
  for (auto& q : queries) q = {qlat(rng), qlon(rng)};

  for (double radius : {50.0, 100.0}) {
    const TileIndex index(tiles, radius);
    std::size_t mismatched = 0, hits = 0;
    for (const auto& q : queries) {
      std::vector<std::size_t> brute;
      for (std::size_t i = 0; i < tiles.size(); ++i) {
        if (haversine_m(q, {tiles[i].lat_key, tiles[i].lon_key}) <= radius) brute.push_back(i);
      }
      const auto got = index.within(q);
      if (got != brute) ++mismatched;
      hits += brute.size();
    }
    c.check(mismatched == 0, "radius " + num(radius) + " m: index equals all-pairs scan on 500 queries (" +
                                 std::to_string(hits) + " hits, " + std::to_string(mismatched) + " mismatched)");
  }

  // Night layer on the same grid with independent values.
  std::vector<Tile> night = tiles;
  for (auto& t : night) t.mean_noise_db = db(rng);
  std::vector<PropertyRecord> props;
  std::uniform_real_distribution<double> plat(40.595, 40.655), plon(22.915, 22.975);
  for (int i = 0; i < 2000; ++i) {
    PropertyRecord p;
    p.id = "p" + std::to_string(i);
    p.latitude = plat(rng);
    p.longitude = plon(rng);
    props.push_back(p);
  }
  JoinConfig one{100.0, NoiseCharacteristic::kDayAndNight};
  JoinConfig two{100.0, NoiseCharacteristic::kCombined};
  const auto joined1 = attach_noise(props, tiles, night, one);
  const auto joined2 = attach_noise(props, tiles, night, two);
  std::map<std::string, const PropertyRecord*> by_id;
  for (const auto& p : joined1) by_id[p.id] = &p;
  std::size_t compared = 0, unequal = 0;
  for (const auto& p : joined2) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) continue;
    ++compared;
    const double expect = (*it->second->noise_value("noise_day") + *it->second->noise_value("noise_night")) / 2.0;
    if (*p.noise_value("noise_combined") != expect) ++unequal;
  }
  c.check(unequal == 0 && compared > 0 && joined1.size() == joined2.size(),
          "characteristic II equals the mean of I's columns on " + std::to_string(compared) + " properties (" +
              std::to_string(unequal) + " unequal)");

  std::set<std::string> previous;
  bool monotone = true;
  std::string sizes;
  bool first = true;
  for (double radius : {200.0, 150.0, 100.0, 75.0, 50.0, 25.0, 10.0}) {
    const auto j = attach_noise(props, tiles, night, JoinConfig{radius, NoiseCharacteristic::kDayAndNight});
    std::set<std::string> ids;
    for (const auto& p : j) ids.insert(p.id);
    if (!first) monotone = monotone && std::includes(previous.begin(), previous.end(), ids.begin(), ids.end());
    previous = std::move(ids);
    sizes += (first ? "" : ", ") + num(radius) + "m:" + std::to_string(j.size());
    first = false;
  }
  c.check(monotone, "shrinking the radius never adds retained properties (" + sizes + ")");
}

// --- 6: planted-effect replication -------------------------------------------------

void criterion_planted(Checks& c) {
  const auto t0 = Clock::now();
  const auto spec = preset_spec("xgboost");
  constexpr std::size_t kSeeds = 20;
  constexpr std::size_t kGrid = 6;
  std::size_t better = 0, noise_over_dummy = 0;
  std::array<std::size_t, 2> pairs{0, 0}, planted_sign{0, 0};
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    PlantedOptions opt;
    opt.seed = seed;
    const auto planted = planted_dataset(opt);
    const auto& with = planted.data;
    const auto without = with.drop_columns({kPlantedNoiseColumn});
    const double mae_with = cross_validate(with, spec, 5, seed).mean_mae;
    const double mae_without = cross_validate(without, spec, 5, seed).mean_mae;
    if (mae_with < mae_without) ++better;

    const auto model = fit_model(with, spec, seed);
    for (int region = 0; region < 2; ++region) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < planted.region.size(); ++i) {
        if (planted.region[i] == region) rows.push_back(i);
      }
      const auto curve = partial_dependence(model, with.subset(rows), kPlantedNoiseColumn, kGrid);
      for (std::size_t i = 1; i < curve.grid.size(); ++i) {
        const double slope = curve.mean_prediction[i] - curve.mean_prediction[i - 1];
        ++pairs[region];
        if (region == 0 ? slope > 0.0 : slope < 0.0) ++planted_sign[region];
      }
    }
    const auto imp = permutation_importance(model, with, Metric::kMae, 5, seed);
    if (imp[kPlantedNoiseColumn].permutation_delta > imp[kDummyColumn].permutation_delta) ++noise_over_dummy;
  }
  c.check(better >= 18, "(a) CV MAE with noise below without: " + std::to_string(better) + "/20 seeds (>= 18)");
  const char* names[] = {"A (+300/dB)", "C (-300/dB)"};
  for (int r = 0; r < 2; ++r) {
    const double share = static_cast<double>(planted_sign[static_cast<std::size_t>(r)]) /
                         static_cast<double>(pairs[static_cast<std::size_t>(r)]);
    c.check(share >= 0.90, std::string("(b) region ") + names[r] + ": partial-dependence pairs with the planted sign " +
                               std::to_string(planted_sign[static_cast<std::size_t>(r)]) + "/" +
                               std::to_string(pairs[static_cast<std::size_t>(r)]) + " = " + num(100.0 * share, 4) +
                               "% (>= 90%)");
  }
  c.check(noise_over_dummy >= 19, "(c) permutation importance noise > dummy: " + std::to_string(noise_over_dummy) +
                                      "/20 seeds (>= 19)");
  const double secs = seconds_since(t0);
  c.check(secs < 300.0, "runtime " + num(secs, 4) + " s < 300 s");
}

// --- 7: ensemble correctness -----------------------------------------------------------

struct StumpOracle {
  int feature = -1;
  double threshold = 0.0;
  double left = 0.0, right = 0.0;
};

StumpOracle exhaustive_stump(const Dataset& d) {
  auto sse = [](const std::vector<double>& v) {
    long double m = 0.0L;
    for (double y : v) m += y;
    m /= static_cast<long double>(v.size());
    long double s = 0.0L;
    for (double y : v) s += (y - m) * (y - m);
    return s;
  };
  auto mean = [](const std::vector<double>& v) {
    long double s = 0.0L;
    for (double y : v) s += y;
    return static_cast<double>(s / static_cast<long double>(v.size()));
  };
  const long double parent = sse(d.y);
  StumpOracle best;
  long double best_gain = 0.0L;
  for (std::size_t f = 0; f < d.cols(); ++f) {
    std::set<double> values;
    for (std::size_t r = 0; r < d.rows; ++r) values.insert(d.at(r, f));
    for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
      const double t = (*it + *std::next(it)) / 2.0;
      std::vector<double> l, r;
      for (std::size_t i = 0; i < d.rows; ++i) (d.at(i, f) < t ? l : r).push_back(d.y[i]);
      const long double gain = parent - sse(l) - sse(r);
      if (gain > best_gain * (1.0L + 1e-12L) && gain > 1e-12L * parent) {
        best_gain = gain;
        best = {static_cast<int>(f), t, mean(l), mean(r)};
      }
    }
  }
  return best;
}

Dataset random_dataset(std::size_t rows, std::size_t cols, std::uint64_t seed, int levels) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, levels - 1);
  std::normal_distribution<double> noise(0.0, 5.0);
  Dataset d;
  for (std::size_t c = 0; c < cols; ++c) d.columns.push_back("x" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(cols);
    for (auto& v : row) v = level(rng);
    d.append_row(row, 3.0 * row[0] - 2.0 * row[cols - 1] + noise(rng));
  }
  return d;
}

bool same_predictions(const TreeEnsemble& a, const TreeEnsemble& b, const Dataset& d, double tol) {
  const auto pa = predict(a, d), pb = predict(b, d);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (std::abs(pa[i] - pb[i]) > tol) return false;
  }
  return true;
}

void criterion_ensemble(Checks& c) {
  // Stump recovery.
  std::size_t stump_ok = 0;
  constexpr std::size_t kStumps = 25;
  for (std::uint64_t s = 0; s < kStumps; ++s) {
    const auto d = random_dataset(150, 4, 1000 + s, 12);
    TreeParams p;
    p.max_depth = 1;
    const auto tree = fit_tree(d, p, s);
    const auto o = exhaustive_stump(d);
    const auto& root = tree.nodes[0];
    bool ok = root.feature == o.feature && root.threshold == o.threshold;
    if (ok) {
      ok = std::abs(tree.nodes[static_cast<std::size_t>(root.left)].value - o.left) <= 1e-9 &&
           std::abs(tree.nodes[static_cast<std::size_t>(root.right)].value - o.right) <= 1e-9;
    }
    if (ok) ++stump_ok;
  }
  c.check(stump_ok == kStumps, "stump split matches the exhaustive oracle on " + std::to_string(stump_ok) + "/" +
                                   std::to_string(kStumps) + " datasets");

  // Boosted training MSE per stage.
  {
    PlantedOptions opt;
    opt.seed = 3;
    opt.rows = 600;
    const auto d = planted_dataset(opt).data;
    std::size_t increases = 0, stages = 0;
    for (const char* preset : {"xgboost", "lgbm"}) {
      std::vector<double> mse;
      fit_boosted(d, preset_spec(preset), 11, &mse);
      stages += mse.size();
      for (std::size_t i = 1; i < mse.size(); ++i) {
        if (mse[i] > mse[i - 1]) ++increases;
      }
    }
    c.check(increases == 0 && stages > 0, "boosted training MSE non-increasing over " + std::to_string(stages) +
                                               " stages (" + std::to_string(increases) + " increases)");
  }

  // Full-depth tree on conflict-free data.
  {
    auto d = random_dataset(400, 3, 77, 1000);
    std::set<std::vector<double>> seen;
    std::vector<std::size_t> unique_rows;
    for (std::size_t r = 0; r < d.rows; ++r) {
      if (seen.insert({d.row(r).begin(), d.row(r).end()}).second) unique_rows.push_back(r);
    }
    d = d.subset(unique_rows);
    ModelSpec spec;
    spec.tree.max_depth = -1;
    const auto m = fit_model(d, spec, 5);
    const double train_mae = mae(d.y, predict(m, d));
    c.check(train_mae == 0.0, "full-depth tree training MAE on " + std::to_string(d.rows) +
                                  " conflict-free rows = " + num(train_mae));
  }

  // CV folds partition the rows.
  {
    bool partition = true;
    for (std::size_t rows : {5u, 17u, 100u, 1001u}) {
      for (std::size_t k : {2u, 3u, 5u}) {
        if (rows < k) continue;
        const auto fold = assign_folds(rows, k, rows * 31 + k);
        std::vector<std::size_t> sizes(k, 0);
        for (auto f : fold) {
          if (f >= k) partition = false;
          else ++sizes[f];
        }
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        std::size_t total = 0;
        for (auto s : sizes) total += s;
        partition = partition && total == rows && *hi - *lo <= 1 && *lo > 0;
      }
    }
    const auto d = random_dataset(103, 3, 8, 20);
    const auto cv = cross_validate(d, preset_spec("decision_tree"), 5, 4);
    std::size_t tested = 0;
    for (const auto& f : cv.folds) {
      tested += f.test_rows;
      partition = partition && f.train_rows + f.test_rows == d.rows;
    }
    partition = partition && tested == d.rows;
    c.check(partition, "CV folds partition the rows exactly, sizes differ by at most one");
  }

  // Determinism.
  {
    PlantedOptions opt;
    opt.seed = 9;
    opt.rows = 500;
    const auto d = planted_dataset(opt).data;
    bool identical = true, across = true;
    for (const char* preset : {"decision_tree", "random_forest", "xgboost", "lgbm"}) {
      auto spec = preset_spec(preset);
      spec.workers = 4;
      const auto a = fit_model(d, spec, 21);
      const auto b = fit_model(d, spec, 21);
      identical = identical && a == b && model_to_json(a).dump() == model_to_json(b).dump();
      const auto cva = cross_validate(d, spec, 5, 21, 4);
      const auto cvb = cross_validate(d, spec, 5, 21, 4);
      identical = identical && cva.mean_mae == cvb.mean_mae && cva.mean_mape == cvb.mean_mape;

      auto serial = spec;
      serial.workers = 1;
      const auto s = fit_model(d, serial, 21);
      across = across && same_predictions(a, s, d, 1e-9);
      const auto cvs = cross_validate(d, serial, 5, 21, 1);
      across = across && std::abs(cvs.mean_mae - cva.mean_mae) <= 1e-9 * std::max(1.0, std::abs(cva.mean_mae));
    }
    c.check(identical, "reruns with the same data, config and seed are bit-identical at 4 workers");
    c.check(across, "1 and 4 workers agree to 1e-9 (predictions and CV MAE)");
  }
}

// --- 8: metrics ---------------------------------------------------------------------------

void criterion_metrics(Checks& c) {
  struct Fixture {
    std::vector<double> y, p;
    double mae, mape;
  };
  const std::vector<Fixture> fixtures{
      {{100, 200}, {110, 190}, 10.0, 0.075},
      {{1, 2, 3, 4}, {1, 2, 3, 4}, 0.0, 0.0},
      {{250000, 180000, 95000}, {200000, 198000, 95500}, 68500.0 / 3.0,
       (0.2 + 0.1 + 1.0 / 190.0) / 3.0},
  };
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    const auto& f = fixtures[i];
    const double e1 = std::abs(mae(f.y, f.p) - f.mae);
    const double e2 = std::abs(mape(f.y, f.p) - f.mape);
    c.check(e1 <= 1e-12 && e2 <= 1e-12, "fixture " + std::to_string(i + 1) + ": MAE error " + num(e1) +
                                            ", MAPE error " + num(e2) + " (<= 1e-12)");
  }
  const std::vector<double> y{1000.0, 2000.0}, p{777.0, 1554.0};
  const double frac = mape(y, p);
  const std::vector<ResultRow> rows{{"xgboost", true, "all", "100", "I", mae(y, p), frac}};
  const auto report = build_report(rows);
  const std::string cell = report.rows.at(0).at(3);
  c.check(std::abs(frac - 0.223) <= 1e-12 && cell == "0.223*",
          "MAPE is a fraction: 22.3% error reported as '" + cell + "'");
}

// --- 9: render/rescan identity ------------------------------------------------------------

// Reconstructs and tessellates a heatmap through the command layer.
fs::path tiles_from(const fs::path& image, const fs::path& transform, const fs::path& dir, const std::string& tag) {
  const auto samples = dir / ("samples_" + tag + ".csv");
  const auto tiles = dir / ("tiles_" + tag + ".csv");
  cmd_reconstruct(image, transform, "thessaloniki_neapoli", kDefaultColorThreshold, samples);
  cmd_tessellate(samples, kDefaultTileDecimals, tiles);
  return tiles;
}

void render_identity(Checks& c, const fs::path& tiles, const fs::path& dir, const std::string& tag) {
  const auto image = dir / ("render_" + tag + ".png");
  const auto map = cmd_render(tiles, "thessaloniki_neapoli", image);
  const auto again = tiles_from(image, transform_sidecar(image), dir, tag + "_rescan");
  const auto before = read_file(tiles);
  const auto after = read_file(again);
  const auto n = read_tiles(tiles).size();
  c.check(before == after && map.tiles_lossy == 0 && map.tiles_skipped == 0,
          tag + ": " + std::to_string(n) + " tiles rendered and rescanned, identical = " +
              (before == after ? "yes" : "no") + ", lossy " + std::to_string(map.tiles_lossy));
}

void criterion_render(Checks& c) {
  const fs::path fixtures = NOISEMAP_FIXTURES;
  const auto dir = scratch_dir("render");
  cmd_georef(fixtures / "gcps.csv", dir / "transform.json", nullptr);
  for (const char* layer : {"day", "night"}) {
    const auto tiles =
        tiles_from(fixtures / (std::string("heatmap_") + layer + ".png"), dir / "transform.json", dir, layer);
    render_identity(c, tiles, dir, std::string("fixture ") + layer);
  }

  // A blended 256x256 heatmap gives tiles with mixed members.
  HeatmapOptions opt;
  opt.seed = 2024;
  const auto map = synthetic_heatmap(builtin_palette(BuiltinPalette::kThessalonikiNeapoli), opt);
  write_png(dir / "blended.png", map.image);
  write_json(dir / "blended.transform.json", transform_to_json(map.transform));
  const auto tiles = tiles_from(dir / "blended.png", dir / "blended.transform.json", dir, "blended");
  render_identity(c, tiles, dir, "blended 256x256");
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<void(Checks&)>>> criteria{
      {"color science", criterion_color},
      {"round-trip reconstruction", criterion_round_trip},
      {"tessellation oracle", criterion_tessellation},
      {"georeferencing", criterion_georef},
      {"spatial join", criterion_join},
      {"planted-effect replication", criterion_planted},
      {"ensemble correctness", criterion_ensemble},
      {"metrics", criterion_metrics},
      {"render/rescan identity", criterion_render},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Checks checks;
    try {
      criteria[i].second(checks);
    } catch (const std::exception& e) {
      checks.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (checks.ok() ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << '\n';
    for (const auto& line : checks.lines()) std::cout << line << '\n';
    all = all && checks.ok();
  }
  return all ? 0 : 1;
}
