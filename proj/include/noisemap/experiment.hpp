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

// Experiment configuration, area polygons, result rows and the comparison
// report that lays results out as model x noise-flag rows against
// area / radius / characteristic columns.

#pragma once

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "noisemap/ensemble.hpp"
#include "noisemap/error.hpp"
#include "noisemap/georef.hpp"
#include "noisemap/legend.hpp"
#include "noisemap/property_prep.hpp"
#include "noisemap/spatial_join.hpp"
#include "noisemap/table.hpp"
#include "noisemap/tessellate.hpp"

namespace noisemap {

// --- areas -------------------------------------------------------------------

struct Area {
  std::string name;
  std::vector<GeoPoint> polygon;  // lon/lat vertices, closed implicitly
};

// Even-odd ray casting; points on an edge may fall either way.
inline bool contains(const Area& area, double longitude, double latitude) {
  bool inside = false;
  const auto& poly = area.polygon;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.latitude > latitude) != (b.latitude > latitude)) {
      const double x = a.longitude + (latitude - a.latitude) * (b.longitude - a.longitude) / (b.latitude - a.latitude);
      if (longitude < x) inside = !inside;
    }
  }
  return inside;
}

// {"areas": [{"name": "A", "polygon": [[lon, lat], ...]}, ...]}
inline std::vector<Area> areas_from_json(const nlohmann::json& j) {
  std::vector<Area> out;
  try {
    for (const auto& a : j.at("areas")) {
      Area area;
      area.name = a.at("name").get<std::string>();
      for (const auto& v : a.at("polygon")) area.polygon.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      if (area.polygon.size() < 3) {
        fail(ErrorCategory::kConfiguration, "area '" + area.name + "' needs at least 3 vertices");
      }
      out.push_back(std::move(area));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kConfiguration, std::string("bad areas file: ") + e.what());
  }
  return out;
}

inline nlohmann::json areas_to_json(std::span<const Area> areas) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : areas) {
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& v : a.polygon) poly.push_back({v.longitude, v.latitude});
    list.push_back({{"name", a.name}, {"polygon", poly}});
  }
  return {{"areas", list}};
}

inline std::vector<PropertyRecord> select_area(std::span<const PropertyRecord> records, const Area& area) {
  std::vector<PropertyRecord> out;
  for (const auto& p : records) {
    if (contains(area, p.longitude, p.latitude)) out.push_back(p);
  }
  return out;
}

// --- configuration -----------------------------------------------------------

struct SearchConfig {
  std::size_t budget = 0;  // 0: use the model specs as given
  SearchSpace space;
};

struct ExperimentConfig {
  std::filesystem::path base_dir;
  std::uint64_t seed = 0;
  std::string palette = "thessaloniki_neapoli";
  double threshold = kDefaultColorThreshold;
  std::filesystem::path gcps;
  std::filesystem::path day_image;
  std::filesystem::path night_image;
  std::optional<std::filesystem::path> aviation_image;
  int decimals = kDefaultTileDecimals;
  std::vector<double> radii_m{100.0};
  std::vector<NoiseCharacteristic> characteristics{NoiseCharacteristic::kDayAndNight};
  std::filesystem::path properties;
  std::optional<std::filesystem::path> areas;
  PrepRules prep = default_prep_rules();
  std::vector<ModelSpec> models;
  SearchConfig search;
  std::size_t folds = 5;
  std::vector<double> learning_curve{0.1, 0.25, 0.5, 0.75, 1.0};
  std::size_t permutation_repeats = 5;
  std::size_t pd_grid = 6;
  std::filesystem::path output_dir = "out";
};

namespace detail {

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void need_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::is_regular_file(p)) {
    fail(ErrorCategory::kConfiguration, std::string(what) + " not found: " + p.string());
  }
}

inline IntRange int_range(const nlohmann::json& j, IntRange fallback) {
  return j.is_null() ? fallback : IntRange{j.at(0).get<long long>(), j.at(1).get<long long>()};
}
inline RealRange real_range(const nlohmann::json& j, RealRange fallback) {
  return j.is_null() ? fallback : RealRange{j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace detail

inline SearchSpace search_space_from_json(const nlohmann::json& j) {
  SearchSpace s;
  auto get = [&](const char* k) { return j.contains(k) ? j[k] : nlohmann::json(); };
  s.max_depth = detail::int_range(get("max_depth"), s.max_depth);
  s.min_samples_leaf = detail::int_range(get("min_samples_leaf"), s.min_samples_leaf);
  s.tree_count = detail::int_range(get("tree_count"), s.tree_count);
  s.max_leaves = detail::int_range(get("max_leaves"), s.max_leaves);
  s.learning_rate = detail::real_range(get("learning_rate"), s.learning_rate);
  s.feature_subsample = detail::real_range(get("feature_subsample"), s.feature_subsample);
  s.row_subsample = detail::real_range(get("row_subsample"), s.row_subsample);
  validate_space(s);
  return s;
}

// Validates everything up front: required keys, value ranges, and that
// every referenced file exists. Relative paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    if (!j.contains("seed")) fail(ErrorCategory::kConfiguration, "config: 'seed' is required");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.palette = j.value("palette", c.palette);
    c.threshold = j.value("threshold", c.threshold);
    if (!(c.threshold > 0.0)) fail(ErrorCategory::kConfiguration, "config: threshold must be positive");
    c.gcps = detail::resolve_path(base_dir, j.at("gcps").get<std::string>());
    const auto& images = j.at("images");
    c.day_image = detail::resolve_path(base_dir, images.at("day").get<std::string>());
    c.night_image = detail::resolve_path(base_dir, images.at("night").get<std::string>());
    if (images.contains("aviation")) {
      c.aviation_image = detail::resolve_path(base_dir, images["aviation"].get<std::string>());
    }
    c.decimals = j.value("decimals", c.decimals);
    decimal_scale(c.decimals);
    if (j.contains("radii_m")) c.radii_m = j["radii_m"].get<std::vector<double>>();
    if (c.radii_m.empty()) fail(ErrorCategory::kConfiguration, "config: radii_m is empty");
    for (double r : c.radii_m) {
      if (!(r > 0.0)) fail(ErrorCategory::kConfiguration, "config: radii must be positive");
    }
    if (j.contains("characteristics")) {
      c.characteristics.clear();
      for (const auto& s : j["characteristics"]) c.characteristics.push_back(parse_characteristic(s.get<std::string>()));
    }
    if (c.characteristics.empty()) fail(ErrorCategory::kConfiguration, "config: characteristics is empty");
    c.properties = detail::resolve_path(base_dir, j.at("properties").get<std::string>());
    if (j.contains("areas")) c.areas = detail::resolve_path(base_dir, j["areas"].get<std::string>());
    if (j.contains("prep")) c.prep = prep_rules_from_json(j["prep"]);
    if (j.contains("models")) {
      for (const auto& m : j["models"]) c.models.push_back(spec_from_json(m));
    } else {
      for (const char* name : {"decision_tree", "random_forest", "xgboost", "lgbm"}) c.models.push_back(preset_spec(name));
    }
    if (c.models.empty()) fail(ErrorCategory::kConfiguration, "config: no models");
    if (j.contains("search")) {
      c.search.budget = j["search"].value("budget", std::size_t{0});
      c.search.space = search_space_from_json(j["search"].value("space", nlohmann::json::object()));
    }
    c.folds = j.value("folds", c.folds);
    if (c.folds < 2) fail(ErrorCategory::kConfiguration, "config: folds must be >= 2");
    if (j.contains("learning_curve")) c.learning_curve = j["learning_curve"].get<std::vector<double>>();
    c.permutation_repeats = j.value("permutation_repeats", c.permutation_repeats);
    c.pd_grid = j.value("pd_grid", c.pd_grid);
    if (c.permutation_repeats < 1 || c.pd_grid < 2) {
      fail(ErrorCategory::kConfiguration, "config: permutation_repeats >= 1 and pd_grid >= 2 required");
    }
    c.output_dir = detail::resolve_path(base_dir, j.value("output_dir", std::string("out")));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kConfiguration, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kConfiguration) throw;
    fail(ErrorCategory::kConfiguration, std::string("config: ") + e.what());
  }
  if (c.palette != "thessaloniki_neapoli" && c.palette != "kalamaria") {
    c.palette = detail::resolve_path(base_dir, c.palette).string();
  }
  resolve_palette(c.palette);
  detail::need_file(c.gcps, "GCP file");
  detail::need_file(c.day_image, "day image");
  detail::need_file(c.night_image, "night image");
  if (c.aviation_image) detail::need_file(*c.aviation_image, "aviation image");
  detail::need_file(c.properties, "property file");
  if (c.areas) detail::need_file(*c.areas, "areas file");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kConfiguration, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

inline Palette config_palette(const ExperimentConfig& c) { return resolve_palette(c.palette); }

// --- results and report --------------------------------------------------------

struct ResultRow {
  std::string model;
  bool noise = false;
  std::string area = "all";
  std::string radius_m = "-";
  std::string characteristic = "-";
  double mae = 0.0;
  double mape = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline const std::vector<std::string>& results_header() {
  static const std::vector<std::string> h{"model", "noise", "area", "radius_m", "characteristic", "mae", "mape"};
  return h;
}

inline std::string format_results(std::span<const ResultRow> rows) {
  std::string out = join_fields(results_header()) + '\n';
  for (const auto& r : rows) {
    out += join_fields({r.model, r.noise ? "yes" : "no", r.area, r.radius_m, r.characteristic,
                        format_double(r.mae), format_double(r.mape)}) +
           '\n';
  }
  return out;
}

inline std::vector<ResultRow> parse_results(const Table& t, const std::string& source) {
  if (t.header != results_header()) {
    fail(ErrorCategory::kSchema, source + ": header does not match the results schema (" +
                                     join_fields(results_header()) + ")");
  }
  std::vector<ResultRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    if (f[1] != "yes" && f[1] != "no") fail(ErrorCategory::kSchema, source + ": noise must be yes or no");
    out.push_back({f[0], f[1] == "yes", f[2], f[3], f[4], t.number(r, 5), t.number(r, 6)});
  }
  return out;
}

inline std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  return parse_results(read_table(path), path.string());
}

// Rows: (model, noise) in first-seen order. Columns: one MAE and one MAPE
// column per (area, radius, characteristic). The minimum of each column
// carries a trailing '*'; cells without a result show '-'.
inline Table build_report(std::span<const ResultRow> results) {
  if (results.empty()) fail(ErrorCategory::kInsufficientData, "report needs at least one result");
  using RowKey = std::pair<std::string, bool>;
  using ColKey = std::tuple<std::string, std::string, std::string>;
  std::vector<RowKey> row_keys;
  std::vector<ColKey> col_keys;
  std::map<std::pair<RowKey, ColKey>, const ResultRow*> cells;
  for (const auto& r : results) {
    const RowKey rk{r.model, r.noise};
    const ColKey ck{r.area, r.radius_m, r.characteristic};
    if (std::find(row_keys.begin(), row_keys.end(), rk) == row_keys.end()) row_keys.push_back(rk);
    if (std::find(col_keys.begin(), col_keys.end(), ck) == col_keys.end()) col_keys.push_back(ck);
    if (!cells.emplace(std::pair{rk, ck}, &r).second) {
      fail(ErrorCategory::kSchema, "duplicate result for " + r.model + (r.noise ? " (noise)" : "") + " in " +
                                       r.area + "/" + r.radius_m + "/" + r.characteristic);
    }
  }
  Table t;
  t.header = {"model", "noise"};
  for (const auto& [area, radius, ch] : col_keys) {
    const std::string stem = area + "_" + radius + "m_" + ch;
    t.header.push_back(stem + "_mae");
    t.header.push_back(stem + "_mape");
  }
  for (const auto& rk : row_keys) t.rows.push_back({rk.first, rk.second ? "yes" : "no"});
  for (std::size_t c = 0; c < col_keys.size(); ++c) {
    for (int metric = 0; metric < 2; ++metric) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& rk : row_keys) {
        auto it = cells.find({rk, col_keys[c]});
        if (it != cells.end()) best = std::min(best, metric == 0 ? it->second->mae : it->second->mape);
      }
      for (std::size_t r = 0; r < row_keys.size(); ++r) {
        auto it = cells.find({row_keys[r], col_keys[c]});
        if (it == cells.end()) {
          t.rows[r].push_back("-");
          continue;
        }
        const double v = metric == 0 ? it->second->mae : it->second->mape;
        std::string cell = metric == 0 ? format_fixed(v, 0) : format_fixed(v, 3);
        if (v == best) cell += '*';
        t.rows[r].push_back(cell);
      }
    }
  }
  return t;
}

// Space-padded columns for terminals.
inline std::string align_table(const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  for (std::size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c) out += "  ";
      out += fields[c];
      if (c + 1 < fields.size()) out.append(width[c] - fields[c].size(), ' ');
    }
    return out + '\n';
  };
  std::string out = line(t.header);
  for (const auto& row : t.rows) out += line(row);
  return out;
}

}  // namespace noisemap
