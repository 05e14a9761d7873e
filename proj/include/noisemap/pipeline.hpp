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

// File-level commands behind the command-line tool. Each reads its inputs,
// calls into the library and writes outputs atomically. Outputs depend only
// on inputs, options and seed; wall-clock time goes to run.log alone.
//
// Seed fan-out from the root seed (derive_seed with a label):
//   "cv"                       fold assignment, shared by every model
//   "fit:<model>"              final fit per model
//   "search:<model>:<flag>"    random-search draws
//   "search-cv"                folds used inside the search objective
//   "learning-curve"           holdout split and subset order
//   "permutation"              column shuffles

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisemap/ensemble.hpp"
#include "noisemap/error.hpp"
#include "noisemap/experiment.hpp"
#include "noisemap/georef.hpp"
#include "noisemap/interpret.hpp"
#include "noisemap/legend.hpp"
#include "noisemap/property_prep.hpp"
#include "noisemap/raster.hpp"
#include "noisemap/reconstruct.hpp"
#include "noisemap/render.hpp"
#include "noisemap/seed.hpp"
#include "noisemap/spatial_join.hpp"
#include "noisemap/synthetic.hpp"
#include "noisemap/table.hpp"
#include "noisemap/tessellate.hpp"

namespace noisemap {

namespace fs = std::filesystem;

// Timestamped progress lines; the only place wall-clock time appears.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    file_.open(path, std::ios::app);
  }
  void line(const std::string& message) {
    if (!file_) return;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    file_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << message << '\n';
    file_.flush();
  }

 private:
  std::ofstream file_;
};

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::kSchema, path.string() + ": " + e.what());
  }
}

// --- georef / reconstruct / tessellate / render ----------------------------------

struct GeorefSummary {
  AffineTransform transform;
  double rmse_deg = 0.0;
  double condition_number = 0.0;
};

inline GeorefSummary cmd_georef(const fs::path& gcp_file, const fs::path& out, std::ostream* warnings = &std::cerr) {
  const auto gcps = read_gcps(gcp_file);
  const auto fit = fit_affine_detailed(gcps);
  if (warnings && fit.condition_number > kConditionWarningThreshold) {
    *warnings << "warning: ill-conditioned control point geometry (condition number " << fit.condition_number
              << ")\n";
  }
  GeorefSummary s{fit.transform, residual_rmse(fit.transform, gcps), fit.condition_number};
  auto j = transform_to_json(fit.transform);
  j["rmse_deg"] = s.rmse_deg;
  j["condition_number"] = s.condition_number;
  write_json(out, j);
  return s;
}

inline ScanStats cmd_reconstruct(const fs::path& image, const fs::path& transform, const std::string& palette,
                                 double threshold, const fs::path& out, int workers = 1) {
  const auto pal = resolve_palette(palette);
  const auto img = read_png(image);
  const auto t = load_transform(transform);
  SampleWriter writer(out);
  ScanOptions opt;
  opt.threshold = threshold;
  opt.workers = workers;
  const auto stats = scan_image(img, t, pal, [&](const NoiseSample& s) { writer(s); }, opt);
  writer.commit();
  return stats;
}

struct TessellateSummary {
  std::size_t samples = 0;
  std::size_t tiles = 0;
};

inline TessellateSummary cmd_tessellate(const fs::path& samples, int decimals, const fs::path& out, int workers = 1) {
  const auto s = read_samples(samples);
  const auto tiles = tessellate(s, decimals, workers);
  write_file_atomic(out, format_tiles(tiles, decimals));
  return {s.size(), tiles.size()};
}

// Sidecar transform for a rendered image: "<image>.transform.json".
inline fs::path transform_sidecar(const fs::path& image) {
  auto p = image;
  p += ".transform.json";
  return p;
}

inline RenderedMap cmd_render(const fs::path& tiles, const std::string& palette, const fs::path& out_image,
                              const RenderOptions& opt = {}) {
  const auto t = read_tiles(tiles);
  auto map = render_tiles(t, resolve_palette(palette), opt);
  write_png(out_image, map.image);
  write_json(transform_sidecar(out_image), transform_to_json(map.transform));
  return map;
}

// --- join / prep -------------------------------------------------------------------

inline JoinReport cmd_join(const fs::path& properties, const std::optional<fs::path>& day_tiles,
                           const std::optional<fs::path>& night_tiles, double radius_m,
                           NoiseCharacteristic characteristic, const fs::path& out) {
  const auto props = read_properties(properties);
  std::optional<TileIndex> day, night;
  if (day_tiles) day.emplace(read_tiles(*day_tiles), radius_m);
  if (night_tiles) night.emplace(read_tiles(*night_tiles), radius_m);
  JoinReport report;
  const auto joined =
      attach_noise(props, day ? &*day : nullptr, night ? &*night : nullptr, characteristic, &report);
  write_file_atomic(out, format_properties(joined));
  return report;
}

inline PrepRules load_prep_rules(const std::optional<fs::path>& rules) {
  return rules ? prep_rules_from_json(read_json(*rules)) : default_prep_rules();
}

inline PrepReport cmd_prep(const fs::path& properties, const std::optional<fs::path>& rules, const fs::path& out) {
  const auto props = read_properties(properties);
  PrepReport report;
  const auto data = prepare(props, load_prep_rules(rules), &report);
  write_file_atomic(out, format_dataset(data));
  return report;
}

// --- training ------------------------------------------------------------------------

struct ResultLabels {
  std::string area = "all";
  std::string radius_m = "-";
  std::string characteristic = "-";
};

inline std::vector<std::string> noise_columns(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& c : d.columns) {
    if (c.rfind("noise_", 0) == 0) out.push_back(c);
  }
  return out;
}

inline std::string variant_name(const ModelSpec& spec, bool noise) {
  return spec.name + (noise ? "_noise" : "_base");
}

struct TrainOutput {
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, TreeEnsemble>> models;  // variant name -> final fit
};

// Every model with and without the noise columns: optional random search,
// k-fold CV for the metrics, then a final fit on all rows.
inline TrainOutput train_models(const Dataset& data, const ExperimentConfig& cfg, const ResultLabels& labels,
                                int workers = 1) {
  TrainOutput out;
  const auto noise_cols = noise_columns(data);
  const Dataset base = data.drop_columns(noise_cols);
  for (const auto& configured : cfg.models) {
    for (bool noise : {true, false}) {
      if (noise && noise_cols.empty()) continue;
      const Dataset& d = noise ? data : base;
      if (d.cols() == 0) continue;
      ModelSpec spec = configured;
      spec.workers = workers;
      if (cfg.search.budget > 0) {
        const auto objective = cv_mae_objective(d, cfg.folds, derive_seed(cfg.seed, "search-cv"), workers);
        spec = random_search(cfg.search.space, spec, cfg.search.budget, objective,
                             derive_seed(cfg.seed, "search:" + spec.name + (noise ? ":noise" : ":base")))
                   .best;
        spec.workers = workers;
      }
      const auto cv = cross_validate(d, spec, cfg.folds, derive_seed(cfg.seed, "cv"), workers);
      out.rows.push_back({spec.name, noise, labels.area, labels.radius_m, labels.characteristic, cv.mean_mae,
                          cv.mean_mape});
      out.models.emplace_back(variant_name(spec, noise), fit_model(d, spec, derive_seed(cfg.seed, "fit:" + spec.name)));
    }
  }
  return out;
}

inline std::vector<ResultRow> cmd_train(const ExperimentConfig& cfg, const fs::path& dataset, const fs::path& out_dir,
                                        const ResultLabels& labels = {}, int workers = 1) {
  const auto data = read_dataset(dataset);
  auto trained = train_models(data, cfg, labels, workers);
  for (const auto& [name, model] : trained.models) write_json(out_dir / ("model_" + name + ".json"), model_to_json(model));
  write_file_atomic(out_dir / "metrics.csv", format_results(trained.rows));
  return trained.rows;
}

inline std::string format_learning_curve(std::span<const CurvePoint> points) {
  std::string out = "fraction,train_rows,validation_mae\n";
  for (const auto& p : points) {
    out += format_double(p.fraction) + ',' + std::to_string(p.train_rows) + ',' + format_double(p.validation_mae) + '\n';
  }
  return out;
}

inline std::vector<CurvePoint> cmd_learning_curve(const Dataset& data, const ModelSpec& spec,
                                                  std::span<const double> fractions, std::uint64_t seed,
                                                  const fs::path& out_stem) {
  const auto points = learning_curve(data, spec, fractions, seed);
  write_file_atomic(fs::path(out_stem.string() + ".csv"), format_learning_curve(points));
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(static_cast<double>(p.train_rows));
    ys.push_back(p.validation_mae);
  }
  write_png(fs::path(out_stem.string() + ".png"), plot_curve(xs, ys));
  return points;
}

// --- explain ---------------------------------------------------------------------------

struct ExplainOptions {
  std::size_t repeats = 5;
  std::size_t grid = 6;
  std::uint64_t seed = 0;
  Metric metric = Metric::kMae;
  std::vector<std::string> features;  // empty: the noise columns
  int workers = 1;
};

inline ImportanceReport explain_model(const TreeEnsemble& model, const Dataset& data, const fs::path& out_dir,
                                      const std::string& prefix, const ExplainOptions& opt) {
  auto report = split_and_gain_importance(model);
  add_permutation_importance(model, data, opt.metric, opt.repeats, opt.seed, report, opt.workers);
  write_file_atomic(out_dir / (prefix + "importance.csv"), format_importance(report));
  const auto features = opt.features.empty() ? noise_columns(data) : opt.features;
  for (const auto& f : features) {
    const auto curve = partial_dependence(model, data, f, opt.grid);
    const auto stem = out_dir / (prefix + "pd_" + f);
    write_file_atomic(fs::path(stem.string() + ".csv"), format_curve(curve));
    write_png(fs::path(stem.string() + ".png"), plot_curve(curve.grid, curve.mean_prediction));
  }
  return report;
}

inline ImportanceReport cmd_explain(const fs::path& model_path, const fs::path& dataset, const fs::path& out_dir,
                                    const ExplainOptions& opt) {
  const auto model = model_from_json(read_json(model_path));
  const auto data = read_dataset(dataset);
  return explain_model(model, data, out_dir, "", opt);
}

// --- report ----------------------------------------------------------------------------

inline Table cmd_report(std::span<const fs::path> results, const fs::path& out) {
  if (results.empty()) fail(ErrorCategory::kInsufficientData, "report needs at least one result file");
  std::vector<ResultRow> rows;
  for (const auto& p : results) {
    auto r = read_results(p);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  auto table = build_report(rows);
  write_file_atomic(out, render_table(table));
  return table;
}

// --- synthetic fixture -----------------------------------------------------------------------

struct SynthOptions {
  std::uint64_t seed = 7;
  std::size_t size = 64;
  std::size_t properties = 400;
  double pixel_deg = 5e-5;
};

// A self-contained experiment: day and night heatmaps, exact control points,
// property listings with a planted noise effect, two areas and a config.
inline void cmd_synth(const fs::path& out_dir, const SynthOptions& opt) {
  const auto palette = builtin_palette(BuiltinPalette::kThessalonikiNeapoli);
  HeatmapOptions h;
  h.width = h.height = opt.size;
  h.pixel_deg = opt.pixel_deg;
  h.blend_borders = false;
  h.seed = derive_seed(opt.seed, "day");
  const auto day = synthetic_heatmap(palette, h);
  h.seed = derive_seed(opt.seed, "night");
  const auto night = synthetic_heatmap(palette, h);
  write_png(out_dir / "heatmap_day.png", day.image);
  write_png(out_dir / "heatmap_night.png", night.image);

  const double w = static_cast<double>(opt.size);
  std::vector<GroundControlPoint> gcps;
  for (auto [x, y] : {std::pair{0.0, 0.0}, {w, 0.0}, {0.0, w}, {w, w}, {w / 2, w / 4}, {w / 4, w / 2}}) {
    const auto g = pixel_to_geo(day.transform, x, y);
    gcps.push_back({x, y, g.longitude, g.latitude});
  }
  write_file_atomic(out_dir / "gcps.csv", format_gcps(gcps));

  const double lon0 = h.origin_longitude, lat1 = h.origin_latitude;
  const double span = w * opt.pixel_deg;
  const double margin = 0.05 * span;
  const double lo = palette.front().low_db, hi = palette.back().high_db;
  auto day_noise = [&](double lat, double lon) {
    return smooth_field((lon - lon0) / span, (lat1 - lat) / span, lo, hi, derive_seed(opt.seed, "day"));
  };
  PlantedOptions po;
  po.seed = opt.seed;
  const auto props = synthetic_properties(opt.properties, lon0 + margin, lon0 + span - margin, lat1 - span + margin,
                                          lat1 - margin, day_noise, po);
  write_file_atomic(out_dir / "properties.csv", format_properties(props));

  const double mid = lon0 + span / 2;
  const std::vector<Area> areas{
      {"A", {{lon0, lat1 - span}, {mid, lat1 - span}, {mid, lat1}, {lon0, lat1}}},
      {"C", {{mid, lat1 - span}, {lon0 + span, lat1 - span}, {lon0 + span, lat1}, {mid, lat1}}}};
  write_json(out_dir / "areas.json", areas_to_json(areas));

  nlohmann::json cfg = {
      {"seed", opt.seed},
      {"palette", "thessaloniki_neapoli"},
      {"threshold", kDefaultColorThreshold},
      {"gcps", "gcps.csv"},
      {"images", {{"day", "heatmap_day.png"}, {"night", "heatmap_night.png"}}},
      {"decimals", kDefaultTileDecimals},
      {"radii_m", {100}},
      {"characteristics", {"I", "II", "III", "IV"}},
      {"properties", "properties.csv"},
      {"areas", "areas.json"},
      {"prep",
       {{"outliers",
         {{{"column", column::kRooms}, {"method", "iqr"}, {"k", 1.5}},
          {{"column", column::kSize}, {"method", "iqr"}, {"k", 1.5}},
          {{"column", column::kPrice}, {"method", "fixed"}, {"lower", 10000}, {"upper", 500000}}}},
        {"ordinal_orders",
         {{column::kEnergy, {"A", "B", "C", "D", "E", "F"}}, {column::kFloor, {"0", "1", "2", "3", "4", "5", "6"}}}},
        {"nominal_encoding", "one_hot"}}},
      {"models",
       {{{"preset", "decision_tree"}},
        {{"preset", "random_forest"}, {"tree_count", 50}},
        {{"preset", "xgboost"}},
        {{"preset", "lgbm"}}}},
      {"folds", 5},
      {"learning_curve", {0.1, 0.25, 0.5, 0.75, 1.0}},
      {"permutation_repeats", 5},
      {"pd_grid", 6},
      {"output_dir", "out"}};
  write_json(out_dir / "config.json", cfg);
}

// --- full run ----------------------------------------------------------------------------------

struct RunSummary {
  std::vector<ResultRow> results;
  Table report;
};

inline std::string radius_label(double r) { return format_double(r); }

inline RunSummary cmd_run(ExperimentConfig cfg, const std::optional<fs::path>& out_override,
                          const std::optional<std::uint64_t>& seed_override, int workers = 1) {
  if (out_override) cfg.output_dir = *out_override;
  if (seed_override) cfg.seed = *seed_override;
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  RunLog log(out / "run.log");
  log.line("run start seed=" + std::to_string(cfg.seed) + " workers=" + std::to_string(workers));
  const auto palette = config_palette(cfg);

  const auto geo = cmd_georef(cfg.gcps, out / "transform.json");
  log.line("georef rmse_deg=" + format_double(geo.rmse_deg));

  struct Layer {
    std::string name;
    fs::path image;
  };
  std::vector<Layer> layers{{"day", cfg.day_image}, {"night", cfg.night_image}};
  if (cfg.aviation_image) layers.push_back({"aviation", *cfg.aviation_image});
  std::string shapes = "layer,samples,tiles,reduction\n";
  std::map<std::string, std::vector<Tile>> tiles;
  for (const auto& layer : layers) {
    const auto samples_path = out / ("samples_" + layer.name + ".csv");
    const auto tiles_path = out / ("tiles_" + layer.name + ".csv");
    cmd_reconstruct(layer.image, out / "transform.json", cfg.palette, cfg.threshold, samples_path, workers);
    const auto t = cmd_tessellate(samples_path, cfg.decimals, tiles_path, workers);
    shapes += join_fields({layer.name, std::to_string(t.samples), std::to_string(t.tiles),
                           t.samples ? format_fixed(reduction_ratio(t.samples, t.tiles), 4) : "-"}) +
              '\n';
    tiles[layer.name] = read_tiles(tiles_path);
    log.line("layer " + layer.name + " samples=" + std::to_string(t.samples) + " tiles=" + std::to_string(t.tiles));
  }
  write_file_atomic(out / "shapes.csv", shapes);

  // Filtering and imputation run once over all listings; encoding happens
  // per experiment cell because the category sets depend on the subset.
  const auto props = read_properties(cfg.properties);
  PrepReport prep_report;
  std::vector<PropertyRecord> cleaned;
  prepare(props, cfg.prep, &prep_report, &cleaned);
  write_file_atomic(out / "properties_clean.csv", format_properties(cleaned));
  log.line("prep rows_in=" + std::to_string(prep_report.filter.rows_in) +
           " rows_out=" + std::to_string(prep_report.filter.rows_out));

  std::vector<Area> areas;
  if (cfg.areas) areas = areas_from_json(read_json(*cfg.areas));

  RunSummary summary;
  std::optional<Dataset> first_data;
  std::vector<std::pair<std::string, TreeEnsemble>> first_models;
  for (double radius : cfg.radii_m) {
    const TileIndex day(tiles["day"], radius);
    const TileIndex night(tiles["night"], radius);
    for (auto ch : cfg.characteristics) {
      const std::string cell = radius_label(radius) + "m_" + characteristic_name(ch);
      const auto joined = attach_noise(cleaned, &day, &night, ch);
      write_file_atomic(out / ("joined_" + cell + ".csv"), format_properties(joined));
      std::vector<std::pair<std::string, std::vector<PropertyRecord>>> subsets{{"all", joined}};
      for (const auto& a : areas) subsets.emplace_back(a.name, select_area(joined, a));
      for (const auto& [area, records] : subsets) {
        if (records.size() < 2 * cfg.folds) {
          log.line("skip " + area + "/" + cell + ": " + std::to_string(records.size()) + " rows");
          continue;
        }
        const auto data = encode(records, cfg.prep.orders, cfg.prep.encoding);
        write_file_atomic(out / ("dataset_" + area + "_" + cell + ".csv"), format_dataset(data));
        auto trained = train_models(data, cfg, {area, radius_label(radius), characteristic_name(ch)}, workers);
        summary.results.insert(summary.results.end(), trained.rows.begin(), trained.rows.end());
        log.line("trained " + area + "/" + cell);
        if (!first_data) {
          first_data = data;
          first_models = std::move(trained.models);
        }
      }
    }
  }
  write_file_atomic(out / "results.csv", format_results(summary.results));
  if (summary.results.empty()) fail(ErrorCategory::kInsufficientData, "no experiment cell had enough rows");
  summary.report = build_report(summary.results);
  write_file_atomic(out / "report.csv", render_table(summary.report));
  write_file_atomic(out / "report.txt", align_table(summary.report));

  // Diagnostics on the first cell: learning curves, importance, dependence.
  if (first_data) {
    const auto diag = out / "diagnostics";
    for (const auto& spec : cfg.models) {
      if (!cfg.learning_curve.empty()) {
        cmd_learning_curve(*first_data, spec, cfg.learning_curve, derive_seed(cfg.seed, "learning-curve"),
                           diag / ("curve_" + spec.name));
      }
    }
    ExplainOptions eo;
    eo.repeats = cfg.permutation_repeats;
    eo.grid = cfg.pd_grid;
    eo.seed = derive_seed(cfg.seed, "permutation");
    eo.workers = workers;
    for (const auto& [name, model] : first_models) {
      write_json(diag / ("model_" + name + ".json"), model_to_json(model));
      const Dataset& d = model.feature_names == first_data->columns
                             ? *first_data
                             : first_data->drop_columns(noise_columns(*first_data));
      explain_model(model, d, diag, name + "_", eo);
    }
    log.line("diagnostics written");
  }
  log.line("run done");
  return summary;
}

}  // namespace noisemap
