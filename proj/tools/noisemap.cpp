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

// noisemap: command-line front end. Failures print
//   error[<category>]: <message>
// to stderr and exit with 10 + the category index.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "noisemap/error.hpp"
#include "noisemap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace noisemap;

namespace {

int report_error(const Error& e) {
  std::cerr << "error[" << category_name(e.category()) << "]: " << e.what() << '\n';
  return exit_code(e.category());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise maps from legend-coded heatmaps, joined to property listings and fed to tree ensembles"};
  app.require_subcommand(1);

  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config_path;
  auto add_common = [&](CLI::App* cmd, bool with_seed) {
    cmd->add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
    if (with_seed) cmd->add_option("--seed", seed, "Root seed");
  };

  // georef
  std::string gcp_file;
  auto* georef = app.add_subcommand("georef", "Fit the pixel->lon/lat affine transform from control points");
  georef->add_option("gcps", gcp_file, "CSV: pixel_x,pixel_y,longitude,latitude")->required()->check(CLI::ExistingFile);
  georef->add_option("--out", out, "Transform JSON")->required();

  // reconstruct
  std::string image, transform, palette = "thessaloniki_neapoli";
  double threshold = kDefaultColorThreshold;
  auto* reconstruct = app.add_subcommand("reconstruct", "Classify heatmap pixels into noise samples");
  reconstruct->add_option("image", image, "Heatmap PNG")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--transform", transform, "Transform JSON")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--palette", palette, "Built-in palette name or palette JSON");
  reconstruct->add_option("--threshold", threshold, "CIEDE2000 match threshold");
  reconstruct->add_option("--out", out, "Samples CSV")->required();
  add_common(reconstruct, false);

  // tessellate
  std::string samples;
  int decimals = kDefaultTileDecimals;
  auto* tess = app.add_subcommand("tessellate", "Aggregate samples into truncated-coordinate tiles");
  tess->add_option("samples", samples, "Samples CSV")->required()->check(CLI::ExistingFile);
  tess->add_option("--decimals", decimals, "Coordinate decimals kept");
  tess->add_option("--out", out, "Tiles CSV")->required();
  add_common(tess, false);

  // join
  std::string properties, day_tiles, night_tiles, characteristic = "I";
  double radius = 100.0;
  auto* join = app.add_subcommand("join", "Attach radius-averaged noise to properties");
  join->add_option("properties", properties, "Property CSV")->required()->check(CLI::ExistingFile);
  join->add_option("--day", day_tiles, "Day tiles CSV")->check(CLI::ExistingFile);
  join->add_option("--night", night_tiles, "Night tiles CSV")->check(CLI::ExistingFile);
  join->add_option("--radius", radius, "Radius in meters");
  join->add_option("--characteristic", characteristic, "I, II, III or IV");
  join->add_option("--out", out, "Joined property CSV")->required();

  // prep
  std::string rules;
  auto* prep = app.add_subcommand("prep", "Filter outliers, impute and encode properties");
  prep->add_option("properties", properties, "Property CSV")->required()->check(CLI::ExistingFile);
  prep->add_option("--rules", rules, "Preparation rules JSON")->check(CLI::ExistingFile);
  prep->add_option("--out", out, "Dataset CSV")->required();

  // train
  std::string dataset, area = "all", radius_label = "-";
  auto* train = app.add_subcommand("train", "Cross-validate and fit every configured model, with and without noise");
  train->add_option("dataset", dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output directory")->required();
  train->add_option("--area", area, "Area label for the result rows");
  train->add_option("--radius", radius_label, "Radius label for the result rows");
  train->add_option("--characteristic", characteristic, "Characteristic label for the result rows");
  add_common(train, true);

  // explain
  std::string model_path;
  std::vector<std::string> features;
  ExplainOptions explain_opt;
  auto* explain = app.add_subcommand("explain", "Importance and partial dependence for a fitted model");
  explain->add_option("model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  explain->add_option("dataset", dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
  explain->add_option("--out", out, "Output directory")->required();
  explain->add_option("--repeats", explain_opt.repeats, "Permutation repeats")->check(CLI::PositiveNumber);
  explain->add_option("--grid", explain_opt.grid, "Partial-dependence grid size");
  explain->add_option("--feature", features, "Features for partial dependence (default: noise columns)");
  std::string metric = "mae";
  explain->add_option("--metric", metric, "mae or mape")->check(CLI::IsMember({"mae", "mape"}));
  add_common(explain, true);

  // render
  std::string tiles_path;
  RenderOptions render_opt;
  auto* render = app.add_subcommand("render", "Rasterize tiles back into a legend-coded PNG");
  render->add_option("tiles", tiles_path, "Tiles CSV")->required()->check(CLI::ExistingFile);
  render->add_option("--palette", palette, "Built-in palette name or palette JSON");
  render->add_option("--decimals", render_opt.decimals, "Coordinate decimals of the tiles");
  render->add_option("--pixels-per-cell", render_opt.pixels_per_cell, "Cell side in pixels (0 = fit members)");
  render->add_flag("--fill", render_opt.fill, "Solid cells in the band of the mean");
  render->add_option("--out", out, "Output PNG; the transform goes to <out>.transform.json")->required();

  // report
  std::vector<std::string> result_files;
  auto* report = app.add_subcommand("report", "Compare result files as a model x noise table");
  report->add_option("results", result_files, "Result CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out, "Report CSV")->required();

  // synth
  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "Write the synthetic fixture experiment");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--size", synth_opt.size, "Heatmap side in pixels");
  synth->add_option("--properties", synth_opt.properties, "Number of listings");
  add_common(synth, true);

  // run
  auto* run = app.add_subcommand("run", "Run a whole experiment from a config");
  run->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides the config)");
  add_common(run, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::kConfiguration);
  }

  try {
    if (*georef) {
      const auto s = cmd_georef(gcp_file, out);
      std::cout << "rmse_deg " << format_double(s.rmse_deg) << '\n';
    } else if (*reconstruct) {
      const auto s = cmd_reconstruct(image, transform, palette, threshold, out, workers);
      std::cout << "pixels " << s.pixels << " matched " << s.matched << '\n';
    } else if (*tess) {
      const auto s = cmd_tessellate(samples, decimals, out, workers);
      std::cout << "samples " << s.samples << " tiles " << s.tiles << '\n';
    } else if (*join) {
      const auto r = cmd_join(properties, day_tiles.empty() ? std::nullopt : std::optional<fs::path>(day_tiles),
                              night_tiles.empty() ? std::nullopt : std::optional<fs::path>(night_tiles), radius,
                              parse_characteristic(characteristic), out);
      std::cout << "rows_in " << r.rows_in << " rows_out " << r.rows_out << '\n';
    } else if (*prep) {
      const auto r = cmd_prep(properties, rules.empty() ? std::nullopt : std::optional<fs::path>(rules), out);
      std::cout << "rows_in " << r.filter.rows_in << " rows_out " << r.filter.rows_out << '\n';
    } else if (*train) {
      auto cfg = load_config(config_path);
      if (seed) cfg.seed = *seed;
      cmd_train(cfg, dataset, out, {area, radius_label, characteristic}, workers);
    } else if (*explain) {
      explain_opt.features = features;
      explain_opt.seed = seed.value_or(0);
      explain_opt.workers = workers;
      explain_opt.metric = metric == "mape" ? Metric::kMape : Metric::kMae;
      cmd_explain(model_path, dataset, out, explain_opt);
    } else if (*render) {
      const auto m = cmd_render(tiles_path, palette, out, render_opt);
      std::cout << "drawn " << m.tiles_drawn << " skipped " << m.tiles_skipped << " lossy " << m.tiles_lossy << '\n';
    } else if (*report) {
      std::vector<fs::path> paths(result_files.begin(), result_files.end());
      std::cout << align_table(cmd_report(paths, out));
    } else if (*synth) {
      synth_opt.seed = seed.value_or(synth_opt.seed);
      cmd_synth(out, synth_opt);
    } else if (*run) {
      const auto cfg = load_config(config_path);
      const auto s = cmd_run(cfg, out.empty() ? std::nullopt : std::optional<fs::path>(out), seed, workers);
      std::cout << align_table(s.report);
    }
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error(Error(ErrorCategory::kIo, e.what()));
  }
  return 0;
}
