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

// Read-only diagnostics over a fitted ensemble: split-count and mean-gain
// importance, permutation importance, and partial dependence.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "noisemap/dataset.hpp"
#include "noisemap/ensemble.hpp"
#include "noisemap/error.hpp"
#include "noisemap/parallel.hpp"
#include "noisemap/seed.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

struct FeatureImportance {
  std::string feature;
  std::size_t split_count = 0;
  double mean_gain = 0.0;
  double permutation_delta = 0.0;  // metric(permuted) - metric(baseline)
  double permutation_std = 0.0;
  // Named slots for scores from other explainers.
  std::map<std::string, double> extra;
};

struct ImportanceReport {
  std::vector<FeatureImportance> features;

  const FeatureImportance& operator[](const std::string& name) const {
    for (const auto& f : features) {
      if (f.feature == name) return f;
    }
    fail(ErrorCategory::kSchema, "no importance entry for '" + name + "'");
  }
};

inline ImportanceReport empty_report(const TreeEnsemble& model) {
  ImportanceReport r;
  for (const auto& name : model.feature_names) {
    FeatureImportance entry;
    entry.feature = name;
    r.features.push_back(std::move(entry));
  }
  return r;
}

// split_count: internal nodes using the feature across all trees.
// mean_gain: total gain on those nodes divided by split_count.
inline void add_split_importance(const TreeEnsemble& model, ImportanceReport& report) {
  if (!model.fitted()) fail(ErrorCategory::kState, "model is not fitted");
  std::vector<double> total(model.feature_names.size(), 0.0);
  std::vector<std::size_t> count(model.feature_names.size(), 0);
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      const auto f = static_cast<std::size_t>(node.feature);
      ++count[f];
      total[f] += node.gain;
    }
  }
  for (std::size_t f = 0; f < total.size(); ++f) {
    report.features[f].split_count = count[f];
    report.features[f].mean_gain = count[f] ? total[f] / static_cast<double>(count[f]) : 0.0;
  }
}

inline ImportanceReport split_and_gain_importance(const TreeEnsemble& model) {
  if (!model.fitted()) fail(ErrorCategory::kState, "model is not fitted");
  auto report = empty_report(model);
  add_split_importance(model, report);
  return report;
}

// Per feature and repeat, shuffles that column with a seed derived from
// (seed, feature, repeat) and records the metric increase. The reported std
// is the population standard deviation over repeats.
inline void add_permutation_importance(const TreeEnsemble& model, const Dataset& data, Metric metric,
                                       std::size_t repeats, std::uint64_t seed, ImportanceReport& report,
                                       int workers = 1) {
  if (repeats < 1) fail(ErrorCategory::kPrecondition, "repeats must be >= 1");
  const auto base_pred = predict(model, data);
  const double baseline = evaluate_metric(metric, data.y, base_pred);
  const std::size_t p = data.cols();
  parallel_for(p, workers, [&](std::size_t f) {
    Dataset shuffled = data;
    std::vector<double> column(data.rows);
    for (std::size_t r = 0; r < data.rows; ++r) column[r] = data.at(r, f);
    std::vector<double> deltas(repeats);
    for (std::size_t k = 0; k < repeats; ++k) {
      std::vector<double> perm = column;
      std::mt19937_64 rng(derive_seed(derive_seed(seed, f), k));
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t r = 0; r < data.rows; ++r) shuffled.at(r, f) = perm[r];
      deltas[k] = evaluate_metric(metric, data.y, predict(model, shuffled)) - baseline;
    }
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double d : deltas) var += (d - mean) * (d - mean);
    report.features[f].permutation_delta = mean;
    report.features[f].permutation_std = std::sqrt(var / static_cast<double>(repeats));
  });
}

inline ImportanceReport permutation_importance(const TreeEnsemble& model, const Dataset& data, Metric metric,
                                               std::size_t repeats, std::uint64_t seed, int workers = 1) {
  if (!model.fitted()) fail(ErrorCategory::kState, "model is not fitted");
  auto report = empty_report(model);
  add_permutation_importance(model, data, metric, repeats, seed, report, workers);
  return report;
}

inline std::string format_importance(const ImportanceReport& report) {
  std::string out = "feature,split_count,mean_gain,permutation_delta,permutation_std\n";
  for (const auto& f : report.features) {
    out += join_fields({f.feature, std::to_string(f.split_count), format_double(f.mean_gain),
                        format_double(f.permutation_delta), format_double(f.permutation_std)}) +
           '\n';
  }
  return out;
}

struct DependenceCurve {
  std::string feature;
  std::vector<double> grid;  // strictly ascending
  std::vector<double> mean_prediction;
};

// Quantile-spaced grid: levels i / (grid_size - 1) of the observed values,
// interpolated linearly, with repeated values collapsed.
inline std::vector<double> quantile_grid(std::vector<double> values, std::size_t grid_size,
                                         const std::string& feature) {
  if (grid_size < 2) fail(ErrorCategory::kPrecondition, "grid_size must be >= 2");
  if (values.empty()) fail(ErrorCategory::kInsufficientData, "partial dependence needs at least one row");
  std::sort(values.begin(), values.end());
  if (values.front() == values.back()) {
    fail(ErrorCategory::kDegenerateGrid,
         "feature '" + feature + "' is constant (" + format_double(values.front()) +
             "); a partial-dependence grid needs at least two distinct values");
  }
  std::vector<double> grid;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double v = quantile_linear(values, static_cast<double>(i) / static_cast<double>(grid_size - 1));
    if (grid.empty() || v > grid.back()) grid.push_back(v);
  }
  return grid;
}

inline DependenceCurve partial_dependence(const TreeEnsemble& model, const Dataset& data,
                                          const std::string& feature, std::size_t grid_size) {
  if (!model.fitted()) fail(ErrorCategory::kState, "model is not fitted");
  const auto col = data.find_column(feature);
  if (!col) fail(ErrorCategory::kSchema, "feature '" + feature + "' is not in the dataset");
  if (data.columns != model.feature_names) {
    fail(ErrorCategory::kSchema, "dataset columns do not match the model's training columns");
  }
  std::vector<double> values(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) values[r] = data.at(r, *col);

  DependenceCurve curve;
  curve.feature = feature;
  curve.grid = quantile_grid(std::move(values), grid_size, feature);
  std::vector<double> row(data.cols());
  for (double v : curve.grid) {
    double sum = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) {
      const auto src = data.row(r);
      std::copy(src.begin(), src.end(), row.begin());
      row[*col] = v;
      sum += predict_row(model, row);
    }
    curve.mean_prediction.push_back(sum / static_cast<double>(data.rows));
  }
  return curve;
}

inline std::string format_curve(const DependenceCurve& curve) {
  std::string out = curve.feature + ",mean_prediction\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out += format_double(curve.grid[i]) + ',' + format_double(curve.mean_prediction[i]) + '\n';
  }
  return out;
}

}  // namespace noisemap
