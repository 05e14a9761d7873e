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

// Regression trees and tree ensembles under squared error.
//
// One exact splitter serves every model kind. Candidate thresholds are the
// midpoints between consecutive distinct values of a feature within a node;
// a row goes left when its value is below the threshold. The split gain is
// the reduction in the sum of squared errors,
//
//   gain = S_L^2 / n_L + S_R^2 / n_R - S^2 / n
//
// over targets centered on the node mean. Equal gains resolve to the lowest
// feature index, then the lowest threshold.
//
// Per tree, every feature keeps the node's rows in sorted order and splits
// stable-partition all of those lists, so a whole level costs O(features *
// rows) after a single presort per fit.
//
// Growth modes: level-wise expands nodes breadth first and is normally
// limited by max_depth; leaf-wise always expands the pending node with the
// largest gain and is normally limited by max_leaves.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisemap/dataset.hpp"
#include "noisemap/error.hpp"
#include "noisemap/parallel.hpp"
#include "noisemap/seed.hpp"

namespace noisemap {

enum class ModelKind { kSingleTree, kForest, kBoosted };
enum class Growth { kLevelWise, kLeafWise };

struct TreeParams {
  int max_depth = -1;  // negative: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_leaves = 0;  // 0: unlimited
  double feature_subsample = 1.0;  // fraction of features tried per split
  Growth growth = Growth::kLevelWise;
};

struct ModelSpec {
  std::string name = "model";
  ModelKind kind = ModelKind::kSingleTree;
  TreeParams tree;
  std::size_t tree_count = 1;
  double learning_rate = 0.1;   // boosted
  double row_subsample = 1.0;   // boosted: rows drawn per stage, no replacement
  bool bootstrap = true;        // forest
  int workers = 1;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  double gain = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the node's training rows
  std::size_t sample_count = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }
  double predict(std::span<const double> row) const { return leaf_for(row).value; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
  }
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeEnsemble {
  ModelKind kind = ModelKind::kSingleTree;
  Growth growth = Growth::kLevelWise;
  std::vector<Tree> trees;
  double learning_rate = 1.0;
  double base_prediction = 0.0;
  std::vector<std::string> feature_names;
  ModelSpec spec;

  bool fitted() const { return !feature_names.empty(); }
  friend bool operator==(const TreeEnsemble& l, const TreeEnsemble& r) {
    return l.kind == r.kind && l.growth == r.growth && l.trees == r.trees &&
           l.learning_rate == r.learning_rate && l.base_prediction == r.base_prediction &&
           l.feature_names == r.feature_names;
  }
};

inline void validate_spec(const ModelSpec& spec) {
  auto bad = [](const std::string& m) { fail(ErrorCategory::kPrecondition, m); };
  if (spec.tree.min_samples_leaf < 1) bad("min_samples_leaf must be >= 1");
  if (!(spec.tree.feature_subsample > 0.0 && spec.tree.feature_subsample <= 1.0)) {
    bad("feature_subsample must be in (0, 1]");
  }
  if (spec.kind != ModelKind::kSingleTree && spec.tree_count < 1) bad("tree_count must be >= 1");
  if (spec.kind == ModelKind::kBoosted) {
    if (!(spec.learning_rate > 0.0 && spec.learning_rate <= 1.0)) bad("learning_rate must be in (0, 1]");
    if (!(spec.row_subsample > 0.0 && spec.row_subsample <= 1.0)) bad("row_subsample must be in (0, 1]");
  }
}

namespace detail {

// Column-major copy of the features with a stable presort per column.
struct FitContext {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::uint32_t>> sorted;

  explicit FitContext(const Dataset& d) : rows(d.rows), features(d.cols()) {
    columns.assign(features, std::vector<double>(rows));
    sorted.assign(features, std::vector<std::uint32_t>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t f = 0; f < features; ++f) columns[f][r] = d.at(r, f);
    }
    for (std::size_t f = 0; f < features; ++f) {
      auto& order = sorted[f];
      std::iota(order.begin(), order.end(), 0U);
      const auto& col = columns[f];
      std::stable_sort(order.begin(), order.end(),
                       [&col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
  }
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

inline double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

class TreeBuilder {
 public:
  // `multiplicity[r]` is how many times row r enters this tree (0 = absent).
  TreeBuilder(const FitContext& ctx, std::span<const double> targets,
              std::span<const std::uint32_t> multiplicity, const TreeParams& params, std::uint64_t seed)
      : ctx_(ctx), targets_(targets), params_(params), seed_(seed) {
    order_.resize(ctx.features);
    for (std::size_t f = 0; f < ctx.features; ++f) {
      auto& o = order_[f];
      for (auto r : ctx.sorted[f]) {
        for (std::uint32_t k = 0; k < multiplicity[r]; ++k) o.push_back(r);
      }
    }
    size_ = ctx.features > 0 ? order_[0].size() : 0;
    if (ctx.features == 0) {
      for (std::size_t r = 0; r < ctx.rows; ++r) {
        for (std::uint32_t k = 0; k < multiplicity[r]; ++k) rows_only_.push_back(static_cast<std::uint32_t>(r));
      }
      size_ = rows_only_.size();
    }
    goes_left_.assign(ctx.rows, 0);
    buffer_.resize(size_);
  }

  Tree build() {
    if (size_ == 0) fail(ErrorCategory::kInsufficientData, "cannot fit a tree on zero rows");
    Tree tree;
    tree.nodes.push_back(make_node(0, size_));
    struct Pending {
      std::size_t node;
      std::size_t begin, end;
      int depth;
      SplitChoice split;
      std::size_t order;  // creation order, breaks gain ties in leaf-wise mode
    };
    std::size_t created = 0;
    auto evaluate = [&](std::size_t node, std::size_t b, std::size_t e, int depth) -> std::optional<Pending> {
      if (params_.max_depth >= 0 && depth >= params_.max_depth) return std::nullopt;
      auto split = best_split(b, e, derive_seed(seed_, node));
      if (split.feature < 0) return std::nullopt;
      return Pending{node, b, e, depth, split, created++};
    };
    auto cmp = [](const Pending& a, const Pending& b) {
      if (a.split.gain != b.split.gain) return a.split.gain < b.split.gain;
      return a.order > b.order;
    };
    std::deque<Pending> fifo;
    std::priority_queue<Pending, std::vector<Pending>, decltype(cmp)> heap(cmp);
    const bool leaf_wise = params_.growth == Growth::kLeafWise;
    auto push = [&](std::optional<Pending> p) {
      if (!p) return;
      if (leaf_wise) {
        heap.push(*p);
      } else {
        fifo.push_back(*p);
      }
    };
    push(evaluate(0, 0, size_, 0));
    std::size_t leaves = 1;
    while (leaf_wise ? !heap.empty() : !fifo.empty()) {
      if (params_.max_leaves > 0 && leaves >= params_.max_leaves) break;
      Pending p;
      if (leaf_wise) {
        p = heap.top();
        heap.pop();
      } else {
        p = fifo.front();
        fifo.pop_front();
      }
      const std::size_t mid = partition(p.begin, p.end, p.split);
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(make_node(p.begin, mid));
      tree.nodes.push_back(make_node(mid, p.end));
      auto& parent = tree.nodes[p.node];
      parent.feature = p.split.feature;
      parent.threshold = p.split.threshold;
      parent.gain = p.split.gain;
      parent.left = left;
      parent.right = left + 1;
      ++leaves;
      push(evaluate(static_cast<std::size_t>(left), p.begin, mid, p.depth + 1));
      push(evaluate(static_cast<std::size_t>(left + 1), mid, p.end, p.depth + 1));
    }
    return tree;
  }

 private:
  std::uint32_t row_at(std::size_t pos) const {
    return ctx_.features > 0 ? order_[0][pos] : rows_only_[pos];
  }

  TreeNode make_node(std::size_t b, std::size_t e) const {
    TreeNode n;
    n.sample_count = e - b;
    double sum = 0.0;
    double lo = targets_[row_at(b)];
    double hi = lo;
    for (std::size_t i = b; i < e; ++i) {
      const double y = targets_[row_at(i)];
      sum += y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    // A pure node predicts its common target exactly.
    n.value = lo == hi ? lo : sum / static_cast<double>(e - b);
    return n;
  }

  std::vector<std::size_t> candidate_features(std::uint64_t seed) const {
    std::vector<std::size_t> feats(ctx_.features);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    if (params_.feature_subsample >= 1.0 || ctx_.features <= 1) return feats;
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(params_.feature_subsample * static_cast<double>(ctx_.features))));
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, feats.size() - 1);
      std::swap(feats[i], feats[pick(rng)]);
    }
    feats.resize(k);
    std::sort(feats.begin(), feats.end());
    return feats;
  }

  SplitChoice best_split(std::size_t b, std::size_t e, std::uint64_t seed) const {
    SplitChoice best;
    const std::size_t n = e - b;
    const std::size_t min_leaf = params_.min_samples_leaf;
    if (n < 2 * min_leaf || ctx_.features == 0) return best;

    double sum = 0.0;
    double lo = targets_[row_at(b)];
    double hi = lo;
    for (std::size_t i = b; i < e; ++i) {
      const double y = targets_[row_at(i)];
      sum += y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    if (lo == hi) return best;
    const double mean = sum / static_cast<double>(n);
    double total = 0.0;
    double sse = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double c = targets_[row_at(i)] - mean;
      total += c;
      sse += c * c;
    }
    const double base = total * total / static_cast<double>(n);
    const double min_gain = 1e-12 * sse;

    for (auto f : candidate_features(seed)) {
      const auto& order = order_[f];
      const auto& col = ctx_.columns[f];
      double left_sum = 0.0;
      for (std::size_t i = b; i + 1 < e; ++i) {
        const auto r = order[i];
        left_sum += targets_[r] - mean;
        const std::size_t nl = i + 1 - b;
        const std::size_t nr = n - nl;
        const double x = col[r];
        const double x_next = col[order[i + 1]];
        if (!(x < x_next)) continue;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - base;
        if (gain > min_gain && gain > best.gain) {
          best.feature = static_cast<int>(f);
          best.threshold = split_threshold(x, x_next);
          best.gain = gain;
        }
      }
    }
    return best;
  }

  // Stable partition of every feature's list; returns the split position.
  std::size_t partition(std::size_t b, std::size_t e, const SplitChoice& split) {
    const auto& col = ctx_.columns[static_cast<std::size_t>(split.feature)];
    const auto& ref = order_[0];
    std::size_t left_count = 0;
    for (std::size_t i = b; i < e; ++i) {
      const auto r = ref[i];
      goes_left_[r] = col[r] < split.threshold ? 1 : 0;
      left_count += goes_left_[r];
    }
    for (auto& order : order_) {
      std::size_t li = b;
      std::size_t ri = 0;
      for (std::size_t i = b; i < e; ++i) {
        const auto r = order[i];
        if (goes_left_[r]) {
          order[li++] = r;
        } else {
          buffer_[ri++] = r;
        }
      }
      std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(ri), order.begin() + static_cast<std::ptrdiff_t>(li));
    }
    return b + left_count;
  }

  const FitContext& ctx_;
  std::span<const double> targets_;
  TreeParams params_;
  std::uint64_t seed_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint32_t> rows_only_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> buffer_;
  std::size_t size_ = 0;
};

inline void require_rows(const Dataset& d) {
  if (d.rows == 0) fail(ErrorCategory::kInsufficientData, "cannot fit on an empty dataset");
  if (d.y.size() != d.rows) fail(ErrorCategory::kSchema, "target length does not match rows");
}

}  // namespace detail

inline Tree fit_tree(const Dataset& data, const TreeParams& params, std::uint64_t seed = 0) {
  detail::require_rows(data);
  ModelSpec spec;
  spec.tree = params;
  validate_spec(spec);
  const detail::FitContext ctx(data);
  const std::vector<std::uint32_t> ones(data.rows, 1);
  return detail::TreeBuilder(ctx, data.y, ones, params, seed).build();
}

namespace detail {

inline TreeEnsemble empty_model(const Dataset& data, const ModelSpec& spec) {
  TreeEnsemble m;
  m.kind = spec.kind;
  m.growth = spec.tree.growth;
  m.feature_names = data.columns;
  m.spec = spec;
  if (m.feature_names.empty()) fail(ErrorCategory::kSchema, "dataset has no feature columns");
  return m;
}

}  // namespace detail

inline TreeEnsemble fit_single_tree(const Dataset& data, const ModelSpec& spec, std::uint64_t seed) {
  detail::require_rows(data);
  validate_spec(spec);
  auto m = detail::empty_model(data, spec);
  m.kind = ModelKind::kSingleTree;
  m.trees.push_back(fit_tree(data, spec.tree, derive_seed(seed, 0)));
  return m;
}

// Bagged trees; tree t draws its bootstrap sample and split features from
// derive_seed(seed, t), so the forest does not depend on the worker count.
inline TreeEnsemble fit_forest(const Dataset& data, const ModelSpec& spec, std::uint64_t seed) {
  detail::require_rows(data);
  validate_spec(spec);
  auto m = detail::empty_model(data, spec);
  m.kind = ModelKind::kForest;
  const detail::FitContext ctx(data);
  m.trees.resize(spec.tree_count);
  parallel_for(spec.tree_count, spec.workers, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(seed, t);
    std::vector<std::uint32_t> counts(data.rows, 1);
    if (spec.bootstrap) {
      std::fill(counts.begin(), counts.end(), 0);
      std::mt19937_64 rng(derive_seed(tree_seed, label_hash("bootstrap")));
      std::uniform_int_distribution<std::size_t> pick(0, data.rows - 1);
      for (std::size_t i = 0; i < data.rows; ++i) ++counts[pick(rng)];
    }
    m.trees[t] = detail::TreeBuilder(ctx, data.y, counts, spec.tree, tree_seed).build();
  });
  return m;
}

// Stagewise fit of squared-error residuals, starting from the target mean.
// Each stage adds learning_rate * tree(x).
inline TreeEnsemble fit_boosted(const Dataset& data, const ModelSpec& spec, std::uint64_t seed,
                                std::vector<double>* stage_mse = nullptr) {
  detail::require_rows(data);
  validate_spec(spec);
  auto m = detail::empty_model(data, spec);
  m.kind = ModelKind::kBoosted;
  m.learning_rate = spec.learning_rate;
  double sum = 0.0;
  for (double y : data.y) sum += y;
  m.base_prediction = sum / static_cast<double>(data.rows);

  const detail::FitContext ctx(data);
  std::vector<double> pred(data.rows, m.base_prediction);
  std::vector<double> residual(data.rows);
  std::vector<std::uint32_t> counts(data.rows, 1);
  const auto sample_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(spec.row_subsample * static_cast<double>(data.rows))));
  std::vector<std::size_t> perm(data.rows);

  auto record_mse = [&]() {
    if (!stage_mse) return;
    double s = 0.0;
    for (std::size_t r = 0; r < data.rows; ++r) s += (data.y[r] - pred[r]) * (data.y[r] - pred[r]);
    stage_mse->push_back(s / static_cast<double>(data.rows));
  };
  record_mse();

  for (std::size_t stage = 0; stage < spec.tree_count; ++stage) {
    const std::uint64_t stage_seed = derive_seed(seed, stage);
    for (std::size_t r = 0; r < data.rows; ++r) residual[r] = data.y[r] - pred[r];
    if (sample_size < data.rows) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(stage_seed, label_hash("rows")));
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < sample_size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, data.rows - 1);
        std::swap(perm[i], perm[pick(rng)]);
        counts[perm[i]] = 1;
      }
    }
    Tree tree = detail::TreeBuilder(ctx, residual, counts, spec.tree, stage_seed).build();
    std::vector<double> row(ctx.features);
    for (std::size_t r = 0; r < data.rows; ++r) {
      for (std::size_t f = 0; f < ctx.features; ++f) row[f] = ctx.columns[f][r];
      pred[r] += m.learning_rate * tree.predict(row);
    }
    m.trees.push_back(std::move(tree));
    record_mse();
  }
  return m;
}

inline TreeEnsemble fit_model(const Dataset& data, const ModelSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::kSingleTree: return fit_single_tree(data, spec, seed);
    case ModelKind::kForest: return fit_forest(data, spec, seed);
    case ModelKind::kBoosted: return fit_boosted(data, spec, seed);
  }
  fail(ErrorCategory::kConfiguration, "unknown model kind");
}

inline double predict_row(const TreeEnsemble& model, std::span<const double> row) {
  switch (model.kind) {
    case ModelKind::kSingleTree:
      return model.trees.front().predict(row);
    case ModelKind::kForest: {
      double s = 0.0;
      for (const auto& t : model.trees) s += t.predict(row);
      return s / static_cast<double>(model.trees.size());
    }
    case ModelKind::kBoosted: {
      double s = 0.0;
      for (const auto& t : model.trees) s += t.predict(row);
      return model.base_prediction + model.learning_rate * s;
    }
  }
  return 0.0;
}

inline std::vector<double> predict(const TreeEnsemble& model, const Dataset& data) {
  if (!model.fitted()) fail(ErrorCategory::kState, "model is not fitted");
  if (data.columns != model.feature_names) {
    fail(ErrorCategory::kSchema, "dataset columns do not match the model's training columns");
  }
  std::vector<double> out(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) out[r] = predict_row(model, data.row(r));
  return out;
}

// --- metrics -----------------------------------------------------------------

inline void check_metric_inputs(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) fail(ErrorCategory::kPrecondition, "metric inputs differ in length");
  if (y_true.empty()) fail(ErrorCategory::kInsufficientData, "metric needs at least one pair");
}

inline double mae(std::span<const double> y_true, std::span<const double> y_pred) {
  check_metric_inputs(y_true, y_pred);
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) s += std::abs(y_true[i] - y_pred[i]);
  return s / static_cast<double>(y_true.size());
}

// Mean absolute percentage error as a fraction (0.223, not 22.3%).
inline double mape(std::span<const double> y_true, std::span<const double> y_pred) {
  check_metric_inputs(y_true, y_pred);
  double s = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 0.0) fail(ErrorCategory::kPrecondition, "MAPE is undefined for a zero target");
    s += std::abs((y_true[i] - y_pred[i]) / y_true[i]);
  }
  return s / static_cast<double>(y_true.size());
}

enum class Metric { kMae, kMape };

inline double evaluate_metric(Metric m, std::span<const double> y_true, std::span<const double> y_pred) {
  return m == Metric::kMae ? mae(y_true, y_pred) : mape(y_true, y_pred);
}

// --- cross-validation ----------------------------------------------------------

struct FoldScore {
  std::size_t fold = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double mae = 0.0;
  double mape = 0.0;
};

struct CvResult {
  std::vector<FoldScore> folds;
  double mean_mae = 0.0;
  double mean_mape = 0.0;
  std::vector<std::size_t> fold_of_row;
};

// Seeded shuffle, then k contiguous folds whose sizes differ by at most one.
inline std::vector<std::size_t> assign_folds(std::size_t rows, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCategory::kPrecondition, "cross-validation needs k >= 2");
  if (rows < k) {
    fail(ErrorCategory::kInsufficientData, "cross-validation needs at least k rows (" + std::to_string(rows) +
                                               " < " + std::to_string(k) + ")");
  }
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, label_hash("cv-shuffle")));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold_of(rows);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = rows / k + (f < rows % k ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[perm[pos++]] = f;
  }
  return fold_of;
}

inline CvResult cross_validate(const Dataset& data, const ModelSpec& spec, std::size_t k, std::uint64_t seed,
                               int workers = 1) {
  validate_spec(spec);
  CvResult result;
  result.fold_of_row = assign_folds(data.rows, k, seed);
  result.folds.resize(k);
  ModelSpec inner = spec;
  // Parallelism goes to folds when requested; trees inside stay serial.
  if (workers > 1) inner.workers = 1;
  parallel_for(k, workers, [&](std::size_t f) {
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < data.rows; ++r) (result.fold_of_row[r] == f ? test : train).push_back(r);
    const auto model = fit_model(data.subset(train), inner, derive_seed(seed, f));
    const auto held = data.subset(test);
    const auto pred = predict(model, held);
    result.folds[f] = {f, train.size(), test.size(), mae(held.y, pred), mape(held.y, pred)};
  });
  for (const auto& f : result.folds) {
    result.mean_mae += f.mae;
    result.mean_mape += f.mape;
  }
  result.mean_mae /= static_cast<double>(k);
  result.mean_mape /= static_cast<double>(k);
  return result;
}

// --- random search -------------------------------------------------------------

struct IntRange {
  long long lo = 0;
  long long hi = 0;
};
struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct SearchSpace {
  IntRange max_depth{3, 8};
  IntRange min_samples_leaf{1, 20};
  IntRange tree_count{50, 300};
  IntRange max_leaves{8, 64};
  RealRange learning_rate{0.03, 0.3};
  RealRange feature_subsample{0.5, 1.0};
  RealRange row_subsample{0.7, 1.0};
};

inline void validate_space(const SearchSpace& s) {
  auto need = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCategory::kConfiguration, std::string("search space: ") + what);
  };
  need(s.max_depth.lo <= s.max_depth.hi, "max_depth range is empty");
  need(s.max_depth.lo >= 0, "max_depth must be >= 0");
  need(s.min_samples_leaf.lo <= s.min_samples_leaf.hi, "min_samples_leaf range is empty");
  need(s.min_samples_leaf.lo >= 1, "min_samples_leaf must be >= 1");
  need(s.tree_count.lo <= s.tree_count.hi, "tree_count range is empty");
  need(s.tree_count.lo >= 1, "tree_count must be >= 1");
  need(s.max_leaves.lo <= s.max_leaves.hi, "max_leaves range is empty");
  need(s.max_leaves.lo >= 2, "max_leaves must be >= 2");
  need(s.learning_rate.lo <= s.learning_rate.hi, "learning_rate range is empty");
  need(s.learning_rate.lo > 0.0 && s.learning_rate.hi <= 1.0, "learning_rate must lie in (0, 1]");
  need(s.feature_subsample.lo <= s.feature_subsample.hi, "feature_subsample range is empty");
  need(s.feature_subsample.lo > 0.0 && s.feature_subsample.hi <= 1.0, "feature_subsample must lie in (0, 1]");
  need(s.row_subsample.lo <= s.row_subsample.hi, "row_subsample range is empty");
  need(s.row_subsample.lo > 0.0 && s.row_subsample.hi <= 1.0, "row_subsample must lie in (0, 1]");
}

// Draws every searchable field uniformly; the rest of `base` is kept.
inline ModelSpec sample_spec(const SearchSpace& s, const ModelSpec& base, std::mt19937_64& rng) {
  auto draw_int = [&](IntRange r) { return std::uniform_int_distribution<long long>(r.lo, r.hi)(rng); };
  auto draw_real = [&](RealRange r) {
    return r.lo == r.hi ? r.lo : std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
  };
  ModelSpec spec = base;
  spec.tree.max_depth = static_cast<int>(draw_int(s.max_depth));
  spec.tree.min_samples_leaf = static_cast<std::size_t>(draw_int(s.min_samples_leaf));
  const auto trees = static_cast<std::size_t>(draw_int(s.tree_count));
  const auto leaves = static_cast<std::size_t>(draw_int(s.max_leaves));
  const double lr = draw_real(s.learning_rate);
  spec.tree.feature_subsample = draw_real(s.feature_subsample);
  const double rows = draw_real(s.row_subsample);
  if (base.kind != ModelKind::kSingleTree) spec.tree_count = trees;
  if (base.tree.growth == Growth::kLeafWise) spec.tree.max_leaves = leaves;
  if (base.kind == ModelKind::kBoosted) {
    spec.learning_rate = lr;
    spec.row_subsample = rows;
  }
  return spec;
}

struct SearchTrial {
  std::size_t index = 0;
  ModelSpec spec;
  double score = 0.0;
};

struct SearchResult {
  ModelSpec best;
  double best_score = 0.0;
  std::size_t best_index = 0;
  std::vector<SearchTrial> trace;
};

using SearchObjective = std::function<double(const ModelSpec&)>;

// Seeded random search; the lowest score wins, earliest trial on ties.
inline SearchResult random_search(const SearchSpace& space, const ModelSpec& base, std::size_t budget,
                                  const SearchObjective& objective, std::uint64_t seed) {
  validate_space(space);
  if (budget < 1) fail(ErrorCategory::kPrecondition, "search budget must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, label_hash("search")));
  SearchResult result;
  for (std::size_t i = 0; i < budget; ++i) {
    SearchTrial trial{i, sample_spec(space, base, rng), 0.0};
    validate_spec(trial.spec);
    trial.score = objective(trial.spec);
    if (i == 0 || trial.score < result.best_score) {
      result.best = trial.spec;
      result.best_score = trial.score;
      result.best_index = i;
    }
    result.trace.push_back(std::move(trial));
  }
  return result;
}

inline SearchObjective cv_mae_objective(const Dataset& data, std::size_t k, std::uint64_t seed, int workers = 1) {
  return [&data, k, seed, workers](const ModelSpec& spec) {
    return cross_validate(data, spec, k, seed, workers).mean_mae;
  };
}

// --- learning curve --------------------------------------------------------------

struct HoldoutSplit {
  std::vector<std::size_t> holdout;
  std::vector<std::size_t> pool;  // training candidates, in shuffled order
};

inline HoldoutSplit holdout_split(std::size_t rows, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    fail(ErrorCategory::kPrecondition, "holdout fraction must be in (0, 1)");
  }
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, label_hash("holdout")));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto h = static_cast<std::size_t>(std::ceil(holdout_fraction * static_cast<double>(rows)));
  if (h == 0 || h >= rows) fail(ErrorCategory::kInsufficientData, "too few rows for a holdout split");
  HoldoutSplit split;
  split.holdout.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(h));
  split.pool.assign(perm.begin() + static_cast<std::ptrdiff_t>(h), perm.end());
  return split;
}

// Trains on the first `train_rows` of the pool and scores MAE on the holdout.
inline double train_validate(const Dataset& data, const ModelSpec& spec, const HoldoutSplit& split,
                             std::size_t train_rows, std::uint64_t seed) {
  if (train_rows == 0) fail(ErrorCategory::kInsufficientData, "training subset is empty");
  std::vector<std::size_t> train(split.pool.begin(), split.pool.begin() + static_cast<std::ptrdiff_t>(train_rows));
  const auto model = fit_model(data.subset(train), spec, derive_seed(seed, label_hash("train")));
  const auto held = data.subset(split.holdout);
  return mae(held.y, predict(model, held));
}

inline double train_validate(const Dataset& data, const ModelSpec& spec, double holdout_fraction,
                             std::uint64_t seed) {
  const auto split = holdout_split(data.rows, holdout_fraction, seed);
  return train_validate(data, spec, split, split.pool.size(), seed);
}

struct CurvePoint {
  double fraction = 0.0;
  std::size_t train_rows = 0;
  double validation_mae = 0.0;
};

// Fixed holdout; nested training prefixes of one shuffled pool.
inline std::vector<CurvePoint> learning_curve(const Dataset& data, const ModelSpec& spec,
                                              std::span<const double> fractions, std::uint64_t seed,
                                              double holdout_fraction = 0.2) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0) || (i > 0 && !(fractions[i] > fractions[i - 1]))) {
      fail(ErrorCategory::kPrecondition, "fractions must be ascending in (0, 1]");
    }
  }
  const auto split = holdout_split(data.rows, holdout_fraction, seed);
  std::vector<CurvePoint> out;
  for (double f : fractions) {
    const auto m = static_cast<std::size_t>(std::floor(f * static_cast<double>(split.pool.size()) + 1e-9));
    if (m == 0) {
      fail(ErrorCategory::kInsufficientData, "fraction " + std::to_string(f) + " leaves no training rows");
    }
    out.push_back({f, m, train_validate(data, spec, split, m, seed)});
  }
  return out;
}

// --- serialization ---------------------------------------------------------------

constexpr int kModelFormatVersion = 1;

inline const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kSingleTree: return "single_tree";
    case ModelKind::kForest: return "forest";
    case ModelKind::kBoosted: return "boosted";
  }
  return "?";
}

inline ModelKind parse_kind(const std::string& s) {
  if (s == "single_tree" || s == "tree") return ModelKind::kSingleTree;
  if (s == "forest") return ModelKind::kForest;
  if (s == "boosted") return ModelKind::kBoosted;
  fail(ErrorCategory::kConfiguration, "unknown model kind '" + s + "'");
}

inline const char* growth_name(Growth g) { return g == Growth::kLeafWise ? "leaf_wise" : "level_wise"; }

inline Growth parse_growth(const std::string& s) {
  if (s == "leaf_wise") return Growth::kLeafWise;
  if (s == "level_wise") return Growth::kLevelWise;
  fail(ErrorCategory::kConfiguration, "unknown growth mode '" + s + "'");
}

inline nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"name", s.name},
          {"kind", kind_name(s.kind)},
          {"growth", growth_name(s.tree.growth)},
          {"max_depth", s.tree.max_depth},
          {"min_samples_leaf", s.tree.min_samples_leaf},
          {"max_leaves", s.tree.max_leaves},
          {"feature_subsample", s.tree.feature_subsample},
          {"tree_count", s.tree_count},
          {"learning_rate", s.learning_rate},
          {"row_subsample", s.row_subsample},
          {"bootstrap", s.bootstrap}};
}

// The four model families used in the experiments.
inline ModelSpec preset_spec(const std::string& name) {
  ModelSpec s;
  s.name = name;
  if (name == "decision_tree") {
    s.kind = ModelKind::kSingleTree;
    s.tree.max_depth = 8;
    s.tree.min_samples_leaf = 5;
  } else if (name == "random_forest") {
    s.kind = ModelKind::kForest;
    s.tree_count = 100;
    s.tree.max_depth = 12;
    s.tree.min_samples_leaf = 2;
    s.tree.feature_subsample = 0.5;
  } else if (name == "xgboost") {
    s.kind = ModelKind::kBoosted;
    s.tree_count = 300;
    s.learning_rate = 0.05;
    s.tree.max_depth = 3;
    s.tree.min_samples_leaf = 30;
  } else if (name == "lgbm") {
    s.kind = ModelKind::kBoosted;
    s.tree.growth = Growth::kLeafWise;
    s.tree_count = 200;
    s.learning_rate = 0.1;
    s.tree.max_leaves = 15;
    s.tree.min_samples_leaf = 10;
  } else {
    fail(ErrorCategory::kConfiguration, "unknown model preset '" + name + "'");
  }
  return s;
}

// A spec object: {"preset": "xgboost", ...overrides} or a full field list.
inline ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s = j.contains("preset") ? preset_spec(j["preset"].get<std::string>()) : ModelSpec{};
    if (j.contains("name")) s.name = j["name"].get<std::string>();
    if (j.contains("kind")) s.kind = parse_kind(j["kind"].get<std::string>());
    if (j.contains("growth")) s.tree.growth = parse_growth(j["growth"].get<std::string>());
    s.tree.max_depth = j.value("max_depth", s.tree.max_depth);
    s.tree.min_samples_leaf = j.value("min_samples_leaf", s.tree.min_samples_leaf);
    s.tree.max_leaves = j.value("max_leaves", s.tree.max_leaves);
    s.tree.feature_subsample = j.value("feature_subsample", s.tree.feature_subsample);
    s.tree_count = j.value("tree_count", s.tree_count);
    s.learning_rate = j.value("learning_rate", s.learning_rate);
    s.row_subsample = j.value("row_subsample", s.row_subsample);
    s.bootstrap = j.value("bootstrap", s.bootstrap);
    validate_spec(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kConfiguration, std::string("bad model spec: ") + e.what());
  }
}

inline nlohmann::json model_to_json(const TreeEnsemble& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   gain = nlohmann::json::array(), left = nlohmann::json::array(),
                   right = nlohmann::json::array(), value = nlohmann::json::array(),
                   count = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      gain.push_back(n.gain);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      count.push_back(n.sample_count);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"gain", gain}, {"left", left},
                     {"right", right}, {"value", value}, {"count", count}});
  }
  return {{"format_version", kModelFormatVersion},
          {"kind", kind_name(m.kind)},
          {"growth", growth_name(m.growth)},
          {"learning_rate", m.learning_rate},
          {"base_prediction", m.base_prediction},
          {"feature_names", m.feature_names},
          {"params", spec_to_json(m.spec)},
          {"trees", trees}};
}

inline TreeEnsemble model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      fail(ErrorCategory::kSchema, "unsupported model format version");
    }
    TreeEnsemble m;
    m.kind = parse_kind(j.at("kind").get<std::string>());
    m.growth = parse_growth(j.at("growth").get<std::string>());
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_prediction = j.at("base_prediction").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.spec = spec_from_json(j.at("params"));
    for (const auto& t : j.at("trees")) {
      Tree tree;
      const auto feature = t.at("feature").get<std::vector<int>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto gain = t.at("gain").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<int>>();
      const auto right = t.at("right").get<std::vector<int>>();
      const auto value = t.at("value").get<std::vector<double>>();
      const auto count = t.at("count").get<std::vector<std::size_t>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || gain.size() != n || left.size() != n || right.size() != n ||
          value.size() != n || count.size() != n) {
        fail(ErrorCategory::kSchema, "tree node arrays have inconsistent lengths");
      }
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode node{feature[i], threshold[i], gain[i], left[i], right[i], value[i], count[i]};
        if (!node.is_leaf()) {
          const auto nodes = static_cast<int>(n);
          if (node.left <= static_cast<int>(i) || node.right <= static_cast<int>(i) || node.left >= nodes ||
              node.right >= nodes || static_cast<std::size_t>(node.feature) >= m.feature_names.size()) {
            fail(ErrorCategory::kSchema, "tree node references are out of range");
          }
        }
        tree.nodes.push_back(node);
      }
      m.trees.push_back(std::move(tree));
    }
    if (m.kind != ModelKind::kBoosted && m.trees.empty()) fail(ErrorCategory::kSchema, "model has no trees");
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kSchema, std::string("bad model file: ") + e.what());
  }
}

}  // namespace noisemap
