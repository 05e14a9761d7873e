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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisemap/error.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

// Quantile by linear interpolation at position (n-1)p of the sorted values.
inline double quantile_linear(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Dense row-major feature matrix with a regression target.
struct Dataset {
  std::vector<std::string> columns;
  std::size_t rows = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> row_ids;

  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return x[r * columns.size() + c]; }
  double& at(std::size_t r, std::size_t c) { return x[r * columns.size() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {x.data() + r * columns.size(), columns.size()};
  }

  std::optional<std::size_t> find_column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    return std::nullopt;
  }

  void append_row(std::span<const double> values, double target, std::string id = {}) {
    if (values.size() != columns.size()) fail(ErrorCategory::kSchema, "row width mismatch");
    x.insert(x.end(), values.begin(), values.end());
    y.push_back(target);
    row_ids.push_back(id.empty() ? std::to_string(rows) : std::move(id));
    ++rows;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.columns = columns;
    out.x.reserve(indices.size() * cols());
    for (auto r : indices) {
      auto values = row(r);
      out.x.insert(out.x.end(), values.begin(), values.end());
      out.y.push_back(y[r]);
      out.row_ids.push_back(r < row_ids.size() ? row_ids[r] : std::to_string(r));
    }
    out.rows = indices.size();
    return out;
  }

  Dataset drop_columns(const std::vector<std::string>& names) const {
    std::vector<std::size_t> keep;
    Dataset out;
    for (std::size_t c = 0; c < cols(); ++c) {
      bool drop = false;
      for (const auto& n : names) drop = drop || columns[c] == n;
      if (!drop) {
        keep.push_back(c);
        out.columns.push_back(columns[c]);
      }
    }
    out.rows = rows;
    out.y = y;
    out.row_ids = row_ids;
    out.x.reserve(rows * keep.size());
    for (std::size_t r = 0; r < rows; ++r) {
      for (auto c : keep) out.x.push_back(at(r, c));
    }
    return out;
  }
};

constexpr const char* kTargetColumn = "price";
constexpr const char* kIdColumn = "id";

// Layout: id, feature columns..., price.
inline std::string format_dataset(const Dataset& d) {
  std::string out = kIdColumn;
  for (const auto& c : d.columns) out += ',' + c;
  out += ',';
  out += kTargetColumn;
  out += '\n';
  for (std::size_t r = 0; r < d.rows; ++r) {
    out += r < d.row_ids.size() ? d.row_ids[r] : std::to_string(r);
    for (std::size_t c = 0; c < d.cols(); ++c) out += ',' + format_double(d.at(r, c));
    out += ',' + format_double(d.y[r]) + '\n';
  }
  return out;
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  const Table table = read_table(path);
  if (table.header.size() < 3 || table.header.front() != kIdColumn ||
      table.header.back() != kTargetColumn) {
    fail(ErrorCategory::kSchema, path.string() + ": dataset needs 'id' first and 'price' last");
  }
  Dataset d;
  d.columns.assign(table.header.begin() + 1, table.header.end() - 1);
  std::vector<double> values(d.cols());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) values[c] = table.number(r, c + 1);
    d.append_row(values, table.number(r, table.header.size() - 1), table.rows[r][0]);
  }
  return d;
}

}  // namespace noisemap
