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

// Property listings: parsing, outlier filtering, imputation and feature
// encoding.
//
// Quartiles use linear interpolation between order statistics (position
// (n-1)p, the usual spreadsheet/numpy default). Other quartile conventions
// move IQR bounds slightly, which can change which borderline rows survive.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "noisemap/dataset.hpp"
#include "noisemap/error.hpp"
#include "noisemap/table.hpp"

namespace noisemap {

struct PropertyRecord {
  std::string id;
  double size_m2 = 0.0;
  int number_of_rooms = 0;
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<std::string> energy_efficiency;
  std::optional<std::int32_t> construction_date;  // days since 1970-01-01
  std::optional<std::string> sub_type;
  std::optional<std::string> floor_level;
  std::optional<std::string> basic_heating_type;
  std::optional<std::string> door_frame_type;
  std::optional<double> price_eur;
  // Appended noise features (noise_day, noise_night, noise_combined), in
  // column order.
  std::vector<std::pair<std::string, double>> noise;

  friend bool operator==(const PropertyRecord&, const PropertyRecord&) = default;

  std::optional<double> noise_value(const std::string& name) const {
    for (const auto& [k, v] : noise) {
      if (k == name) return v;
    }
    return std::nullopt;
  }
};

namespace column {
inline constexpr const char* kId = "Id";
inline constexpr const char* kSize = "Size";
inline constexpr const char* kRooms = "NumberOfRooms";
inline constexpr const char* kLatitude = "Latitude";
inline constexpr const char* kLongitude = "Longitude";
inline constexpr const char* kEnergy = "EnergyEfficiencyId";
inline constexpr const char* kConstruction = "ConstructionDate";
inline constexpr const char* kSubType = "SubTypeId";
inline constexpr const char* kFloor = "FloorLevelId";
inline constexpr const char* kHeating = "BasicHeatingTypeId";
inline constexpr const char* kDoorFrame = "DoorFrameTypeId";
inline constexpr const char* kPrice = "Price";
}  // namespace column

// --- dates -------------------------------------------------------------------

inline std::optional<std::int32_t> parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_int(std::string_view(text).substr(0, 4));
  const auto m = parse_int(std::string_view(text).substr(5, 2));
  const auto d = parse_int(std::string_view(text).substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)),
                                        std::chrono::month(static_cast<unsigned>(*m)),
                                        std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  return static_cast<std::int32_t>(std::chrono::sys_days(ymd).time_since_epoch().count());
}

inline std::string format_date(std::int32_t epoch_days) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days(std::chrono::days(epoch_days))};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// Category codes compare numerically when both parse as integers, otherwise
// lexicographically; numbers sort before text.
inline bool category_less(const std::string& l, const std::string& r) {
  const auto li = parse_int(l);
  const auto ri = parse_int(r);
  if (li && ri) return *li < *ri;
  if (li != ri && (li || ri)) return static_cast<bool>(li);
  return l < r;
}

// --- files -------------------------------------------------------------------

inline const std::vector<std::string>& property_columns() {
  static const std::vector<std::string> cols{
      column::kId,     column::kSize,         column::kRooms,   column::kLatitude,
      column::kLongitude, column::kEnergy,    column::kConstruction, column::kSubType,
      column::kFloor,  column::kHeating,      column::kDoorFrame, column::kPrice};
  return cols;
}

inline std::vector<PropertyRecord> parse_properties(const Table& table, const std::string& source) {
  std::vector<std::size_t> idx;
  for (const auto& name : property_columns()) {
    if (name == column::kId) continue;
    idx.push_back(table.column(name));
  }
  const auto id_col = table.find_column(column::kId);
  std::vector<std::size_t> noise_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].rfind("noise_", 0) == 0) noise_cols.push_back(c);
  }

  std::vector<PropertyRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto where = [&](const char* col) {
      return source + " row " + std::to_string(r + 1) + " column " + col;
    };
    auto text = [&](std::size_t c) -> std::optional<std::string> {
      if (row[c].empty()) return std::nullopt;
      return row[c];
    };
    auto required = [&](std::size_t c, const char* name) {
      if (row[c].empty()) fail(ErrorCategory::kSchema, where(name) + ": value required");
      return table.number(r, c);
    };
    PropertyRecord p;
    p.id = id_col ? row[*id_col] : std::to_string(r + 1);
    p.size_m2 = required(idx[0], column::kSize);
    const double rooms = required(idx[1], column::kRooms);
    if (rooms != std::floor(rooms)) fail(ErrorCategory::kSchema, where(column::kRooms) + ": not an integer");
    p.number_of_rooms = static_cast<int>(rooms);
    p.latitude = required(idx[2], column::kLatitude);
    p.longitude = required(idx[3], column::kLongitude);
    p.energy_efficiency = text(idx[4]);
    if (auto d = text(idx[5])) {
      p.construction_date = parse_date(*d);
      if (!p.construction_date) fail(ErrorCategory::kSchema, where(column::kConstruction) + ": expected YYYY-MM-DD");
    }
    p.sub_type = text(idx[6]);
    p.floor_level = text(idx[7]);
    p.basic_heating_type = text(idx[8]);
    p.door_frame_type = text(idx[9]);
    if (!row[idx[10]].empty()) p.price_eur = table.number(r, idx[10]);

    if (!(p.size_m2 > 0)) fail(ErrorCategory::kSchema, where(column::kSize) + ": must be positive");
    if (p.number_of_rooms < 0) fail(ErrorCategory::kSchema, where(column::kRooms) + ": must be >= 0");
    if (p.latitude < -90 || p.latitude > 90 || p.longitude < -180 || p.longitude > 180) {
      fail(ErrorCategory::kSchema, where(column::kLatitude) + ": coordinates out of range");
    }
    if (p.price_eur && !(*p.price_eur > 0)) fail(ErrorCategory::kSchema, where(column::kPrice) + ": must be positive");
    for (auto c : noise_cols) {
      if (!row[c].empty()) p.noise.emplace_back(table.header[c], table.number(r, c));
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<PropertyRecord> read_properties(const std::filesystem::path& path) {
  return parse_properties(read_table(path), path.string());
}

inline std::string format_properties(std::span<const PropertyRecord> records) {
  std::vector<std::string> noise_names;
  for (const auto& p : records) {
    for (const auto& [k, v] : p.noise) {
      if (std::find(noise_names.begin(), noise_names.end(), k) == noise_names.end()) {
        noise_names.push_back(k);
      }
    }
  }
  auto header = property_columns();
  header.insert(header.end(), noise_names.begin(), noise_names.end());
  std::string out = join_fields(header) + '\n';
  for (const auto& p : records) {
    std::vector<std::string> f{p.id,
                               format_double(p.size_m2),
                               std::to_string(p.number_of_rooms),
                               format_double(p.latitude),
                               format_double(p.longitude),
                               p.energy_efficiency.value_or(""),
                               p.construction_date ? format_date(*p.construction_date) : "",
                               p.sub_type.value_or(""),
                               p.floor_level.value_or(""),
                               p.basic_heating_type.value_or(""),
                               p.door_frame_type.value_or(""),
                               p.price_eur ? format_double(*p.price_eur) : ""};
    for (const auto& n : noise_names) {
      const auto v = p.noise_value(n);
      f.push_back(v ? format_double(*v) : "");
    }
    out += join_fields(f) + '\n';
  }
  return out;
}

// --- outliers ----------------------------------------------------------------

struct IqrBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline IqrBounds iqr_bounds(std::span<const double> values, double k = 1.5) {
  if (values.size() < 4) {
    fail(ErrorCategory::kInsufficientData, "IQR needs at least 4 values, got " + std::to_string(values.size()));
  }
  if (!(k > 0)) fail(ErrorCategory::kConfiguration, "IQR multiplier must be positive");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_linear(sorted, 0.25);
  const double q3 = quantile_linear(sorted, 0.75);
  const double iqr = q3 - q1;
  return {q1 - k * iqr, q3 + k * iqr};
}

inline std::optional<double> numeric_column(const PropertyRecord& p, const std::string& name) {
  if (name == column::kSize) return p.size_m2;
  if (name == column::kRooms) return static_cast<double>(p.number_of_rooms);
  if (name == column::kPrice) return p.price_eur;
  if (name == column::kLatitude) return p.latitude;
  if (name == column::kLongitude) return p.longitude;
  if (name.rfind("noise_", 0) == 0) return p.noise_value(name);
  fail(ErrorCategory::kConfiguration, "no numeric column '" + name + "' for outlier rules");
}

// Either derived from the data by the IQR rule (`iqr_k` set) or fixed.
struct OutlierRule {
  std::string column;
  std::optional<double> iqr_k;
  std::optional<double> lower;
  std::optional<double> upper;
};

// A rule resolved to concrete inclusive bounds.
struct ColumnBounds {
  std::string column;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

inline std::vector<ColumnBounds> resolve_bounds(std::span<const PropertyRecord> records,
                                                std::span<const OutlierRule> rules) {
  std::vector<ColumnBounds> out;
  for (const auto& rule : rules) {
    ColumnBounds b{rule.column};
    if (rule.iqr_k) {
      std::vector<double> values;
      for (const auto& p : records) {
        if (auto v = numeric_column(p, rule.column)) values.push_back(*v);
      }
      const auto iqr = iqr_bounds(values, *rule.iqr_k);
      b.lower = iqr.lower;
      b.upper = iqr.upper;
    }
    if (rule.lower) b.lower = rule.iqr_k ? std::max(b.lower, *rule.lower) : *rule.lower;
    if (rule.upper) b.upper = rule.iqr_k ? std::min(b.upper, *rule.upper) : *rule.upper;
    out.push_back(b);
  }
  return out;
}

struct FilterReport {
  std::size_t rows_in = 0;
  std::size_t rows_out = 0;
  // Rows failing each rule (a row may fail several).
  std::vector<std::pair<std::string, std::size_t>> violations;
};

// Keeps rows with every bounded column inside [lower, upper]. A missing
// value fails its rule. With fixed bounds the filter is idempotent.
inline std::vector<PropertyRecord> filter_outliers(std::span<const PropertyRecord> records,
                                                   std::span<const ColumnBounds> bounds,
                                                   FilterReport* report = nullptr) {
  std::vector<std::size_t> violations(bounds.size(), 0);
  std::vector<PropertyRecord> out;
  for (const auto& p : records) {
    bool keep = true;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      const auto v = numeric_column(p, bounds[i].column);
      if (!v || *v < bounds[i].lower || *v > bounds[i].upper) {
        ++violations[i];
        keep = false;
      }
    }
    if (keep) out.push_back(p);
  }
  if (report) {
    report->rows_in = records.size();
    report->rows_out = out.size();
    report->violations.clear();
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      report->violations.emplace_back(bounds[i].column, violations[i]);
    }
  }
  return out;
}

// --- imputation --------------------------------------------------------------

// Ordered category lists for the ordinal features. Empty means "sorted
// observed values".
struct OrdinalOrders {
  std::vector<std::string> energy_efficiency;
  std::vector<std::string> floor_level;
};

namespace detail {

inline std::vector<std::string> observed_categories(
    std::span<const PropertyRecord> records,
    std::optional<std::string> PropertyRecord::*field) {
  std::vector<std::string> cats;
  for (const auto& p : records) {
    if (const auto& v = p.*field) cats.push_back(*v);
  }
  std::sort(cats.begin(), cats.end(), category_less);
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  return cats;
}

inline std::size_t code_of(const std::vector<std::string>& order, const std::string& value,
                           const char* feature) {
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] == value) return i;
  }
  fail(ErrorCategory::kUnseenCategory,
       std::string(feature) + ": category '" + value + "' is not in the known categories");
}

}  // namespace detail

struct ImputeReport {
  std::vector<std::pair<std::string, std::size_t>> filled;
};

// Fills missing values per column: construction date by the mean (in epoch
// days, rounded to the nearest day); nominal categories by the mode (ties go
// to the lowest code); floor level by the rounded mean of its ordinal codes.
// Size, rooms, coordinates and energy class are never imputed.
inline std::vector<PropertyRecord> impute(std::span<const PropertyRecord> records,
                                          const OrdinalOrders& orders = {},
                                          ImputeReport* report = nullptr) {
  std::vector<PropertyRecord> out(records.begin(), records.end());
  if (report) report->filled.clear();
  if (out.empty()) return out;

  auto note = [&](const char* name, std::size_t n) {
    if (report) report->filled.emplace_back(name, n);
  };

  // ConstructionDate: mean.
  {
    std::size_t missing = 0;
    long double sum = 0;
    std::size_t n = 0;
    for (const auto& p : out) {
      if (p.construction_date) {
        sum += *p.construction_date;
        ++n;
      } else {
        ++missing;
      }
    }
    if (missing > 0) {
      if (n == 0) fail(ErrorCategory::kInsufficientData, "ConstructionDate is entirely missing");
      const auto mean = static_cast<std::int32_t>(std::llround(static_cast<double>(sum / n)));
      for (auto& p : out) {
        if (!p.construction_date) p.construction_date = mean;
      }
    }
    note(column::kConstruction, missing);
  }

  // Nominal columns: mode.
  using Field = std::optional<std::string> PropertyRecord::*;
  const std::pair<const char*, Field> nominal[] = {{column::kSubType, &PropertyRecord::sub_type},
                                                   {column::kHeating, &PropertyRecord::basic_heating_type},
                                                   {column::kDoorFrame, &PropertyRecord::door_frame_type}};
  for (const auto& [name, field] : nominal) {
    std::size_t missing = 0;
    std::map<std::string, std::size_t, decltype(&category_less)> counts(&category_less);
    for (const auto& p : out) {
      if (const auto& v = p.*field) {
        ++counts[*v];
      } else {
        ++missing;
      }
    }
    if (missing > 0) {
      if (counts.empty()) fail(ErrorCategory::kInsufficientData, std::string(name) + " is entirely missing");
      std::string mode;
      std::size_t best = 0;
      for (const auto& [cat, n] : counts) {  // ascending code order
        if (n > best) {
          best = n;
          mode = cat;
        }
      }
      for (auto& p : out) {
        if (!(p.*field)) p.*field = mode;
      }
    }
    note(name, missing);
  }

  // FloorLevelId: rounded mean of ordinal codes.
  {
    const auto order = orders.floor_level.empty()
                           ? detail::observed_categories(out, &PropertyRecord::floor_level)
                           : orders.floor_level;
    std::size_t missing = 0;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : out) {
      if (p.floor_level) {
        sum += static_cast<double>(detail::code_of(order, *p.floor_level, column::kFloor));
        ++n;
      } else {
        ++missing;
      }
    }
    if (missing > 0) {
      if (n == 0) fail(ErrorCategory::kInsufficientData, "FloorLevelId is entirely missing");
      const auto code = static_cast<std::size_t>(std::lround(sum / static_cast<double>(n)));
      for (auto& p : out) {
        if (!p.floor_level) p.floor_level = order[code];
      }
    }
    note(column::kFloor, missing);
  }
  return out;
}

// --- encoding ----------------------------------------------------------------

enum class NominalEncoding { kOneHot, kBinary };

// Category maps learned from the training records. Numeric columns pass
// through; ordinal features become incremental codes; nominal features are
// expanded to `<feature>_<category>` indicator columns (or `<feature>_bin<j>`
// bit columns under binary encoding).
class PropertyEncoder {
 public:
  struct NominalFeature {
    std::string name;
    std::optional<std::string> PropertyRecord::*field;
    std::vector<std::string> categories;
  };

  PropertyEncoder(std::span<const PropertyRecord> records, const OrdinalOrders& orders = {},
                  NominalEncoding mode = NominalEncoding::kOneHot)
      : mode_(mode) {
    energy_order_ = orders.energy_efficiency.empty()
                        ? detail::observed_categories(records, &PropertyRecord::energy_efficiency)
                        : orders.energy_efficiency;
    floor_order_ = orders.floor_level.empty()
                       ? detail::observed_categories(records, &PropertyRecord::floor_level)
                       : orders.floor_level;
    nominal_ = {{column::kSubType, &PropertyRecord::sub_type, {}},
                {column::kHeating, &PropertyRecord::basic_heating_type, {}},
                {column::kDoorFrame, &PropertyRecord::door_frame_type, {}}};
    for (auto& f : nominal_) f.categories = detail::observed_categories(records, f.field);
    for (const auto& p : records) {
      for (const auto& [k, v] : p.noise) {
        if (std::find(noise_columns_.begin(), noise_columns_.end(), k) == noise_columns_.end()) {
          noise_columns_.push_back(k);
        }
      }
    }
    build_columns();
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::string>& energy_order() const { return energy_order_; }
  const std::vector<std::string>& floor_order() const { return floor_order_; }
  const std::vector<NominalFeature>& nominal_features() const { return nominal_; }

  static std::size_t binary_width(std::size_t categories) {
    std::size_t bits = 1;
    while ((std::size_t{1} << bits) <= categories) ++bits;
    return bits;
  }

  Dataset transform(std::span<const PropertyRecord> records) const {
    Dataset d;
    d.columns = columns_;
    std::vector<double> row;
    for (const auto& p : records) {
      row.clear();
      auto need = [&](const auto& opt, const char* name) -> const auto& {
        if (!opt) {
          fail(ErrorCategory::kSchema, "property " + p.id + ": " + name + " is missing (impute first)");
        }
        return *opt;
      };
      row.push_back(p.size_m2);
      row.push_back(p.number_of_rooms);
      row.push_back(p.latitude);
      row.push_back(p.longitude);
      row.push_back(static_cast<double>(need(p.construction_date, column::kConstruction)));
      row.push_back(static_cast<double>(
          detail::code_of(energy_order_, need(p.energy_efficiency, column::kEnergy), column::kEnergy)));
      row.push_back(static_cast<double>(
          detail::code_of(floor_order_, need(p.floor_level, column::kFloor), column::kFloor)));
      for (const auto& f : nominal_) {
        const auto code = detail::code_of(f.categories, need(p.*(f.field), f.name.c_str()), f.name.c_str());
        if (mode_ == NominalEncoding::kOneHot) {
          for (std::size_t c = 0; c < f.categories.size(); ++c) row.push_back(c == code ? 1.0 : 0.0);
        } else {
          const std::size_t bits = binary_width(f.categories.size());
          const std::size_t value = code + 1;
          for (std::size_t b = bits; b-- > 0;) row.push_back(((value >> b) & 1U) ? 1.0 : 0.0);
        }
      }
      for (const auto& n : noise_columns_) {
        const auto v = p.noise_value(n);
        if (!v) fail(ErrorCategory::kSchema, "property " + p.id + ": " + n + " is missing");
        row.push_back(*v);
      }
      if (!p.price_eur) fail(ErrorCategory::kSchema, "property " + p.id + ": Price is missing");
      d.append_row(row, *p.price_eur, p.id);
    }
    return d;
  }

  // Recovers a nominal category from an encoded row.
  std::string decode_nominal(std::span<const double> row, const std::string& feature) const {
    for (const auto& f : nominal_) {
      if (f.name != feature) continue;
      const std::size_t start = first_column(f.name);
      if (mode_ == NominalEncoding::kOneHot) {
        for (std::size_t c = 0; c < f.categories.size(); ++c) {
          if (row[start + c] == 1.0) return f.categories[c];
        }
      } else {
        const std::size_t bits = binary_width(f.categories.size());
        std::size_t value = 0;
        for (std::size_t b = 0; b < bits; ++b) value = (value << 1) | (row[start + b] == 1.0 ? 1U : 0U);
        if (value >= 1 && value <= f.categories.size()) return f.categories[value - 1];
      }
      fail(ErrorCategory::kSchema, feature + ": row does not encode a category");
    }
    fail(ErrorCategory::kSchema, "unknown nominal feature " + feature);
  }

  std::string decode_ordinal(std::span<const double> row, const std::string& feature) const {
    const auto& order = feature == column::kEnergy ? energy_order_ : floor_order_;
    const double code = row[first_column(feature)];
    if (code < 0 || code >= static_cast<double>(order.size()) || code != std::floor(code)) {
      fail(ErrorCategory::kSchema, feature + ": invalid ordinal code");
    }
    return order[static_cast<std::size_t>(code)];
  }

 private:
  std::size_t first_column(const std::string& feature) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (columns_[i] == feature || columns_[i].rfind(feature + "_", 0) == 0) return i;
    }
    fail(ErrorCategory::kSchema, "no encoded column for " + feature);
  }

  void build_columns() {
    columns_ = {column::kSize, column::kRooms, column::kLatitude, column::kLongitude,
                column::kConstruction, column::kEnergy, column::kFloor};
    for (const auto& f : nominal_) {
      if (mode_ == NominalEncoding::kOneHot) {
        for (const auto& c : f.categories) columns_.push_back(f.name + "_" + c);
      } else {
        const std::size_t bits = binary_width(f.categories.size());
        for (std::size_t b = 0; b < bits; ++b) columns_.push_back(f.name + "_bin" + std::to_string(b));
      }
    }
    columns_.insert(columns_.end(), noise_columns_.begin(), noise_columns_.end());
  }

  NominalEncoding mode_;
  std::vector<std::string> energy_order_;
  std::vector<std::string> floor_order_;
  std::vector<NominalFeature> nominal_;
  std::vector<std::string> noise_columns_;
  std::vector<std::string> columns_;
};

inline Dataset encode(std::span<const PropertyRecord> records, const OrdinalOrders& orders = {},
                      NominalEncoding mode = NominalEncoding::kOneHot) {
  return PropertyEncoder(records, orders, mode).transform(records);
}

// --- rules file --------------------------------------------------------------

// Preparation settings, read from JSON:
//   {"outliers": [{"column": "NumberOfRooms", "method": "iqr", "k": 1.5},
//                 {"column": "Price", "method": "fixed",
//                  "lower": 10000, "upper": 500000}],
//    "ordinal_orders": {"EnergyEfficiencyId": [...], "FloorLevelId": [...]},
//    "nominal_encoding": "one_hot" | "binary"}
struct PrepRules {
  std::vector<OutlierRule> outliers;
  OrdinalOrders orders;
  NominalEncoding encoding = NominalEncoding::kOneHot;
};

inline PrepRules default_prep_rules() {
  PrepRules r;
  r.outliers = {{column::kRooms, 1.5, std::nullopt, std::nullopt},
                {column::kSize, 1.5, std::nullopt, std::nullopt},
                {column::kPrice, std::nullopt, 10000.0, 500000.0}};
  return r;
}

inline PrepRules prep_rules_from_json(const nlohmann::json& j) {
  PrepRules r;
  try {
    for (const auto& o : j.value("outliers", nlohmann::json::array())) {
      OutlierRule rule;
      rule.column = o.at("column").get<std::string>();
      const auto method = o.value("method", std::string("fixed"));
      if (method == "iqr") {
        rule.iqr_k = o.value("k", 1.5);
      } else if (method != "fixed") {
        fail(ErrorCategory::kConfiguration, "outlier method must be 'iqr' or 'fixed'");
      }
      if (o.contains("lower")) rule.lower = o["lower"].get<double>();
      if (o.contains("upper")) rule.upper = o["upper"].get<double>();
      r.outliers.push_back(rule);
    }
    if (j.contains("ordinal_orders")) {
      const auto& oo = j["ordinal_orders"];
      r.orders.energy_efficiency = oo.value(column::kEnergy, std::vector<std::string>{});
      r.orders.floor_level = oo.value(column::kFloor, std::vector<std::string>{});
    }
    const auto enc = j.value("nominal_encoding", std::string("one_hot"));
    if (enc == "binary") {
      r.encoding = NominalEncoding::kBinary;
    } else if (enc != "one_hot") {
      fail(ErrorCategory::kConfiguration, "nominal_encoding must be 'one_hot' or 'binary'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::kConfiguration, std::string("bad preparation rules: ") + e.what());
  }
  return r;
}

struct PrepReport {
  std::vector<ColumnBounds> bounds;
  FilterReport filter;
  ImputeReport impute;
};

// Outlier filter, then imputation, then encoding. IQR rules are resolved on
// the unfiltered records.
inline Dataset prepare(std::span<const PropertyRecord> records, const PrepRules& rules,
                       PrepReport* report = nullptr, std::vector<PropertyRecord>* cleaned = nullptr) {
  PrepReport local;
  auto& r = report ? *report : local;
  r.bounds = resolve_bounds(records, rules.outliers);
  const auto kept = filter_outliers(records, r.bounds, &r.filter);
  if (kept.empty()) fail(ErrorCategory::kInsufficientData, "no properties survive the outlier filter");
  auto filled = impute(kept, rules.orders, &r.impute);
  auto data = encode(filled, rules.orders, rules.encoding);
  if (cleaned) *cleaned = std::move(filled);
  return data;
}

}  // namespace noisemap
