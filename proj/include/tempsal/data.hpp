/*
 * Copyright 2026 The Tempsal Authors.
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

// Dataset construction: sliding windows, chronological splits, standard
// normalization, synthetic series with planted saliency, and CSV ingestion.

#ifndef TEMPSAL_DATA_HPP_
#define TEMPSAL_DATA_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tempsal/core.hpp"

namespace tempsal {

struct FeatureStats {
  double mean = 0.0;
  double std = 1.0;
};

struct DatasetBundle {
  TaskKind task = TaskKind::regression;
  std::size_t features = 0;      // J
  std::size_t lags = 0;          // L
  std::size_t outputs = 1;       // O (number of classes for classification)
  std::size_t horizons = 1;      // H
  std::vector<std::string> feature_names;
  std::vector<WindowInstance> train;
  std::vector<WindowInstance> val;
  std::vector<WindowInstance> test;
  std::vector<FeatureStats> norm_stats;  // empty until normalize_dataset
  std::optional<Matrix> ground_truth;    // [J][L] planted cells, 1 = planted
};

// ---------------------------------------------------------------------------
// Windowing and splits

// series: [T][J] feature rows in time order. targets: [T][O] target rows
// (may have zero columns). The instance ending at time t carries targets
// t+1 .. t+horizon as an [O][horizon] matrix.
inline std::vector<WindowInstance> sliding_windows(const Matrix& series, const Matrix& targets,
                                                   std::size_t lookback, std::size_t horizon,
                                                   const std::vector<std::string>& names = {}) {
  const std::size_t steps = series.rows();
  if (lookback == 0) throw std::invalid_argument("sliding_windows: lookback must be >= 1");
  if (targets.cols() > 0 && targets.rows() != steps) {
    throw std::invalid_argument("sliding_windows: targets must have one row per time step");
  }
  if (steps < lookback + horizon) {
    throw std::invalid_argument("sliding_windows: series of length " + std::to_string(steps) +
                                " is shorter than lookback + horizon = " +
                                std::to_string(lookback + horizon));
  }
  const std::size_t j_count = series.cols();
  const std::size_t n = steps - lookback - horizon + 1;
  std::vector<WindowInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t end = i + lookback - 1;
    WindowInstance w;
    w.values = Matrix(j_count, lookback);
    for (std::size_t l = 0; l < lookback; ++l) {
      for (std::size_t j = 0; j < j_count; ++j) w.values(j, l) = series(i + l, j);
    }
    w.feature_names = names;
    w.end_time = static_cast<std::int64_t>(end);
    if (targets.cols() > 0 && horizon > 0) {
      w.target = Matrix(targets.cols(), horizon);
      for (std::size_t o = 0; o < targets.cols(); ++o) {
        for (std::size_t h = 0; h < horizon; ++h) w.target(o, h) = targets(end + 1 + h, o);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

inline SplitSizes split_sizes(std::size_t n, double train_fraction = 0.8,
                              double val_fraction = 0.1) {
  if (n < 3) throw std::invalid_argument("split_chronological: need at least 3 instances");
  // Small epsilon so that e.g. 0.8 * 10 floors to 8, not 7.
  SplitSizes s;
  s.train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  s.val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n) + 1e-9));
  s.train = std::max<std::size_t>(s.train, 1);
  s.val = std::max<std::size_t>(s.val, 1);
  if (s.train + s.val >= n) s.train = n - s.val - 1;
  s.test = n - s.train - s.val;
  return s;
}

// Contiguous chronological blocks, no shuffling.
inline void split_chronological(std::vector<WindowInstance> instances, DatasetBundle& bundle,
                                double train_fraction = 0.8, double val_fraction = 0.1) {
  const SplitSizes s = split_sizes(instances.size(), train_fraction, val_fraction);
  auto first = std::make_move_iterator(instances.begin());
  bundle.train.assign(first, first + static_cast<std::ptrdiff_t>(s.train));
  bundle.val.assign(first + static_cast<std::ptrdiff_t>(s.train),
                    first + static_cast<std::ptrdiff_t>(s.train + s.val));
  bundle.test.assign(first + static_cast<std::ptrdiff_t>(s.train + s.val),
                     std::make_move_iterator(instances.end()));
}

// ---------------------------------------------------------------------------
// Normalization

// Per-feature statistics over the distinct time steps covered by the train
// windows (each time step counted once).
inline std::vector<FeatureStats> compute_feature_stats(const std::vector<WindowInstance>& train) {
  if (train.empty()) throw std::invalid_argument("normalize_dataset: empty train split");
  const std::size_t j_count = train.front().features();
  const std::size_t lags = train.front().lags();
  std::vector<FeatureStats> stats(j_count);
  std::vector<double> column;
  column.reserve(lags + train.size());
  for (std::size_t j = 0; j < j_count; ++j) {
    column.clear();
    for (std::size_t l = 0; l < lags; ++l) column.push_back(train.front().values(j, l));
    for (std::size_t i = 1; i < train.size(); ++i) column.push_back(train[i].values(j, lags - 1));
    const double n = static_cast<double>(column.size());
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / n);
    if (sd < 1e-12) sd = 1.0;
    stats[j] = {mean, sd};
  }
  return stats;
}

inline void apply_normalization(std::vector<WindowInstance>& split,
                                const std::vector<FeatureStats>& stats) {
  for (auto& w : split) {
    for (std::size_t j = 0; j < w.features(); ++j) {
      for (std::size_t l = 0; l < w.lags(); ++l) {
        w.values(j, l) = (w.values(j, l) - stats[j].mean) / stats[j].std;
      }
    }
  }
}

// Standardizes inputs of every split with statistics from the train split.
inline DatasetBundle normalize_dataset(DatasetBundle bundle) {
  bundle.norm_stats = compute_feature_stats(bundle.train);
  apply_normalization(bundle.train, bundle.norm_stats);
  apply_normalization(bundle.val, bundle.norm_stats);
  apply_normalization(bundle.test, bundle.norm_stats);
  return bundle;
}

// ---------------------------------------------------------------------------
// Synthetic data with planted ground truth

struct PlantedCell {
  std::size_t feature = 0;  // 0-based j
  std::size_t lag_offset = 1;  // d: 1 = most recent step of the window
  double weight = 1.0;
};

struct SyntheticSpec {
  TaskKind task = TaskKind::regression;
  std::size_t features = 3;
  std::size_t lags = 24;
  std::size_t horizons = 1;  // regression only
  std::size_t classes = 2;   // classification only
  std::vector<PlantedCell> planted = {{0, 1, 1.0}, {1, 5, -0.8}, {2, 12, 0.6}};
  double noise_std = 0.0;
  std::size_t length = 2000;  // T
  std::uint64_t seed = 2024;
  double ar_coefficient = 0.7;
};

inline void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.features == 0 || spec.lags == 0) throw std::invalid_argument("synthetic spec: J and L must be >= 1");
  if (spec.planted.empty()) throw std::invalid_argument("synthetic spec: at least one planted cell required");
  if (spec.noise_std < 0.0) throw std::invalid_argument("synthetic spec: noise_std must be >= 0");
  for (const auto& p : spec.planted) {
    if (p.feature >= spec.features) {
      throw std::invalid_argument("synthetic spec: planted feature " + std::to_string(p.feature) +
                                  " out of range");
    }
    if (p.lag_offset < 1 || p.lag_offset > spec.lags) {
      throw std::invalid_argument("synthetic spec: planted lag offset " +
                                  std::to_string(p.lag_offset) + " outside [1, " +
                                  std::to_string(spec.lags) + "]");
    }
  }
  if (spec.task == TaskKind::regression && spec.horizons == 0) {
    throw std::invalid_argument("synthetic spec: horizon must be >= 1");
  }
  if (spec.task == TaskKind::classification && spec.classes != 2) {
    throw std::invalid_argument("synthetic spec: classification generator is binary (classes = 2)");
  }
  const std::size_t needed = spec.lags + (spec.task == TaskKind::regression ? spec.horizons : 0);
  if (spec.length < needed + 2) {
    throw std::invalid_argument("synthetic spec: series length too short for the window");
  }
}

// Unit-variance AR(1) features, series[t][j].
inline Matrix generate_ar_series(const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double phi = spec.ar_coefficient;
  const double innovation = std::sqrt(std::max(0.0, 1.0 - phi * phi));
  Matrix series(spec.length, spec.features);
  for (std::size_t j = 0; j < spec.features; ++j) series(0, j) = normal(rng);
  for (std::size_t t = 1; t < spec.length; ++t) {
    for (std::size_t j = 0; j < spec.features; ++j) {
      series(t, j) = phi * series(t - 1, j) + innovation * normal(rng);
    }
  }
  return series;
}

inline Matrix planted_mask(const SyntheticSpec& spec) {
  Matrix mask(spec.features, spec.lags, 0.0);
  for (const auto& p : spec.planted) mask(p.feature, spec.lags - p.lag_offset) = 1.0;
  return mask;
}

// Noise-free planted signal for the window ending at t.
inline double planted_signal(const SyntheticSpec& spec, const Matrix& series, std::size_t t) {
  double s = 0.0;
  for (const auto& p : spec.planted) s += p.weight * series(t - p.lag_offset + 1, p.feature);
  return s;
}

struct SyntheticSeries {
  Matrix features;   // [T][J]
  std::vector<double> target;  // planted signal (+ noise) per time step; NaN before the first window
  std::vector<std::string> names;
};

namespace detail {
inline std::vector<std::string> default_feature_names(std::size_t j_count) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < j_count; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

inline std::vector<WindowInstance> synthetic_windows(const SyntheticSpec& spec, const Matrix& series,
                                                     const std::vector<std::string>& names) {
  std::vector<WindowInstance> out;
  for (std::size_t end = spec.lags - 1;
       end + (spec.task == TaskKind::regression ? spec.horizons : 0) < spec.length; ++end) {
    WindowInstance w;
    w.values = Matrix(spec.features, spec.lags);
    for (std::size_t l = 0; l < spec.lags; ++l) {
      for (std::size_t j = 0; j < spec.features; ++j) {
        w.values(j, l) = series(end + 1 - spec.lags + l, j);
      }
    }
    w.feature_names = names;
    w.end_time = static_cast<std::int64_t>(end);
    out.push_back(std::move(w));
  }
  return out;
}
}  // namespace detail

// Regression targets: y_{t+tau} = sum_planted w * x_{j, t-d+1} + N(0, noise)
// for every horizon tau, so the planted cells explain every output slice.
inline DatasetBundle generate_synthetic_regression(const SyntheticSpec& spec_in) {
  SyntheticSpec spec = spec_in;
  spec.task = TaskKind::regression;
  validate_synthetic_spec(spec);
  const Matrix series = generate_ar_series(spec);
  const auto names = detail::default_feature_names(spec.features);
  auto windows = detail::synthetic_windows(spec, series, names);
  Rng noise_rng(derive_seed(spec.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& w : windows) {
    const double signal = planted_signal(spec, series, static_cast<std::size_t>(w.end_time));
    w.target = Matrix(1, spec.horizons);
    for (std::size_t h = 0; h < spec.horizons; ++h) {
      const double eps = normal(noise_rng);
      w.target(0, h) = signal + spec.noise_std * eps;
    }
  }
  DatasetBundle bundle;
  bundle.task = TaskKind::regression;
  bundle.features = spec.features;
  bundle.lags = spec.lags;
  bundle.outputs = 1;
  bundle.horizons = spec.horizons;
  bundle.feature_names = names;
  bundle.ground_truth = planted_mask(spec);
  split_chronological(std::move(windows), bundle);
  return bundle;
}

// Binary labels: 1 iff the (noisy) planted score exceeds its median, which
// balances the classes.
inline DatasetBundle generate_synthetic_classification(const SyntheticSpec& spec_in) {
  SyntheticSpec spec = spec_in;
  spec.task = TaskKind::classification;
  validate_synthetic_spec(spec);
  const auto names = detail::default_feature_names(spec.features);
  for (int attempt = 0; attempt < 100; ++attempt) {
    SyntheticSpec trial = spec;
    trial.seed = attempt == 0 ? spec.seed : derive_seed(spec.seed, 1000 + attempt);
    const Matrix series = generate_ar_series(trial);
    auto windows = detail::synthetic_windows(trial, series, names);
    Rng noise_rng(derive_seed(trial.seed, 2));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> scores;
    scores.reserve(windows.size());
    for (const auto& w : windows) {
      scores.push_back(planted_signal(trial, series, static_cast<std::size_t>(w.end_time)) +
                       trial.noise_std * normal(noise_rng));
    }
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                     sorted.end());
    const double threshold = sorted[sorted.size() / 2];
    std::size_t positives = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      windows[i].label = scores[i] > threshold ? 1 : 0;
      positives += static_cast<std::size_t>(windows[i].label);
    }
    if (positives == 0 || positives == windows.size()) continue;
    DatasetBundle bundle;
    bundle.task = TaskKind::classification;
    bundle.features = spec.features;
    bundle.lags = spec.lags;
    bundle.outputs = 2;
    bundle.horizons = 1;
    bundle.feature_names = names;
    bundle.ground_truth = planted_mask(spec);
    split_chronological(std::move(windows), bundle);
    return bundle;
  }
  throw std::runtime_error("synthetic classification: degenerate threshold, one class empty");
}

inline DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
  return spec.task == TaskKind::regression ? generate_synthetic_regression(spec)
                                           : generate_synthetic_classification(spec);
}

// Raw feature series plus a target column for CSV export.
inline SyntheticSeries synthetic_series(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  SyntheticSeries out;
  out.features = generate_ar_series(spec);
  out.names = detail::default_feature_names(spec.features);
  out.target.assign(spec.length, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = spec.lags - 1; t < spec.length; ++t) {
    out.target[t] = planted_signal(spec, out.features, t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvSchema {
  std::string time_column;                 // optional; empty = row order
  std::vector<std::string> feature_columns;  // empty = every other numeric column
  std::vector<std::string> target_columns;
  bool calendar_features = false;
};

struct LoadedSeries {
  Matrix features;  // [T][J] (calendar features appended last when enabled)
  Matrix targets;   // [T][O]
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::vector<double> timestamps;  // seconds since epoch, or the raw numeric time value
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct CalendarTime {
  std::chrono::sys_seconds instant;
  bool valid = false;
};

// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH", "YYYY-MM-DD HH:MM[:SS]" (or 'T').
inline CalendarTime parse_timestamp(std::string_view s) {
  int y = 0, mo = 0, d = 0, hh = 0, mm = 0, ss = 0;
  auto read = [&](std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && p == s.data() + pos + len;
  };
  CalendarTime result;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return result;
  if (!read(0, 4, y) || !read(5, 2, mo) || !read(8, 2, d)) return result;
  if (s.size() > 10) {
    if ((s[10] != ' ' && s[10] != 'T') || !read(11, 2, hh)) return result;
    if (s.size() > 13 && (s[13] != ':' || !read(14, 2, mm))) return result;
    if (s.size() > 16 && (s[16] != ':' || !read(17, 2, ss))) return result;
    if (s.size() > 19) return result;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) return result;
  result.instant = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  result.valid = true;
  return result;
}

// Month, day of month, hour and day of week, each scaled to [-0.5, 0.5].
inline std::array<double, 4> calendar_encoding(double epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds instant{seconds{static_cast<std::int64_t>(std::floor(epoch_seconds))}};
  const sys_days day_point = floor<days>(instant);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{instant - day_point};
  const weekday wd{day_point};
  const double month_v = (static_cast<unsigned>(ymd.month()) - 1) / 11.0 - 0.5;
  const double day_v = (static_cast<unsigned>(ymd.day()) - 1) / 30.0 - 0.5;
  const double hour_v = tod.hours().count() / 23.0 - 0.5;
  const double dow_v = (wd.iso_encoding() - 1) / 6.0 - 0.5;
  return {month_v, day_v, hour_v, dow_v};
}

}  // namespace detail

inline LoadedSeries load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw CsvError("CSV file '" + path + "' is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) column[header[c]] = c;
  auto find = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw CsvError("CSV '" + path + "': missing column '" + name + "'");
    return it->second;
  };
  std::optional<std::size_t> time_col;
  if (!schema.time_column.empty()) time_col = find(schema.time_column);
  std::vector<std::size_t> target_cols;
  for (const auto& t : schema.target_columns) target_cols.push_back(find(t));
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (time_col && c == *time_col) continue;
      feature_cols.push_back(c);
      feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& f : schema.feature_columns) {
      feature_cols.push_back(find(f));
      feature_names.push_back(f);
    }
  }

  struct Row {
    double time;
    std::vector<double> features;
    std::vector<double> targets;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    auto numeric = [&](std::size_t c) {
      if (c >= cells.size()) {
        throw CsvError("CSV '" + path + "': row " + std::to_string(line_no) + " is missing column '" +
                       header[c] + "'");
      }
      auto v = detail::parse_number(cells[c]);
      if (!v) {
        throw CsvError("CSV '" + path + "': non-numeric value '" + cells[c] + "' at row " +
                       std::to_string(line_no) + ", column '" + header[c] + "'");
      }
      return *v;
    };
    Row row;
    if (time_col) {
      if (*time_col >= cells.size()) {
        throw CsvError("CSV '" + path + "': row " + std::to_string(line_no) + " has no time value");
      }
      if (auto v = detail::parse_number(cells[*time_col])) {
        row.time = *v;
      } else {
        auto ts = detail::parse_timestamp(cells[*time_col]);
        if (!ts.valid) {
          throw CsvError("CSV '" + path + "': unparseable time '" + cells[*time_col] + "' at row " +
                         std::to_string(line_no) + ", column '" + header[*time_col] + "'");
        }
        row.time = static_cast<double>(ts.instant.time_since_epoch().count());
      }
    } else {
      row.time = static_cast<double>(rows.size());
    }
    for (auto c : feature_cols) row.features.push_back(numeric(c));
    for (auto c : target_cols) row.targets.push_back(numeric(c));
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.time < b.time; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].time == rows[i - 1].time) {
      throw CsvError("CSV '" + path + "': duplicate timestamp " + std::to_string(rows[i].time));
    }
  }

  LoadedSeries out;
  const std::size_t extra = schema.calendar_features ? 4 : 0;
  out.features = Matrix(rows.size(), feature_cols.size() + extra);
  out.targets = Matrix(rows.size(), target_cols.size());
  out.feature_names = feature_names;
  if (schema.calendar_features) {
    for (const char* n : {"month", "day", "hour", "weekday"}) out.feature_names.emplace_back(n);
  }
  out.target_names = schema.target_columns;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) out.features(t, j) = rows[t].features[j];
    if (schema.calendar_features) {
      const auto cal = detail::calendar_encoding(rows[t].time);
      for (std::size_t k = 0; k < 4; ++k) out.features(t, feature_cols.size() + k) = cal[k];
    }
    for (std::size_t o = 0; o < target_cols.size(); ++o) out.targets(t, o) = rows[t].targets[o];
    out.timestamps.push_back(rows[t].time);
  }
  return out;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Header row, one row per time step, 17 significant digits.
inline void write_series_csv(const std::string& path, const Matrix& series,
                             const std::vector<std::string>& names,
                             const std::vector<double>* target = nullptr,
                             const std::string& target_name = "target") {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write CSV file '" + path + "'");
  out << "time";
  for (const auto& n : names) out << ',' << n;
  if (target) out << ',' << target_name;
  out << '\n';
  for (std::size_t t = 0; t < series.rows(); ++t) {
    out << t;
    for (std::size_t j = 0; j < series.cols(); ++j) out << ',' << format_double(series(t, j));
    if (target) out << ',' << format_double((*target)[t]);
    out << '\n';
  }
  if (!out) throw CsvError("failed writing CSV file '" + path + "'");
}

}  // namespace tempsal

#endif  // TEMPSAL_DATA_HPP_
