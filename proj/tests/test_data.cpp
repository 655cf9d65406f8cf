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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"

using namespace tempsal;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tempsal_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Matrix ramp(std::size_t steps, std::size_t features) {
  Matrix m(steps, features);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < features; ++j) m(t, j) = static_cast<double>(10 * t + j);
  }
  return m;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(SlidingWindows, CountFormula) {
  EXPECT_EQ(sliding_windows(ramp(5, 1), Matrix(5, 1), 3, 1).size(), 2u);
  EXPECT_EQ(sliding_windows(ramp(4, 2), Matrix(4, 1), 3, 1).size(), 1u);
  EXPECT_THROW(sliding_windows(ramp(3, 1), Matrix(3, 1), 3, 1), std::invalid_argument);
  for (std::size_t T = 6; T < 30; ++T) {
    EXPECT_EQ(sliding_windows(ramp(T, 2), Matrix(T, 1), 4, 2).size(), T - 4 - 2 + 1);
  }
}

TEST(SlidingWindows, TargetsFollowTheWindow) {
  const Matrix series = ramp(8, 2);
  Matrix targets(8, 1);
  for (std::size_t t = 0; t < 8; ++t) targets(t, 0) = 100.0 + static_cast<double>(t);
  const auto w = sliding_windows(series, targets, 3, 2);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[1].end_time, 3);
  EXPECT_EQ(w[1].values(0, 0), series(1, 0));
  EXPECT_EQ(w[1].values(1, 2), series(3, 1));
  EXPECT_EQ(w[1].target(0, 0), 104.0);
  EXPECT_EQ(w[1].target(0, 1), 105.0);
}

TEST(SplitChronological, Sizes) {
  auto s = split_sizes(100);
  EXPECT_EQ(s.train, 80u);
  EXPECT_EQ(s.val, 10u);
  EXPECT_EQ(s.test, 10u);
  s = split_sizes(10);
  EXPECT_EQ(s.train, 8u);
  EXPECT_EQ(s.val, 1u);
  EXPECT_EQ(s.test, 1u);
  EXPECT_THROW(split_sizes(2), std::invalid_argument);
  std::mt19937 rng(1);
  std::uniform_int_distribution<std::size_t> n_dist(3, 5000);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = n_dist(rng);
    s = split_sizes(n);
    EXPECT_EQ(s.train + s.val + s.test, n);
    EXPECT_GE(s.train, 1u);
    EXPECT_GE(s.val, 1u);
    EXPECT_GE(s.test, 1u);
  }
}

TEST(SplitChronological, ContiguousAndOrdered) {
  auto windows = sliding_windows(ramp(60, 1), Matrix(60, 1), 5, 1);
  const std::size_t n = windows.size();
  DatasetBundle b;
  split_chronological(windows, b);
  EXPECT_EQ(b.train.size() + b.val.size() + b.test.size(), n);
  EXPECT_LT(b.train.back().end_time, b.val.front().end_time);
  EXPECT_LT(b.val.back().end_time, b.test.front().end_time);
  for (std::size_t i = 1; i < b.train.size(); ++i) EXPECT_EQ(b.train[i].end_time, b.train[i - 1].end_time + 1);
}

TEST(SplitChronological, NoTargetLeakage) {
  SyntheticSpec spec;
  spec.horizons = 4;
  spec.length = 600;
  const auto b = generate_synthetic(spec);
  const auto last_train = b.train.back().end_time;
  for (const auto& w : b.test) {
    EXPECT_GE(w.end_time - static_cast<std::int64_t>(spec.lags) + 1,
              last_train - static_cast<std::int64_t>(spec.lags));
    EXPECT_GT(w.end_time, last_train);
  }
}

TEST(NormalizeDataset, TrainStatisticsOnly) {
  // Feature with mean 10, std 2 on the train block.
  Rng rng(4);
  std::normal_distribution<double> normal(10.0, 2.0);
  Matrix series(400, 2);
  for (std::size_t t = 0; t < 400; ++t) {
    series(t, 0) = normal(rng);
    series(t, 1) = 7.0;  // constant feature
  }
  DatasetBundle b;
  b.features = 2;
  b.lags = 4;
  split_chronological(sliding_windows(series, Matrix(400, 1), 4, 1), b);
  // Shift the test block so its own statistics differ from train.
  for (auto& w : b.test) {
    for (std::size_t l = 0; l < 4; ++l) w.values(0, l) += 50.0;
  }
  const auto stats = compute_feature_stats(b.train);
  const auto n = normalize_dataset(b);
  EXPECT_EQ(n.norm_stats[0].mean, stats[0].mean);
  EXPECT_NEAR(stats[0].mean, 10.0, 0.3);
  EXPECT_NEAR(stats[0].std, 2.0, 0.2);
  // Train post-normalization: mean ~0, std ~1 over the distinct time steps.
  std::vector<double> col;
  for (std::size_t l = 0; l < 4; ++l) col.push_back(n.train.front().values(0, l));
  for (std::size_t i = 1; i < n.train.size(); ++i) col.push_back(n.train[i].values(0, 3));
  const double m = mean_of(col);
  double var = 0.0;
  for (double x : col) var += (x - m) * (x - m);
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(var / static_cast<double>(col.size())), 1.0, 1e-12);
  // Test uses train statistics: its shift survives.
  EXPECT_NEAR(n.test.front().values(0, 0),
              (b.test.front().values(0, 0) - stats[0].mean) / stats[0].std, 1e-12);
  // Constant feature: minus the mean, divisor clamped to 1.
  EXPECT_EQ(n.norm_stats[1].std, 1.0);
  EXPECT_EQ(n.train.front().values(1, 0), 0.0);
}

TEST(NormalizeDataset, EmptyTrainIsAnError) {
  DatasetBundle b;
  EXPECT_THROW(normalize_dataset(b), std::invalid_argument);
}

TEST(Synthetic, NoiselessSinglePlantedCellIsRecovered) {
  SyntheticSpec spec;
  spec.planted = {{1, 3, 1.7}};
  spec.length = 800;
  const auto b = generate_synthetic(spec);
  const auto fit = fit_linear(b, 0.0);
  const std::size_t planted_l = spec.lags - 3;
  EXPECT_NEAR(fit.model.weight(0, 0, 1, planted_l), 1.7, 1e-6);
  AttributionConfig cfg;
  cfg.method = Method::FA;
  const auto map = feature_ablation(fit.model, b.test.front().values, cfg);
  const auto top = rank_cells(map.slice_matrix(0, 0)).front();
  EXPECT_EQ(top.feature, 1u);
  EXPECT_EQ(top.lag, planted_l);
  ASSERT_TRUE(b.ground_truth.has_value());
  EXPECT_EQ((*b.ground_truth)(1, planted_l), 1.0);
}

TEST(Synthetic, PlantedCellsAreTopFaCellsWhenExact) {
  SyntheticSpec spec;
  spec.length = 800;
  const auto b = generate_synthetic(spec);
  const auto fit = fit_linear(b, 0.0);
  AttributionConfig cfg;
  cfg.method = Method::FA;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto map = feature_ablation(fit.model, b.test[i].values, cfg);
    const auto ranked = rank_cells(map.slice_matrix(0, 0));
    for (std::size_t r = 0; r < spec.planted.size(); ++r) {
      EXPECT_EQ((*b.ground_truth)(ranked[r].feature, ranked[r].lag), 1.0) << "instance " << i;
    }
  }
}

TEST(Synthetic, Deterministic) {
  SyntheticSpec spec;
  spec.length = 300;
  spec.noise_std = 0.3;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    EXPECT_EQ(a.train[i].values, b.train[i].values);
    EXPECT_EQ(a.train[i].target, b.train[i].target);
  }
  spec.task = TaskKind::classification;
  const auto c = generate_synthetic(spec);
  const auto d = generate_synthetic(spec);
  for (std::size_t i = 0; i < c.test.size(); ++i) EXPECT_EQ(c.test[i].label, d.test[i].label);
}

TEST(Synthetic, InvalidPlantedLag) {
  SyntheticSpec spec;
  spec.planted = {{0, spec.lags + 1, 1.0}};
  EXPECT_THROW(generate_synthetic(spec), std::invalid_argument);
  spec.planted = {{0, 0, 1.0}};
  EXPECT_THROW(generate_synthetic(spec), std::invalid_argument);
  spec.planted = {};
  EXPECT_THROW(generate_synthetic(spec), std::invalid_argument);
  spec.planted = {{7, 1, 1.0}};
  EXPECT_THROW(generate_synthetic(spec), std::invalid_argument);
}

TEST(Synthetic, ClassificationBalance) {
  SyntheticSpec spec;
  spec.task = TaskKind::classification;
  spec.length = 5000 + spec.lags - 1;  // 5000 windows
  const auto b = generate_synthetic(spec);
  std::size_t pos = 0, n = 0;
  for (const auto* split : {&b.train, &b.val, &b.test}) {
    for (const auto& w : *split) {
      pos += static_cast<std::size_t>(w.label);
      ++n;
    }
  }
  EXPECT_EQ(n, 5000u);
  const double share = static_cast<double>(pos) / static_cast<double>(n);
  EXPECT_GE(share, 0.45);
  EXPECT_LE(share, 0.55);
}

TEST(Synthetic, NoiselessLinearScorerHasPerfectAuc) {
  SyntheticSpec spec;
  spec.task = TaskKind::classification;
  spec.length = 1000;
  const auto b = generate_synthetic(spec);
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& w : b.train) {
    labels.push_back(w.label);
    double s = 0.0;
    for (const auto& p : spec.planted) s += p.weight * w.values(p.feature, spec.lags - p.lag_offset);
    scores.push_back(s);
  }
  EXPECT_EQ(auc_roc(labels, scores), 1.0);
}

TEST(Csv, WriteThenReadIsBitEqual) {
  SyntheticSpec spec;
  spec.length = 200;
  const auto s = synthetic_series(spec);
  const auto path = temp_file("roundtrip.csv");
  write_series_csv(path.string(), s.features, s.names, &s.target);
  const auto loaded = load_csv(path.string(), {"time", s.names, {"target"}, false});
  EXPECT_EQ(loaded.features, s.features);
  for (std::size_t t = 0; t < s.target.size(); ++t) {
    if (std::isnan(s.target[t])) {
      EXPECT_TRUE(std::isnan(loaded.targets(t, 0)));
    } else {
      EXPECT_EQ(loaded.targets(t, 0), s.target[t]);
    }
  }
}

TEST(Csv, MissingTargetColumnIsNamed) {
  const auto path = temp_file("missing.csv");
  write_text(path, "time,a,b\n0,1,2\n1,3,4\n");
  try {
    load_csv(path.string(), {"time", {"a"}, {"load"}, false});
    FAIL() << "expected an error";
  } catch (const CsvError& e) {
    EXPECT_NE(std::string(e.what()).find("'load'"), std::string::npos);
  }
}

TEST(Csv, NonNumericCellReportsCoordinates) {
  const auto path = temp_file("bad.csv");
  write_text(path, "time,a,y\n0,1,2\n1,oops,4\n");
  try {
    load_csv(path.string(), {"time", {"a"}, {"y"}, false});
    FAIL() << "expected an error";
  } catch (const CsvError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 'a'"), std::string::npos) << msg;
  }
}

TEST(Csv, SortsByTimeAndRejectsDuplicates) {
  const auto path = temp_file("order.csv");
  write_text(path, "time,a,y\n2,20,0\n0,0,0\n1,10,0\n");
  const auto loaded = load_csv(path.string(), {"time", {"a"}, {"y"}, false});
  EXPECT_EQ(loaded.features(0, 0), 0.0);
  EXPECT_EQ(loaded.features(2, 0), 20.0);
  write_text(path, "time,a,y\n1,20,0\n0,0,0\n1,10,0\n");
  EXPECT_THROW(load_csv(path.string(), {"time", {"a"}, {"y"}, false}), CsvError);
}

TEST(Csv, CalendarFeatures) {
  const auto path = temp_file("calendar.csv");
  // 2024-01-01 was a Monday; 2024-12-31 23:00 a Tuesday.
  write_text(path, "date,a,y\n2024-01-01 00:00:00,1,0\n2024-12-31 23:00,2,0\n");
  const auto loaded = load_csv(path.string(), {"date", {"a"}, {"y"}, true});
  ASSERT_EQ(loaded.features.cols(), 5u);
  EXPECT_EQ(loaded.feature_names.back(), "weekday");
  EXPECT_DOUBLE_EQ(loaded.features(0, 1), -0.5);  // January
  EXPECT_DOUBLE_EQ(loaded.features(0, 2), -0.5);  // day 1
  EXPECT_DOUBLE_EQ(loaded.features(0, 3), -0.5);  // hour 0
  EXPECT_DOUBLE_EQ(loaded.features(0, 4), -0.5);  // Monday
  EXPECT_DOUBLE_EQ(loaded.features(1, 1), 0.5);   // December
  EXPECT_DOUBLE_EQ(loaded.features(1, 2), 0.5);   // day 31
  EXPECT_DOUBLE_EQ(loaded.features(1, 3), 0.5);   // hour 23
  EXPECT_DOUBLE_EQ(loaded.features(1, 4), 1.0 / 6.0 - 0.5);  // Tuesday
}

TEST(Csv, MissingFile) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", {}), CsvError);
}
