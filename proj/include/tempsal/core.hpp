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

// Domain types shared by every tempsal module: dense matrices, window
// instances, saliency tensors, baselines, distances and normalization.

#ifndef TEMPSAL_CORE_HPP_
#define TEMPSAL_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tempsal {

enum class TaskKind { classification, regression };

inline std::string_view task_name(TaskKind task) {
  return task == TaskKind::classification ? "classification" : "regression";
}

inline TaskKind parse_task(std::string_view name) {
  if (name == "classification") return TaskKind::classification;
  if (name == "regression") return TaskKind::regression;
  throw std::invalid_argument("unknown task kind '" + std::string(name) +
                              "' (expected classification or regression)");
}

// Dense row-major matrix of doubles. Window inputs are stored as
// rows = features (J), cols = lags (L), lag index 0 being the oldest step.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw std::invalid_argument("ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("matrix data size does not match shape");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// One look-back slice X_t plus whatever supervision the dataset attaches.
struct WindowInstance {
  Matrix values;                        // [J][L], normalized units
  std::vector<std::string> feature_names;
  std::int64_t end_time = 0;
  Matrix target;                        // [O][H] for regression, empty otherwise
  int label = -1;                       // class index for classification

  std::size_t features() const { return values.rows(); }
  std::size_t lags() const { return values.cols(); }
};

struct PredictionOutput {
  Matrix values;  // [O][H]
  TaskKind task = TaskKind::regression;
};

struct MapShape {
  std::size_t outputs = 0;
  std::size_t horizons = 0;
  std::size_t features = 0;
  std::size_t lags = 0;

  std::size_t slices() const { return outputs * horizons; }
  std::size_t cells() const { return features * lags; }
  std::size_t size() const { return slices() * cells(); }
  friend bool operator==(const MapShape&, const MapShape&) = default;
};

// Importance tensor phi[o][h][j][l]. Slice (o,h) is a contiguous J*L block.
class SaliencyMap {
 public:
  SaliencyMap() = default;
  SaliencyMap(MapShape shape, std::string method)
      : shape_(shape), scores_(shape.size(), 0.0), method_(std::move(method)) {}

  const MapShape& shape() const { return shape_; }
  const std::string& method() const { return method_; }
  void set_method(std::string name) { method_ = std::move(name); }

  double& operator()(std::size_t o, std::size_t h, std::size_t j, std::size_t l) {
    return scores_[index(o, h, j, l)];
  }
  double operator()(std::size_t o, std::size_t h, std::size_t j, std::size_t l) const {
    return scores_[index(o, h, j, l)];
  }

  std::span<double> scores() { return scores_; }
  std::span<const double> scores() const { return scores_; }
  std::span<double> slice(std::size_t flat_output) {
    return std::span<double>(scores_).subspan(flat_output * shape_.cells(), shape_.cells());
  }
  std::span<const double> slice(std::size_t flat_output) const {
    return std::span<const double>(scores_).subspan(flat_output * shape_.cells(),
                                                    shape_.cells());
  }
  Matrix slice_matrix(std::size_t o, std::size_t h) const {
    auto s = slice(o * shape_.horizons + h);
    return Matrix(shape_.features, shape_.lags, std::vector<double>(s.begin(), s.end()));
  }

  bool all_finite() const {
    return std::all_of(scores_.begin(), scores_.end(), [](double v) { return std::isfinite(v); });
  }
  bool all_non_negative() const {
    return std::all_of(scores_.begin(), scores_.end(), [](double v) { return v >= 0.0; });
  }

 private:
  std::size_t index(std::size_t o, std::size_t h, std::size_t j, std::size_t l) const {
    return ((o * shape_.horizons + h) * shape_.features + j) * shape_.lags + l;
  }

  MapShape shape_;
  std::vector<double> scores_;
  std::string method_;
};

// ---------------------------------------------------------------------------
// Seeding. A run has one seed; every instance, repeat or stage draws from a
// substream derived by hashing (seed, stream id), so results never depend on
// evaluation order or on how work is split across workers.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Stream tags keep the substreams of different consumers apart.
namespace streams {
inline constexpr std::uint64_t kInstance = 0x1000;
inline constexpr std::uint64_t kAugment = 0x2000;
inline constexpr std::uint64_t kPermute = 0x3000;
inline constexpr std::uint64_t kShap = 0x4000;
inline constexpr std::uint64_t kEvaluation = 0x5000;
inline constexpr std::uint64_t kRandomMap = 0x6000;
}  // namespace streams

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineKind { standard_normal, zeros, fixed_matrix };

inline std::string_view baseline_kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::standard_normal: return "standard_normal";
    case BaselineKind::zeros: return "zeros";
    case BaselineKind::fixed_matrix: return "fixed_matrix";
  }
  return "unknown";
}

inline BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "standard_normal") return BaselineKind::standard_normal;
  if (name == "zeros") return BaselineKind::zeros;
  if (name == "fixed_matrix") return BaselineKind::fixed_matrix;
  throw std::invalid_argument("unknown baseline kind '" + std::string(name) + "'");
}

struct BaselineSpec {
  BaselineKind kind = BaselineKind::standard_normal;
  std::uint64_t seed = 2024;
  Matrix fixed;  // used by fixed_matrix only

  BaselineSpec with_seed(std::uint64_t s) const {
    BaselineSpec copy = *this;
    copy.seed = s;
    return copy;
  }
};

inline Matrix generate_baseline(const BaselineSpec& spec, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("baseline shape must be positive");
  switch (spec.kind) {
    case BaselineKind::zeros:
      return Matrix(rows, cols, 0.0);
    case BaselineKind::standard_normal: {
      Rng rng(spec.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix out(rows, cols);
      for (double& v : out.values()) v = normal(rng);
      return out;
    }
    case BaselineKind::fixed_matrix:
      if (spec.fixed.rows() != rows || spec.fixed.cols() != cols) {
        throw std::invalid_argument("fixed baseline has shape " +
                                    std::to_string(spec.fixed.rows()) + "x" +
                                    std::to_string(spec.fixed.cols()) + ", expected " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
      }
      return spec.fixed;
  }
  throw std::invalid_argument("unknown baseline kind");
}

// ---------------------------------------------------------------------------
// Distances

namespace detail {
inline void require_same_finite(std::span<const double> a, std::span<const double> b,
                                const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw std::invalid_argument(std::string(what) + ": non-finite input at index " +
                                  std::to_string(i));
    }
  }
}
}  // namespace detail

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  detail::require_same_finite(a, b, "l1_distance");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total;
}

inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  detail::require_same_finite(p, q, "kl_divergence");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("kl_divergence: negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
    throw std::invalid_argument("kl_divergence: input does not sum to 1");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      throw std::invalid_argument("kl_divergence: support violation at index " +
                                  std::to_string(i));
    }
    total += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(total, 0.0);
}

// ---------------------------------------------------------------------------
// Normalization of non-negative relevance vectors.

enum class Normalization { max, sum };

inline std::string_view normalization_name(Normalization n) {
  return n == Normalization::max ? "max" : "sum";
}

inline Normalization parse_normalization(std::string_view name) {
  if (name == "max") return Normalization::max;
  if (name == "sum") return Normalization::sum;
  throw std::invalid_argument("unknown normalization '" + std::string(name) + "'");
}

inline void normalize_in_place(std::span<double> scores, Normalization how = Normalization::max) {
  double denom = 0.0;
  for (double v : scores) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("normalize: entries must be finite and non-negative");
    }
    denom = how == Normalization::max ? std::max(denom, v) : denom + v;
  }
  // All-zero relevance stays zero.
  if (denom == 0.0) return;
  for (double& v : scores) v /= denom;
}

inline std::vector<double> max_normalize(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  normalize_in_place(out, Normalization::max);
  return out;
}

inline std::vector<double> sum_normalize(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  normalize_in_place(out, Normalization::sum);
  return out;
}

}  // namespace tempsal

#endif  // TEMPSAL_CORE_HPP_
