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

// Interpretation fidelity without ground truth. The top-k% cells of a map are
// masked (comprehensiveness) or kept while everything else is masked
// (sufficiency) and the output change is averaged over a grid of k values:
// AOPCR for regression, AUC drop (AOPC) for classification.

#ifndef TEMPSAL_EVALUATION_HPP_
#define TEMPSAL_EVALUATION_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempsal/attribution.hpp"
#include "tempsal/core.hpp"
#include "tempsal/parallel.hpp"
#include "tempsal/predictor.hpp"

namespace tempsal {

struct Cell {
  std::size_t feature = 0;
  std::size_t lag = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct TopKGrid {
  std::vector<double> percentages = {5.0, 7.5, 10.0, 15.0};

  void validate() const {
    if (percentages.empty()) throw std::invalid_argument("top-k grid is empty");
    for (std::size_t i = 0; i < percentages.size(); ++i) {
      if (!(percentages[i] > 0.0 && percentages[i] <= 100.0)) {
        throw std::invalid_argument("top-k percentages must lie in (0, 100]");
      }
      if (i > 0 && !(percentages[i] > percentages[i - 1])) {
        throw std::invalid_argument("top-k percentages must be strictly increasing");
      }
    }
  }
};

enum class MaskMode { comprehensiveness, sufficiency };

inline std::string_view mask_mode_name(MaskMode m) {
  return m == MaskMode::comprehensiveness ? "comp" : "suff";
}

// Top-k is taken per (o, h) slice of the map by default; `global` ranks the
// sum over all slices once per instance.
enum class TopKScope { per_slice, global };

// Flat cell indices (j * L + l) by descending score; ties go to the smaller
// lag, then the smaller feature.
inline std::vector<std::size_t> rank_cell_indices(std::span<const double> scores, std::size_t lags) {
  for (double v : scores) {
    if (!std::isfinite(v)) throw std::invalid_argument("rank_cells: non-finite score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    const std::size_t la = a % lags, lb = b % lags;
    if (la != lb) return la < lb;
    return a / lags < b / lags;
  });
  return order;
}

inline std::vector<Cell> rank_cells(const Matrix& slice) {
  std::vector<Cell> out;
  for (std::size_t idx : rank_cell_indices(slice.values(), slice.cols())) {
    out.push_back({idx / slice.cols(), idx % slice.cols()});
  }
  return out;
}

// ceil(k% of the cell count), computed so that exact products do not round up.
inline std::size_t top_k_count(double k_percent, std::size_t cells) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw std::invalid_argument("k must lie in (0, 100]");
  const double exact = k_percent * static_cast<double>(cells) / 100.0;
  const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(count, 1, cells);
}

inline Matrix mask_cells(const Matrix& x, std::span<const Cell> cells, const Matrix& baseline) {
  if (!x.same_shape(baseline)) throw std::invalid_argument("mask_cells: baseline shape mismatch");
  Matrix out = x;
  for (const auto& c : cells) {
    if (c.feature >= x.rows() || c.lag >= x.cols()) {
      throw std::out_of_range("mask_cells: cell (" + std::to_string(c.feature) + ", " +
                              std::to_string(c.lag) + ") outside " + std::to_string(x.rows()) + "x" +
                              std::to_string(x.cols()));
    }
    out(c.feature, c.lag) = baseline(c.feature, c.lag);
  }
  return out;
}

inline WindowInstance mask_cells(const WindowInstance& x, std::span<const Cell> cells,
                                 const BaselineSpec& baseline) {
  WindowInstance out = x;
  out.values = mask_cells(x.values, cells, generate_baseline(baseline, x.features(), x.lags()));
  return out;
}

// Masks the first `top` ranked cells (comprehensiveness) or every cell except
// them (sufficiency).
inline Matrix mask_ranked(const Matrix& x, std::span<const std::size_t> ranked, std::size_t top,
                          MaskMode mode, const Matrix& baseline) {
  Matrix out = x;
  const std::size_t begin = mode == MaskMode::comprehensiveness ? 0 : top;
  const std::size_t end = mode == MaskMode::comprehensiveness ? top : ranked.size();
  for (std::size_t i = begin; i < end; ++i) out[ranked[i]] = baseline[ranked[i]];
  return out;
}

// |f(X) - f(X masked)| per output element for every k of the grid, as one
// batch of 1 + K * (O*H) calls (1 + K with global scope).
inline std::vector<Matrix> output_change_curve(const Predictor& model, const Matrix& x,
                                               const SaliencyMap& map, const TopKGrid& grid,
                                               const Matrix& baseline, MaskMode mode,
                                               TopKScope scope = TopKScope::per_slice) {
  const MapShape shape = map.shape();
  const auto in = model.input_shape();
  const auto out_shape = model.output_shape();
  if (shape.features != in.features || shape.lags != in.lags || shape.outputs != out_shape.outputs ||
      shape.horizons != out_shape.horizons) {
    throw std::invalid_argument("evaluation: map shape does not match the predictor");
  }
  const std::size_t width = shape.slices();
  const std::size_t cells = shape.cells();
  std::vector<std::vector<std::size_t>> ranked;
  if (scope == TopKScope::global) {
    std::vector<double> total(cells, 0.0);
    for (std::size_t k = 0; k < width; ++k) {
      auto s = map.slice(k);
      for (std::size_t c = 0; c < cells; ++c) total[c] += s[c];
    }
    ranked.push_back(rank_cell_indices(total, shape.lags));
  } else {
    for (std::size_t k = 0; k < width; ++k) ranked.push_back(rank_cell_indices(map.slice(k), shape.lags));
  }
  std::vector<Matrix> batch{x};
  for (double pct : grid.percentages) {
    const std::size_t top = top_k_count(pct, cells);
    for (const auto& order : ranked) batch.push_back(mask_ranked(x, order, top, mode, baseline));
  }
  const Matrix out = model.predict_flat(batch);
  std::vector<Matrix> curve;
  for (std::size_t g = 0; g < grid.percentages.size(); ++g) {
    Matrix change(out_shape.outputs, out_shape.horizons);
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t row = 1 + g * ranked.size() + (scope == TopKScope::global ? 0 : k);
      change[k] = std::abs(out(0, k) - out(row, k));
    }
    curve.push_back(std::move(change));
  }
  return curve;
}

inline Matrix comprehensiveness(const Predictor& model, const Matrix& x, const SaliencyMap& map,
                                double k, const Matrix& baseline,
                                TopKScope scope = TopKScope::per_slice) {
  return output_change_curve(model, x, map, TopKGrid{{k}}, baseline, MaskMode::comprehensiveness,
                             scope)
      .front();
}

inline Matrix sufficiency(const Predictor& model, const Matrix& x, const SaliencyMap& map, double k,
                          const Matrix& baseline, TopKScope scope = TopKScope::per_slice) {
  return output_change_curve(model, x, map, TopKGrid{{k}}, baseline, MaskMode::sufficiency, scope)
      .front();
}

struct EvalOptions {
  std::size_t workers = 1;
  TopKScope scope = TopKScope::per_slice;
};

// Masking baseline for instance i of an evaluation run.
inline Matrix evaluation_baseline(const BaselineSpec& spec, std::size_t i, std::size_t rows,
                                  std::size_t cols) {
  return generate_baseline(
      spec.with_seed(derive_seed(derive_seed(spec.seed, streams::kEvaluation), i)), rows, cols);
}

namespace detail {
inline void check_eval_inputs(std::span<const Matrix> instances, std::span<const SaliencyMap> maps) {
  if (instances.empty()) throw std::invalid_argument("evaluation: no instances");
  if (instances.size() != maps.size()) {
    throw std::invalid_argument("evaluation: " + std::to_string(instances.size()) + " instances but " +
                                std::to_string(maps.size()) + " maps");
  }
}
}  // namespace detail

// Mean absolute output change per k, averaged over instances and all O x H
// output elements.
inline std::vector<double> mean_output_change_by_k(const Predictor& model,
                                                   std::span<const Matrix> instances,
                                                   std::span<const SaliencyMap> maps,
                                                   const TopKGrid& grid, const BaselineSpec& baseline,
                                                   MaskMode mode, const EvalOptions& options = {}) {
  grid.validate();
  detail::check_eval_inputs(instances, maps);
  const std::size_t workers = model.capabilities().reentrant ? options.workers : 1;
  std::vector<std::vector<double>> per_instance(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    const Matrix b = evaluation_baseline(baseline, i, instances[i].rows(), instances[i].cols());
    const auto curve = output_change_curve(model, instances[i], maps[i], grid, b, mode, options.scope);
    for (const auto& m : curve) {
      per_instance[i].push_back(std::accumulate(m.values().begin(), m.values().end(), 0.0) /
                                static_cast<double>(m.size()));
    }
  });
  std::vector<double> by_k(grid.percentages.size(), 0.0);
  for (const auto& row : per_instance) {
    for (std::size_t g = 0; g < row.size(); ++g) by_k[g] += row[g];
  }
  for (double& v : by_k) v /= static_cast<double>(instances.size());
  return by_k;
}

inline std::vector<double> aopcr_by_k(const Predictor& model, std::span<const Matrix> instances,
                                      std::span<const SaliencyMap> maps, const TopKGrid& grid,
                                      const BaselineSpec& baseline, MaskMode mode,
                                      const EvalOptions& options = {}) {
  if (model.task() != TaskKind::regression) {
    throw std::invalid_argument("AOPCR requires a regression predictor");
  }
  return mean_output_change_by_k(model, instances, maps, grid, baseline, mode, options);
}

// Mean over instances, outputs, horizons and k of the absolute output change.
inline double aopcr(const Predictor& model, std::span<const Matrix> instances,
                    std::span<const SaliencyMap> maps, const TopKGrid& grid,
                    const BaselineSpec& baseline, MaskMode mode, const EvalOptions& options = {}) {
  const auto by_k = aopcr_by_k(model, instances, maps, grid, baseline, mode, options);
  return std::accumulate(by_k.begin(), by_k.end(), 0.0) / static_cast<double>(by_k.size());
}

// Rank-based ROC AUC (Mann-Whitney U with midranks for ties).
inline double auc_roc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("auc_roc: length mismatch");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auc_roc: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("auc_roc: both classes must be present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) positive_rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

// AUC drop per k, averaged over classes: for class o, AUC of the class-o
// score against the one-vs-rest labels before masking minus after masking.
inline std::vector<double> aopc_by_k(const Predictor& model, std::span<const Matrix> instances,
                                     std::span<const int> labels, std::span<const SaliencyMap> maps,
                                     const TopKGrid& grid, const BaselineSpec& baseline, MaskMode mode,
                                     const EvalOptions& options = {}) {
  grid.validate();
  detail::check_eval_inputs(instances, maps);
  if (model.task() != TaskKind::classification) {
    throw std::invalid_argument("AOPC (AUC drop) requires a classification predictor");
  }
  if (labels.size() != instances.size()) throw std::invalid_argument("aopc: one label per instance required");
  const std::size_t classes = model.output_shape().outputs;
  const std::size_t workers = model.capabilities().reentrant ? options.workers : 1;
  const std::size_t n = instances.size();
  // original[i][o], masked[g][i][o]
  std::vector<std::vector<double>> original(n);
  std::vector<std::vector<std::vector<double>>> masked(grid.percentages.size(),
                                                       std::vector<std::vector<double>>(n));
  parallel_for(n, workers, [&](std::size_t i) {
    const Matrix b = evaluation_baseline(baseline, i, instances[i].rows(), instances[i].cols());
    for (std::size_t g = 0; g < grid.percentages.size(); ++g) masked[g][i].resize(classes);
    const MapShape shape = maps[i].shape();
    std::vector<Matrix> batch{instances[i]};
    for (double pct : grid.percentages) {
      const std::size_t top = top_k_count(pct, shape.cells());
      if (options.scope == TopKScope::global) {
        std::vector<double> total(shape.cells(), 0.0);
        for (std::size_t o = 0; o < classes; ++o) {
          auto s = maps[i].slice(o);
          for (std::size_t c = 0; c < total.size(); ++c) total[c] += s[c];
        }
        batch.push_back(mask_ranked(instances[i], rank_cell_indices(total, shape.lags), top, mode, b));
      } else {
        for (std::size_t o = 0; o < classes; ++o) {
          batch.push_back(
              mask_ranked(instances[i], rank_cell_indices(maps[i].slice(o), shape.lags), top, mode, b));
        }
      }
    }
    const Matrix out = model.predict_flat(batch);
    original[i].assign(out.row(0).begin(), out.row(0).end());
    const std::size_t per_k = options.scope == TopKScope::global ? 1 : classes;
    for (std::size_t g = 0; g < grid.percentages.size(); ++g) {
      for (std::size_t o = 0; o < classes; ++o) {
        masked[g][i][o] = out(1 + g * per_k + (per_k == 1 ? 0 : o), o);
      }
    }
  });
  std::vector<double> by_k(grid.percentages.size(), 0.0);
  for (std::size_t o = 0; o < classes; ++o) {
    std::vector<int> one_vs_rest(n);
    std::vector<double> before(n);
    for (std::size_t i = 0; i < n; ++i) {
      one_vs_rest[i] = labels[i] == static_cast<int>(o) ? 1 : 0;
      before[i] = original[i][o];
    }
    const double auc_before = auc_roc(one_vs_rest, before);
    for (std::size_t g = 0; g < grid.percentages.size(); ++g) {
      std::vector<double> after(n);
      for (std::size_t i = 0; i < n; ++i) after[i] = masked[g][i][o];
      by_k[g] += (auc_before - auc_roc(one_vs_rest, after)) / static_cast<double>(classes);
    }
  }
  return by_k;
}

inline double aopc_classification(const Predictor& model, std::span<const Matrix> instances,
                                  std::span<const int> labels, std::span<const SaliencyMap> maps,
                                  const TopKGrid& grid, const BaselineSpec& baseline, MaskMode mode,
                                  const EvalOptions& options = {}) {
  const auto by_k = aopc_by_k(model, instances, labels, maps, grid, baseline, mode, options);
  return std::accumulate(by_k.begin(), by_k.end(), 0.0) / static_cast<double>(by_k.size());
}

// Per-instance class-score change |p_o - p'_o| averaged over instances,
// classes and k; diagnostic companion to the AUC drop.
inline double aopc_score_change(const Predictor& model, std::span<const Matrix> instances,
                                std::span<const SaliencyMap> maps, const TopKGrid& grid,
                                const BaselineSpec& baseline, MaskMode mode,
                                const EvalOptions& options = {}) {
  const auto by_k = mean_output_change_by_k(model, instances, maps, grid, baseline, mode, options);
  return std::accumulate(by_k.begin(), by_k.end(), 0.0) / static_cast<double>(by_k.size());
}

// Uniform [0, 1) scores; the reference a useful explanation has to beat.
inline SaliencyMap random_saliency_map(const MapShape& shape, std::uint64_t seed) {
  SaliencyMap map(shape, "random");
  Rng rng(derive_seed(seed, streams::kRandomMap));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (double& v : map.scores()) v = uniform(rng);
  return map;
}

// ---------------------------------------------------------------------------
// Method ranking

struct RankRow {
  std::string group;   // e.g. dataset/model configuration
  std::string method;
  double comprehensiveness = 0.0;  // higher is better
  double sufficiency = 0.0;        // lower is better
};

struct RankSummary {
  std::string method;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation of the ranks
  std::vector<double> ranks;
};

namespace detail {
// Ranks 1..n (1 = best), ties sharing their mean rank.
inline std::vector<double> fractional_ranks(const std::vector<double>& values, bool higher_is_better) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_is_better ? values[a] > values[b] : values[a] < values[b];
  });
  // Values closer than 1e-9 of the column's magnitude are ties: summation
  // order alone must not decide a rank.
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double tolerance = 1e-9 * scale;
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(values[order[j]] - values[order[i]]) <= tolerance) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = mean_rank;
    i = j;
  }
  return ranks;
}
}  // namespace detail

// Within every group, methods are ranked by comprehensiveness (descending)
// and by sufficiency (ascending); each method's ranks are then averaged with
// both axes weighted equally. Summaries follow first-appearance order.
inline std::vector<RankSummary> average_rank(const std::vector<RankRow>& table) {
  if (table.empty()) throw std::invalid_argument("average_rank: empty table");
  std::vector<std::string> groups;
  std::vector<RankSummary> summary;
  auto method_slot = [&](const std::string& m) -> RankSummary& {
    for (auto& s : summary) {
      if (s.method == m) return s;
    }
    summary.push_back({m, 0.0, 0.0, {}});
    return summary.back();
  };
  for (const auto& row : table) {
    method_slot(row.method);
    if (std::find(groups.begin(), groups.end(), row.group) == groups.end()) groups.push_back(row.group);
  }
  for (const auto& g : groups) {
    std::vector<const RankRow*> rows;
    for (const auto& row : table) {
      if (row.group == g) rows.push_back(&row);
    }
    std::vector<double> comp, suff;
    for (const auto* r : rows) {
      comp.push_back(r->comprehensiveness);
      suff.push_back(r->sufficiency);
    }
    const auto comp_rank = detail::fractional_ranks(comp, true);
    const auto suff_rank = detail::fractional_ranks(suff, false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& slot = method_slot(rows[i]->method);
      slot.ranks.push_back(comp_rank[i]);
      slot.ranks.push_back(suff_rank[i]);
    }
  }
  for (auto& s : summary) {
    const double n = static_cast<double>(s.ranks.size());
    s.mean = std::accumulate(s.ranks.begin(), s.ranks.end(), 0.0) / n;
    double var = 0.0;
    for (double r : s.ranks) var += (r - s.mean) * (r - s.mean);
    s.std = std::sqrt(var / n);
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Runtime

struct RuntimeRow {
  std::string method;
  double seconds = 0.0;
  std::uint64_t forward_calls = 0;
  std::uint64_t gradient_calls = 0;
};

struct RuntimeOptions {
  AttributeOptions attribute;
  bool warm_up = true;  // one untimed instance per method first
};

// Wall-clock time and forward/gradient call counts per method over the same
// instances and predictor. Counts cover the timed pass only.
inline std::vector<RuntimeRow> measure_runtime(const Predictor& model, std::span<const Matrix> instances,
                                               const std::vector<AttributionConfig>& methods,
                                               const RuntimeOptions& options = {}) {
  if (methods.empty()) throw std::invalid_argument("measure_runtime: no methods");
  if (instances.empty()) throw std::invalid_argument("measure_runtime: no instances");
  std::vector<RuntimeRow> rows;
  for (const auto& cfg : methods) {
    // FP needs at least two instances to permute.
    const std::size_t warm = cfg.method == Method::FP ? 2 : 1;
    if (options.warm_up && instances.size() >= warm) {
      (void)attribute_dataset(model, instances.subspan(0, warm), cfg, options.attribute);
    }
    const auto calls_before = model.forward_calls();
    const auto grads_before = model.gradient_calls();
    const auto start = std::chrono::steady_clock::now();
    (void)attribute_dataset(model, instances, cfg, options.attribute);
    const auto stop = std::chrono::steady_clock::now();
    rows.push_back({std::string(method_name(cfg.method)),
                    std::chrono::duration<double>(stop - start).count(),
                    model.forward_calls() - calls_before, model.gradient_calls() - grads_before});
  }
  return rows;
}

}  // namespace tempsal

#endif  // TEMPSAL_EVALUATION_HPP_
