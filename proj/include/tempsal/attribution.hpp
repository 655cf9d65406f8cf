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

// Attribution methods. Each maps (predictor, instance, config) to a
// SaliencyMap phi[o][h][j][l]. All perturbed inputs belonging to one instance
// are sent to the predictor as batches; the forward-call count of every
// method is part of its contract and is asserted by the tests.

#ifndef TEMPSAL_ATTRIBUTION_HPP_
#define TEMPSAL_ATTRIBUTION_HPP_

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tempsal/core.hpp"
#include "tempsal/parallel.hpp"
#include "tempsal/predictor.hpp"

namespace tempsal {

enum class Method { FA, AFO, FP, IG, GS, WinIT, TSR, WinTSR };

inline constexpr std::array<Method, 8> kAllMethods = {Method::FA,  Method::AFO,   Method::FP,
                                                      Method::IG,  Method::GS,    Method::WinIT,
                                                      Method::TSR, Method::WinTSR};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::FA: return "FA";
    case Method::AFO: return "AFO";
    case Method::FP: return "FP";
    case Method::IG: return "IG";
    case Method::GS: return "GS";
    case Method::WinIT: return "WinIT";
    case Method::TSR: return "TSR";
    case Method::WinTSR: return "WinTSR";
  }
  return "?";
}

inline std::string supported_method_names() {
  std::string names;
  for (Method m : kAllMethods) {
    if (!names.empty()) names += ", ";
    names += method_name(m);
  }
  return names;
}

inline Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown attribution method '" + std::string(name) +
                              "'; supported: " + supported_method_names());
}

// How WinTSR reduces time relevance over the O x H outputs before
// normalizing: per output slice (default) or summed over all outputs.
enum class TimeReduction { per_output, aggregate };

struct AttributionConfig {
  Method method = Method::WinTSR;
  BaselineSpec baseline;
  std::size_t ig_steps = 50;
  std::size_t gs_samples = 20;
  std::size_t afo_repeats = 10;
  std::size_t fp_repeats = 5;
  std::optional<std::size_t> winit_window;  // default min(L, 10)
  double tsr_alpha = 0.55;
  double wintsr_skip_threshold = 0.0;
  TimeReduction time_reduction = TimeReduction::per_output;
  Normalization normalization = Normalization::max;
  bool allow_finite_difference = true;
  double fd_epsilon = 1e-3;

  void validate() const {
    if (ig_steps < 1 || gs_samples < 1 || afo_repeats < 1 || fp_repeats < 1) {
      throw std::invalid_argument("attribution config: step/sample/repeat counts must be >= 1");
    }
    if (winit_window && *winit_window < 1) {
      throw std::invalid_argument("attribution config: WinIT window must be >= 1");
    }
    if (!(tsr_alpha >= 0.0 && tsr_alpha <= 1.0)) {
      throw std::invalid_argument("attribution config: tsr_alpha must lie in [0, 1]");
    }
    if (!(wintsr_skip_threshold >= 0.0 && wintsr_skip_threshold <= 1.0)) {
      throw std::invalid_argument("attribution config: WinTSR skip threshold must lie in [0, 1]");
    }
    if (!(fd_epsilon > 0.0)) throw std::invalid_argument("attribution config: fd_epsilon must be > 0");
  }
};

// Per-feature value lists that augmented occlusion samples replacements from.
using FeaturePool = std::vector<std::vector<double>>;

namespace detail {

inline MapShape map_shape(const Predictor& model) {
  const auto in = model.input_shape();
  const auto out = model.output_shape();
  return {out.outputs, out.horizons, in.features, in.lags};
}

inline void check_instance(const Predictor& model, const Matrix& x) {
  const auto in = model.input_shape();
  if (x.rows() != in.features || x.cols() != in.lags) {
    throw std::invalid_argument("attribution: instance shape " + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + " does not match predictor input " +
                                std::to_string(in.features) + "x" + std::to_string(in.lags));
  }
}

inline Matrix with_column(const Matrix& x, const Matrix& baseline, std::size_t l) {
  Matrix out = x;
  for (std::size_t j = 0; j < x.rows(); ++j) out(j, l) = baseline(j, l);
  return out;
}

inline Matrix with_cell(const Matrix& x, const Matrix& baseline, std::size_t cell) {
  Matrix out = x;
  out[cell] = baseline[cell];
  return out;
}

// phi[k][c] = |reference[k] - perturbed(row, k)| for a flat output k.
inline void fill_abs_change(SaliencyMap& map, const Matrix& outputs, std::size_t reference_row,
                            std::size_t first_row, std::span<const std::size_t> cells) {
  const std::size_t width = outputs.cols();
  for (std::size_t k = 0; k < width; ++k) {
    auto slice = map.slice(k);
    const double ref = outputs(reference_row, k);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      slice[cells[i]] = std::abs(ref - outputs(first_row + i, k));
    }
  }
}

inline std::size_t winit_window(const AttributionConfig& cfg, std::size_t lags) {
  std::size_t w = cfg.winit_window.value_or(std::min<std::size_t>(lags, 10));
  if (w < 1) throw std::invalid_argument("WinIT: window must be >= 1");
  if (w > lags) {
    spdlog::warn("WinIT window {} exceeds look-back {}; clamping to {}", w, lags, lags);
    w = lags;
  }
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature ablation: |f(X) - f(X with cell (j,l) set to the baseline)|.
// 1 + J*L forward calls.
inline SaliencyMap feature_ablation(const Predictor& model, const Matrix& x,
                                    const AttributionConfig& cfg) {
  cfg.validate();
  detail::check_instance(model, x);
  const Matrix baseline = generate_baseline(cfg.baseline, x.rows(), x.cols());
  const std::size_t cells = x.size();
  std::vector<Matrix> batch;
  batch.reserve(cells + 1);
  batch.push_back(x);
  std::vector<std::size_t> index(cells);
  std::iota(index.begin(), index.end(), 0);
  for (std::size_t c = 0; c < cells; ++c) batch.push_back(detail::with_cell(x, baseline, c));
  const Matrix out = model.predict_flat(batch);
  SaliencyMap map(detail::map_shape(model), "FA");
  detail::fill_abs_change(map, out, 0, 1, index);
  return map;
}

// Augmented feature occlusion: each cell is replaced by `afo_repeats` draws
// (with replacement) from pool[j]; relevance is the mean absolute change.
// 1 + afo_repeats*J*L forward calls.
inline SaliencyMap augmented_feature_occlusion(const Predictor& model, const Matrix& x,
                                               const AttributionConfig& cfg,
                                               const FeaturePool& pool) {
  cfg.validate();
  detail::check_instance(model, x);
  if (pool.size() != x.rows()) {
    throw std::invalid_argument("AFO: pool must hold one value list per feature");
  }
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (pool[j].empty()) throw std::invalid_argument("AFO: empty pool for feature " + std::to_string(j));
  }
  const std::size_t lags = x.cols();
  const std::size_t cells = x.size();
  const std::size_t repeats = cfg.afo_repeats;
  Rng rng(derive_seed(cfg.baseline.seed, streams::kAugment));
  std::vector<Matrix> batch;
  batch.reserve(1 + repeats * cells);
  batch.push_back(x);
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t c = 0; c < cells; ++c) {
      const auto& values = pool[c / lags];
      std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      Matrix p = x;
      p[c] = values[pick(rng)];
      batch.push_back(std::move(p));
    }
  }
  const Matrix out = model.predict_flat(batch);
  SaliencyMap map(detail::map_shape(model), "AFO");
  const std::size_t width = out.cols();
  for (std::size_t k = 0; k < width; ++k) {
    auto slice = map.slice(k);
    for (std::size_t r = 0; r < repeats; ++r) {
      for (std::size_t c = 0; c < cells; ++c) {
        slice[c] += std::abs(out(0, k) - out(1 + r * cells + c, k));
      }
    }
    for (double& v : slice) v /= static_cast<double>(repeats);
  }
  return map;
}

// Uniformly random cyclic permutation (Sattolo); for n >= 2 it moves every
// element, so each instance receives another instance's value.
inline std::vector<std::size_t> random_derangement(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i-- > 1;) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  return perm;
}

// Feature permutation within a batch: for each repeat and cell, the cell's
// values are permuted across instances and the mean absolute output change
// is recorded per instance. n + fp_repeats*J*L*n forward calls.
inline std::vector<SaliencyMap> feature_permutation(const Predictor& model,
                                                    std::span<const Matrix> batch,
                                                    const AttributionConfig& cfg) {
  cfg.validate();
  if (batch.size() < 2) throw std::invalid_argument("FP: batch size must be >= 2");
  for (const auto& x : batch) detail::check_instance(model, x);
  const std::size_t n = batch.size();
  const std::size_t cells = batch.front().size();
  const Matrix original = model.predict_flat(batch);
  const std::size_t width = original.cols();
  std::vector<SaliencyMap> maps(n, SaliencyMap(detail::map_shape(model), "FP"));
  const std::uint64_t base = derive_seed(cfg.baseline.seed, streams::kPermute);
  std::vector<Matrix> perturbed(n);
  for (std::size_t r = 0; r < cfg.fp_repeats; ++r) {
    for (std::size_t c = 0; c < cells; ++c) {
      Rng rng(derive_seed(base, r * cells + c));
      const auto perm = random_derangement(n, rng);
      for (std::size_t i = 0; i < n; ++i) {
        perturbed[i] = batch[i];
        perturbed[i][c] = batch[perm[i]][c];
      }
      const Matrix out = model.predict_flat(perturbed);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < width; ++k) {
          maps[i].slice(k)[c] += std::abs(original(i, k) - out(i, k));
        }
      }
    }
  }
  for (auto& m : maps) {
    for (double& v : m.scores()) v /= static_cast<double>(cfg.fp_repeats);
  }
  return maps;
}

// Signed integrated gradients as an (O*H) x (J*L) matrix:
// (x - b) * (1/m) sum_{s=1..m} grad f(b + (s/m)(x - b)).
inline Matrix integrated_gradients_signed(const Predictor& model, const Matrix& x,
                                          const Matrix& baseline, const AttributionConfig& cfg) {
  if (cfg.ig_steps < 1) throw std::invalid_argument("IG: ig_steps must be >= 1");
  detail::check_instance(model, x);
  const std::size_t cells = x.size();
  const std::size_t width = model.output_shape().size();
  const std::size_t steps = cfg.ig_steps;
  Matrix total(width, cells, 0.0);
  Matrix point(x.rows(), x.cols());
  for (std::size_t s = 1; s <= steps; ++s) {
    const double alpha = static_cast<double>(s) / static_cast<double>(steps);
    for (std::size_t c = 0; c < cells; ++c) point[c] = baseline[c] + alpha * (x[c] - baseline[c]);
    const Matrix jac = model.jacobian(point, cfg.allow_finite_difference, cfg.fd_epsilon);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += jac[i];
  }
  for (std::size_t k = 0; k < width; ++k) {
    for (std::size_t c = 0; c < cells; ++c) {
      total(k, c) *= (x[c] - baseline[c]) / static_cast<double>(steps);
    }
  }
  return total;
}

inline SaliencyMap integrated_gradients(const Predictor& model, const Matrix& x,
                                        const AttributionConfig& cfg) {
  cfg.validate();
  const Matrix baseline = generate_baseline(cfg.baseline, x.rows(), x.cols());
  const Matrix signed_ig = integrated_gradients_signed(model, x, baseline, cfg);
  SaliencyMap map(detail::map_shape(model), "IG");
  std::transform(signed_ig.values().begin(), signed_ig.values().end(), map.scores().begin(),
                 [](double v) { return std::abs(v); });
  return map;
}

// GradientSHAP: |mean_s (x - b_s) * grad f(b_s + u_s (x - b_s))| with fresh
// baseline draws b_s and u_s ~ U[0, 1].
inline SaliencyMap gradient_shap(const Predictor& model, const Matrix& x,
                                 const AttributionConfig& cfg) {
  cfg.validate();
  detail::check_instance(model, x);
  const std::size_t cells = x.size();
  const std::size_t width = model.output_shape().size();
  const std::uint64_t base = derive_seed(cfg.baseline.seed, streams::kShap);
  Rng rng(base);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Matrix total(width, cells, 0.0);
  Matrix point(x.rows(), x.cols());
  for (std::size_t s = 0; s < cfg.gs_samples; ++s) {
    const Matrix b = generate_baseline(cfg.baseline.with_seed(derive_seed(base, s + 1)), x.rows(),
                                       x.cols());
    const double u = uniform(rng);
    for (std::size_t c = 0; c < cells; ++c) point[c] = b[c] + u * (x[c] - b[c]);
    const Matrix jac = model.jacobian(point, cfg.allow_finite_difference, cfg.fd_epsilon);
    for (std::size_t k = 0; k < width; ++k) {
      for (std::size_t c = 0; c < cells; ++c) total(k, c) += (x[c] - b[c]) * jac(k, c);
    }
  }
  SaliencyMap map(detail::map_shape(model), "GS");
  std::transform(total.values().begin(), total.values().end(), map.scores().begin(),
                 [&](double v) { return std::abs(v / static_cast<double>(cfg.gs_samples)); });
  return map;
}

// Windowed importance: for cell (j,l) and window size W,
//   imp = mean_{e in [l, min(l+W-1, L-1)]} [ D(j, a_e, e) - D(j, a_e, e \ {l}) ]
// with a_e = max(0, e-W+1) and D(j, a, b) = |f(X) - f(X with feature j masked
// over lags a..b)| per output element. The map reports |imp|. Masks that
// cover no cell contribute D = 0 without a forward call, so W = 1 costs
// exactly 1 + J*L calls and reproduces feature ablation.
inline SaliencyMap winit(const Predictor& model, const Matrix& x, const AttributionConfig& cfg) {
  cfg.validate();
  detail::check_instance(model, x);
  const std::size_t j_count = x.rows();
  const std::size_t lags = x.cols();
  const std::size_t window = detail::winit_window(cfg, lags);
  const Matrix baseline = generate_baseline(cfg.baseline, j_count, lags);
  const MapShape shape = detail::map_shape(model);
  const std::size_t width = shape.slices();
  const Matrix reference = model.predict_flat(std::span<const Matrix>(&x, 1));
  auto window_start = [&](std::size_t e) { return e + 1 >= window ? e + 1 - window : 0; };

  SaliencyMap map(shape, "WinIT");
  std::vector<double> acc(width * lags);
  for (std::size_t j = 0; j < j_count; ++j) {
    // Row e: feature j masked over [a_e, e]. Then, for every e and every
    // l in (a_e..e) with a non-empty remainder, the mask without lag l.
    std::vector<Matrix> batch;
    struct Excluded {
      std::size_t e;
      std::size_t l;
    };
    std::vector<Excluded> excluded;
    for (std::size_t e = 0; e < lags; ++e) {
      Matrix p = x;
      for (std::size_t t = window_start(e); t <= e; ++t) p(j, t) = baseline(j, t);
      batch.push_back(std::move(p));
    }
    for (std::size_t e = 0; e < lags; ++e) {
      const std::size_t a = window_start(e);
      if (a == e) continue;
      for (std::size_t l = a; l <= e; ++l) {
        Matrix p = x;
        for (std::size_t t = a; t <= e; ++t) {
          if (t != l) p(j, t) = baseline(j, t);
        }
        batch.push_back(std::move(p));
        excluded.push_back({e, l});
      }
    }
    const Matrix out = model.predict_flat(batch);
    std::fill(acc.begin(), acc.end(), 0.0);
    // Full-window terms: every l in [a_e, e] receives D(j, a_e, e).
    for (std::size_t e = 0; e < lags; ++e) {
      for (std::size_t l = window_start(e); l <= e; ++l) {
        for (std::size_t k = 0; k < width; ++k) {
          acc[k * lags + l] += std::abs(reference(0, k) - out(e, k));
        }
      }
    }
    for (std::size_t i = 0; i < excluded.size(); ++i) {
      const auto [e, l] = excluded[i];
      for (std::size_t k = 0; k < width; ++k) {
        acc[k * lags + l] -= std::abs(reference(0, k) - out(lags + i, k));
      }
    }
    for (std::size_t l = 0; l < lags; ++l) {
      const std::size_t last = std::min(l + window - 1, lags - 1);
      const double terms = static_cast<double>(last - l + 1);
      for (std::size_t k = 0; k < width; ++k) {
        map.slice(k)[j * lags + l] = std::abs(acc[k * lags + l] / terms);
      }
    }
  }
  return map;
}

// Temporal saliency rescaling on top of integrated gradients. Relevance
// changes are L1 distances between IG maps; the resulting (J, L) map is
// broadcast over all outputs. Costs 1 + L + |{l : time score >= alpha}| * J
// IG evaluations.
inline SaliencyMap tsr(const Predictor& model, const Matrix& x, const AttributionConfig& cfg) {
  cfg.validate();
  detail::check_instance(model, x);
  const std::size_t j_count = x.rows();
  const std::size_t lags = x.cols();
  const Matrix baseline = generate_baseline(cfg.baseline, j_count, lags);
  auto abs_ig = [&](const Matrix& input) {
    Matrix m = integrated_gradients_signed(model, input, baseline, cfg);
    for (double& v : m.values()) v = std::abs(v);
    return m;
  };
  const Matrix reference = abs_ig(x);
  std::vector<double> time_score(lags);
  for (std::size_t l = 0; l < lags; ++l) {
    time_score[l] = l1_distance(reference.values(),
                                abs_ig(detail::with_column(x, baseline, l)).values());
  }
  normalize_in_place(time_score, cfg.normalization);
  Matrix feature_score(j_count, lags, 0.0);
  for (std::size_t l = 0; l < lags; ++l) {
    if (time_score[l] < cfg.tsr_alpha) continue;
    for (std::size_t j = 0; j < j_count; ++j) {
      feature_score(j, l) = l1_distance(
          reference.values(), abs_ig(detail::with_cell(x, baseline, j * lags + l)).values());
    }
  }
  SaliencyMap map(detail::map_shape(model), "TSR");
  for (std::size_t k = 0; k < map.shape().slices(); ++k) {
    auto slice = map.slice(k);
    for (std::size_t j = 0; j < j_count; ++j) {
      for (std::size_t l = 0; l < lags; ++l) slice[j * lags + l] = feature_score(j, l) * time_score[l];
    }
  }
  return map;
}

// Windowed temporal saliency rescaling.
//   time relevance:    |f(X) - f(X with lag column l set to the baseline)|
//   normalized per output slice (or after summing over outputs),
//   feature relevance: |f(X) - f(X with cell (j,l) set to the baseline)|,
//   phi = feature relevance * normalized time relevance.
// Lags whose normalized time relevance is below the skip threshold in every
// output slice get zero rows and cost nothing. Exactly 1 + L + L'*J forward
// calls, L' being the number of lags kept (L at threshold 0).
inline SaliencyMap wintsr(const Predictor& model, const Matrix& x, const AttributionConfig& cfg) {
  cfg.validate();
  detail::check_instance(model, x);
  const std::size_t j_count = x.rows();
  const std::size_t lags = x.cols();
  const Matrix baseline = generate_baseline(cfg.baseline, j_count, lags);
  const MapShape shape = detail::map_shape(model);
  const std::size_t width = shape.slices();

  std::vector<Matrix> time_batch;
  time_batch.reserve(lags + 1);
  time_batch.push_back(x);
  for (std::size_t l = 0; l < lags; ++l) time_batch.push_back(detail::with_column(x, baseline, l));
  const Matrix time_out = model.predict_flat(time_batch);

  // time_rel[k][l], normalized.
  Matrix time_rel(width, lags);
  for (std::size_t k = 0; k < width; ++k) {
    for (std::size_t l = 0; l < lags; ++l) time_rel(k, l) = std::abs(time_out(0, k) - time_out(1 + l, k));
  }
  if (cfg.time_reduction == TimeReduction::aggregate) {
    std::vector<double> total(lags, 0.0);
    for (std::size_t k = 0; k < width; ++k) {
      for (std::size_t l = 0; l < lags; ++l) total[l] += time_rel(k, l);
    }
    normalize_in_place(total, cfg.normalization);
    for (std::size_t k = 0; k < width; ++k) {
      for (std::size_t l = 0; l < lags; ++l) time_rel(k, l) = total[l];
    }
  } else {
    for (std::size_t k = 0; k < width; ++k) {
      normalize_in_place(time_rel.values().subspan(k * lags, lags), cfg.normalization);
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t l = 0; l < lags; ++l) {
    double best = 0.0;
    for (std::size_t k = 0; k < width; ++k) best = std::max(best, time_rel(k, l));
    if (best >= cfg.wintsr_skip_threshold) kept.push_back(l);
  }

  SaliencyMap map(shape, "WinTSR");
  if (kept.empty()) return map;
  std::vector<Matrix> feature_batch;
  feature_batch.reserve(kept.size() * j_count);
  std::vector<std::size_t> cells;
  cells.reserve(kept.size() * j_count);
  for (std::size_t l : kept) {
    for (std::size_t j = 0; j < j_count; ++j) {
      cells.push_back(j * lags + l);
      feature_batch.push_back(detail::with_cell(x, baseline, j * lags + l));
    }
  }
  const Matrix feature_out = model.predict_flat(feature_batch);
  for (std::size_t k = 0; k < width; ++k) {
    auto slice = map.slice(k);
    const double ref = time_out(0, k);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t l = cells[i] % lags;
      slice[cells[i]] = std::abs(ref - feature_out(i, k)) * time_rel(k, l);
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Dispatch

// Single-instance methods. FP needs a batch; use attribute_dataset.
inline SaliencyMap attribute(const Predictor& model, const Matrix& x, const AttributionConfig& cfg,
                             const FeaturePool* pool = nullptr) {
  switch (cfg.method) {
    case Method::FA: return feature_ablation(model, x, cfg);
    case Method::AFO:
      if (!pool) throw std::invalid_argument("AFO requires a feature pool");
      return augmented_feature_occlusion(model, x, cfg, *pool);
    case Method::FP: throw std::invalid_argument("FP attributes batches; use attribute_dataset");
    case Method::IG: return integrated_gradients(model, x, cfg);
    case Method::GS: return gradient_shap(model, x, cfg);
    case Method::WinIT: return winit(model, x, cfg);
    case Method::TSR: return tsr(model, x, cfg);
    case Method::WinTSR: return wintsr(model, x, cfg);
  }
  throw std::invalid_argument("unknown method");
}

// One value list per feature: every time step covered by the windows, each
// counted once (all lags of the first window, then the newest lag of the
// rest).
inline FeaturePool build_feature_pool(std::span<const Matrix> windows) {
  if (windows.empty()) throw std::invalid_argument("build_feature_pool: no windows");
  const std::size_t j_count = windows.front().rows();
  const std::size_t lags = windows.front().cols();
  FeaturePool pool(j_count);
  for (std::size_t j = 0; j < j_count; ++j) {
    for (std::size_t l = 0; l < lags; ++l) pool[j].push_back(windows.front()(j, l));
    for (std::size_t i = 1; i < windows.size(); ++i) pool[j].push_back(windows[i](j, lags - 1));
  }
  return pool;
}

struct AttributeOptions {
  std::uint64_t seed = 2024;
  std::size_t workers = 1;
  std::size_t fp_batch = 32;
  const FeaturePool* pool = nullptr;
};

// Instance i uses baseline seed derive_seed(seed_stream, i), so maps are
// identical for any worker count. Non-reentrant predictors run serially.
inline std::vector<SaliencyMap> attribute_dataset(const Predictor& model,
                                                  std::span<const Matrix> instances,
                                                  const AttributionConfig& cfg,
                                                  const AttributeOptions& options = {}) {
  cfg.validate();
  const std::size_t workers = model.capabilities().reentrant ? options.workers : 1;
  const std::uint64_t instance_stream = derive_seed(options.seed, streams::kInstance);
  std::vector<SaliencyMap> maps(instances.size());
  if (cfg.method == Method::FP) {
    if (options.fp_batch < 2) throw std::invalid_argument("FP: fp_batch must be >= 2");
    const std::size_t chunks = (instances.size() + options.fp_batch - 1) / options.fp_batch;
    parallel_for(chunks, workers, [&](std::size_t chunk) {
      std::size_t begin = chunk * options.fp_batch;
      std::size_t end = std::min(instances.size(), begin + options.fp_batch);
      // A trailing singleton joins the previous chunk's permutation pool.
      if (end - begin < 2 && begin >= 1) begin -= 1;
      AttributionConfig local = cfg;
      local.baseline.seed = derive_seed(derive_seed(options.seed, streams::kPermute), chunk);
      auto chunk_maps = feature_permutation(model, instances.subspan(begin, end - begin), local);
      for (std::size_t i = chunk * options.fp_batch; i < end; ++i) {
        maps[i] = std::move(chunk_maps[i - begin]);
      }
    });
    return maps;
  }
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    AttributionConfig local = cfg;
    local.baseline.seed = derive_seed(instance_stream, i);
    maps[i] = attribute(model, instances[i], local, options.pool);
  });
  return maps;
}

}  // namespace tempsal

#endif  // TEMPSAL_ATTRIBUTION_HPP_
