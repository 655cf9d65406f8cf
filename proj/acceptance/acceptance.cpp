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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Runs against the native predictors only.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "tempsal/tempsal.hpp"

using namespace tempsal;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

AttributionConfig config(Method m, std::uint64_t seed = 2024,
                         BaselineKind kind = BaselineKind::standard_normal) {
  AttributionConfig cfg;
  cfg.method = m;
  cfg.baseline = {kind, seed, {}};
  return cfg;
}

struct Triple {
  std::unique_ptr<Predictor> model;
  Matrix x;
  std::uint64_t seed;
};

// Alternating linear and MLP models over varied shapes.
std::vector<Triple> random_triples(std::size_t count = 20) {
  std::vector<Triple> out;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t J = 1 + t % 3, L = 2 + (t * 3) % 7, O = 1 + (t / 2) % 2, H = 1 + t % 2;
    std::unique_ptr<Predictor> model;
    if (t % 2 == 0) {
      model = std::make_unique<LinearForecaster>(oracle::random_linear(J, L, O, H, 3000 + t));
    } else {
      model = std::make_unique<Mlp>(oracle::random_mlp(J, L, O, H, 3000 + t));
    }
    out.push_back({std::move(model), oracle::random_matrix(J, L, 4000 + t), 5000 + t});
  }
  return out;
}

DatasetBundle planted_data(std::uint64_t seed, double noise_std = 0.0, std::size_t features = 3,
                           std::size_t lags = 24, std::size_t horizons = 1) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.noise_std = noise_std;
  spec.features = features;
  spec.lags = lags;
  spec.horizons = horizons;
  return normalize_dataset(generate_synthetic(spec));
}

std::vector<Matrix> inputs(const std::vector<WindowInstance>& split, std::size_t n) {
  std::vector<Matrix> xs;
  for (std::size_t i = 0; i < std::min(n, split.size()); ++i) xs.push_back(split[i].values);
  return xs;
}

Mlp fitted_mlp(const DatasetBundle& data, std::uint64_t seed) {
  MlpOptions opts;
  opts.seed = seed;
  return fit_mlp(data, opts).model;
}

// Fraction of the map's top-|planted| cells that are planted.
double top_precision(const SaliencyMap& map, const Matrix& planted) {
  std::vector<double> scores(map.slice(0).begin(), map.slice(0).end());
  const auto ranked = rank_cell_indices(scores, planted.cols());
  std::size_t count = 0;
  for (double v : planted.values()) count += v > 0.5 ? 1 : 0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < count; ++r) hits += planted[ranked[r]] > 0.5 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(count);
}

// --- criteria ----------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (auto& t : random_triples()) {
    const auto fa = config(Method::FA, t.seed);
    const Matrix b = generate_baseline(fa.baseline, t.x.rows(), t.x.cols());
    worst = std::max(worst, oracle::max_abs_diff(feature_ablation(*t.model, t.x, fa),
                                                 oracle::feature_ablation(*t.model, t.x, b)));
    auto wi = config(Method::WinIT, t.seed);
    const std::size_t W = detail::winit_window(wi, t.x.cols());
    worst = std::max(worst, oracle::max_abs_diff(winit(*t.model, t.x, wi), oracle::winit(*t.model, t.x, b, W)));
    auto ts = config(Method::TSR, t.seed);
    worst = std::max(worst, oracle::max_abs_diff(tsr(*t.model, t.x, ts),
                                                 oracle::tsr(*t.model, t.x, b, ts.ig_steps, ts.tsr_alpha)));
    auto wt = config(Method::WinTSR, t.seed);
    worst = std::max(worst, oracle::max_abs_diff(wintsr(*t.model, t.x, wt), oracle::wintsr(*t.model, t.x, b, 0.0)));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && elapsed < 60.0,
          "max |optimized - reference| " + num(worst) + " over 20 triples x {FA, WinIT, TSR, WinTSR} in " +
              num(elapsed) + " s"};
}

Outcome call_counts() {
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 2}, {5, 96}, {32, 48}};
  std::string detail;
  bool ok = true;
  for (auto [J, L] : shapes) {
    const auto model = oracle::random_linear(J, L, 1, 1, J * 1000 + L);
    const Matrix x = oracle::random_matrix(J, L, 7);
    auto before = model.forward_calls();
    feature_ablation(model, x, config(Method::FA));
    const auto fa = model.forward_calls() - before;
    before = model.forward_calls();
    wintsr(model, x, config(Method::WinTSR));
    const auto wt = model.forward_calls() - before;
    ok = ok && fa == 1 + L * J && wt == 1 + L + L * J;
    detail += "(" + std::to_string(J) + "," + std::to_string(L) + "): FA " + std::to_string(fa) + ", WinTSR " +
              std::to_string(wt) + "; ";
  }
  return {ok, detail};
}

Outcome runtime_ordering() {
  const auto data = planted_data(2024, 0.0, 5, 96, 24);
  const auto model = fitted_mlp(data, 2024);
  const auto xs = inputs(data.test, 64);
  std::vector<AttributionConfig> methods;
  for (Method m : {Method::FA, Method::WinTSR, Method::TSR}) {
    auto cfg = config(m);
    cfg.ig_steps = 50;
    methods.push_back(cfg);
  }
  const auto rows = measure_runtime(model, xs, methods);
  const double fa = rows[0].seconds, wt = rows[1].seconds, ts = rows[2].seconds;
  return {xs.size() == 64 && ts >= 10.0 * wt && wt <= 2.0 * fa,
          "FA " + num(fa) + " s, WinTSR " + num(wt) + " s, TSR " + num(ts) + " s; TSR/WinTSR " + num(ts / wt) +
              ", WinTSR/FA " + num(wt / fa)};
}

Outcome planted_recovery() {
  std::size_t exact = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto data = planted_data(2024 + s);
    const auto model = fit_linear(data, 0.0).model;
    const auto map = wintsr(model, data.test.front().values, config(Method::WinTSR, 2024 + s));
    exact += top_precision(map, *data.ground_truth) == 1.0 ? 1 : 0;
  }
  const auto noisy = planted_data(2024, 0.5);
  const auto model = fit_linear(noisy, 0.0).model;
  const auto xs = inputs(noisy.test, 100);
  const auto maps = attribute_dataset(model, xs, config(Method::WinTSR));
  double precision = 0.0;
  for (const auto& m : maps) precision += top_precision(m, *noisy.ground_truth);
  precision /= static_cast<double>(maps.size());
  return {exact >= 95 && xs.size() == 100 && precision >= 0.8,
          "noiseless exact top-3 on " + std::to_string(exact) + "/100 seeds; noise 0.5 mean precision " +
              num(precision) + " over " + std::to_string(xs.size()) + " instances"};
}

Outcome fidelity_separation() {
  const TopKGrid grid;
  std::vector<std::size_t> wins(kAllMethods.size(), 0);
  std::vector<RankRow> table;
  for (std::uint64_t t = 0; t < 100; ++t) {
    const std::uint64_t seed = 2024 + t;
    const auto data = planted_data(seed);
    const auto model = fitted_mlp(data, seed);
    const auto xs = inputs(data.test, 16);
    const auto pool = build_feature_pool(inputs(data.train, data.train.size()));
    const BaselineSpec mask{BaselineKind::standard_normal, seed, {}};
    AttributeOptions opts;
    opts.seed = seed;
    opts.pool = &pool;
    std::vector<SaliencyMap> random;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      random.push_back(random_saliency_map(detail::map_shape(model), derive_seed(seed, i)));
    }
    const double rc = aopcr(model, xs, random, grid, mask, MaskMode::comprehensiveness);
    const double rs = aopcr(model, xs, random, grid, mask, MaskMode::sufficiency);
    const std::string group = std::to_string(seed);
    table.push_back({group, "random", rc, rs});
    for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
      const auto maps = attribute_dataset(model, xs, config(kAllMethods[m], seed), opts);
      const double c = aopcr(model, xs, maps, grid, mask, MaskMode::comprehensiveness);
      const double s = aopcr(model, xs, maps, grid, mask, MaskMode::sufficiency);
      wins[m] += (c > rc && s < rs) ? 1 : 0;
      const Method method = kAllMethods[m];
      if (method == Method::FA || method == Method::FP || method == Method::WinTSR) {
        table.push_back({group, std::string(method_name(method)), c, s});
      }
    }
  }
  bool ok = true;
  std::string detail = "beats random on ";
  for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
    ok = ok && wins[m] >= 95;
    detail += std::string(method_name(kAllMethods[m])) + " " + std::to_string(wins[m]) + "/100, ";
  }
  const auto ranks = average_rank(table);
  double wintsr_mean = 0.0;
  for (const auto& r : ranks) {
    if (r.method == "WinTSR") wintsr_mean = r.mean;
  }
  std::size_t position = 1;
  for (const auto& r : ranks) position += r.mean < wintsr_mean ? 1 : 0;
  detail += "average ranks:";
  for (const auto& r : ranks) detail += " " + r.method + " " + num(r.mean);
  detail += "; WinTSR placed " + std::to_string(position);
  return {ok && position <= 2, detail};
}

Outcome metric_units() {
  const auto constant = make_constant_predictor({3, 8}, {1, 2}, 4.0);
  std::vector<Matrix> xs;
  std::vector<SaliencyMap> maps;
  for (std::uint64_t i = 0; i < 10; ++i) {
    xs.push_back(oracle::random_matrix(3, 8, i));
    maps.push_back(random_saliency_map(detail::map_shape(constant), i));
  }
  const TopKGrid grid;
  const BaselineSpec b;
  const double comp = aopcr(constant, xs, maps, grid, b, MaskMode::comprehensiveness);
  const double suff = aopcr(constant, xs, maps, grid, b, MaskMode::sufficiency);
  const auto clf = make_constant_predictor({3, 8}, {2, 1}, 0.5, TaskKind::classification);
  std::vector<SaliencyMap> clf_maps;
  for (std::uint64_t i = 0; i < 10; ++i) clf_maps.push_back(random_saliency_map(detail::map_shape(clf), i));
  const std::vector<int> labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const double aopc = aopc_classification(clf, xs, labels, clf_maps, grid, b, MaskMode::comprehensiveness);
  const bool grid_ok = grid.percentages == std::vector<double>{5.0, 7.5, 10.0, 15.0};

  double worst_auc = 0.0;
  Rng rng(2024);
  for (std::size_t set = 0; set < 100; ++set) {
    const std::size_t n = 2 + set % 60;
    std::vector<int> y(n);
    std::vector<double> s(n);
    std::uniform_int_distribution<int> coin(0, 1), coarse(0, 4);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? static_cast<int>(i) : coin(rng);
      s[i] = set % 2 == 0 ? normal(rng) : static_cast<double>(coarse(rng));  // odd sets carry ties
    }
    worst_auc = std::max(worst_auc, std::abs(auc_roc(y, s) - oracle::pair_counting_auc(y, s)));
  }
  return {comp == 0.0 && suff == 0.0 && aopc == 0.0 && grid_ok && worst_auc <= 1e-12,
          "constant predictor comp " + num(comp) + ", suff " + num(suff) + ", AOPC " + num(aopc) +
              "; default grid " + (grid_ok ? "{5, 7.5, 10, 15}" : "wrong") + "; max AUC error " + num(worst_auc) +
              " over 100 sets"};
}

Outcome ig_closed_form_and_completeness() {
  double worst_closed = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto model = oracle::random_linear(2 + s % 3, 3 + s % 5, 1 + s % 2, 1 + s % 3, 60 + s);
    const Matrix x = oracle::random_matrix(model.input_shape().features, model.input_shape().lags, 70 + s);
    for (std::size_t steps : {1u, 2u, 7u, 50u, 200u}) {
      auto cfg = config(Method::IG, s, BaselineKind::zeros);
      cfg.ig_steps = steps;
      const auto map = integrated_gradients(model, x, cfg);
      for (std::size_t k = 0; k < map.shape().slices(); ++k) {
        const std::size_t o = k / map.shape().horizons, h = k % map.shape().horizons;
        const Matrix w = model.weight_slice({o, h});
        for (std::size_t c = 0; c < x.size(); ++c) {
          const double expected = std::abs(w[c] * x[c]);
          worst_closed = std::max(worst_closed, std::abs(map.slice(k)[c] - expected) / std::max(1.0, expected));
        }
      }
    }
  }

  // Completeness on the fitted planted-data MLP.
  const auto data = planted_data(2024);
  const auto model = fitted_mlp(data, 2024);
  double worst_residual = 0.0;
  const auto xs = inputs(data.test, 20);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto cfg = config(Method::IG, 2024 + i);
    cfg.ig_steps = 200;
    const Matrix b = generate_baseline(cfg.baseline, xs[i].rows(), xs[i].cols());
    const Matrix signed_ig = integrated_gradients_signed(model, xs[i], b, cfg);
    const Matrix fx = model.predict_one(xs[i]).values, fb = model.predict_one(b).values;
    for (std::size_t k = 0; k < signed_ig.rows(); ++k) {
      double total = 0.0;
      for (std::size_t c = 0; c < signed_ig.cols(); ++c) total += signed_ig(k, c);
      worst_residual = std::max(worst_residual, std::abs(total - (fx[k] - fb[k])));
    }
  }
  return {worst_closed <= 1e-12 && worst_residual <= 1e-3,
          "linear closed form max relative error " + num(worst_closed) +
              " (steps 1..200); MLP completeness max residual " + num(worst_residual) +
              " at 200 steps over 20 instances (limit 1e-3)"};
}

Outcome winit_reduction() {
  double worst = 0.0;
  for (auto& t : random_triples()) {
    auto wi = config(Method::WinIT, t.seed);
    wi.winit_window = 1;
    worst = std::max(worst, oracle::max_abs_diff(winit(*t.model, t.x, wi),
                                                 feature_ablation(*t.model, t.x, config(Method::FA, t.seed))));
  }
  return {worst <= 1e-12, "max |WinIT(W=1) - FA| " + num(worst) + " over 20 triples"};
}

// --- determinism through the command-line pipeline ---------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TEMPSAL_CLI) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "tempsal_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "config.json");
    cfg << R"({"seed": 2024, "max_instances": 24, "model": {"kind": "mlp", "epochs": 20},
              "methods": ["FA", "AFO", "FP", "IG", "GS", "WinIT", "TSR", "WinTSR"]})";
  }
  const std::string cfg = " --config " + (root / "config.json").string();
  const std::pair<const char*, int> runs[] = {{"run_a", 1}, {"run_b", 1}, {"run_c", 4}};
  for (auto [name, workers] : runs) {
    const std::string common = cfg + " --workers " + std::to_string(workers) + " --out " + (root / name).string();
    for (const char* cmd : {"generate-data", "train", "attribute", "evaluate"}) {
      if (run_cli(std::string(cmd) + common) != 0) return {false, std::string(cmd) + " failed in " + name};
    }
  }
  std::size_t files = 0, differing_runs = 0, differing_workers = 0;
  for (const auto& e : fs::directory_iterator(root / "run_a")) {
    const auto name = e.path().filename();
    const std::string a = slurp(e.path());
    ++files;
    differing_runs += a != slurp(root / "run_b" / name) ? 1 : 0;
    // The resolved configs record the worker count itself.
    if (name.string().find(".config.json") == std::string::npos) {
      differing_workers += a != slurp(root / "run_c" / name) ? 1 : 0;
    }
  }
  fs::remove_all(root);
  return {files > 10 && differing_runs == 0 && differing_workers == 0,
          std::to_string(files) + " output files; " + std::to_string(differing_runs) +
              " differ between repeated runs, " + std::to_string(differing_workers) +
              " differ between 1 and 4 workers"};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"oracle equivalence", oracle_equivalence},
      {"exact call counts", call_counts},
      {"relative runtime ordering", runtime_ordering},
      {"planted saliency recovery", planted_recovery},
      {"fidelity metric separation", fidelity_separation},
      {"metric unit suite", metric_units},
      {"IG closed form and completeness", ig_closed_form_and_completeness},
      {"WinIT window-1 reduction", winit_reduction},
      {"pipeline determinism", determinism},
  };
  std::size_t failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failed += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << " (" << num(seconds_since(start)) << " s): "
              << outcome.detail << std::endl;
  }
  std::cout << (std::size(criteria) - failed) << "/" << std::size(criteria) << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
