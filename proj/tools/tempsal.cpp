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

// tempsal command line: generate-data, train, attribute, evaluate, benchmark.
// Every command resolves defaults < --config JSON < flags, stages its files
// in a scratch directory and moves them into --out only on success.

#include <unistd.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "tempsal/bridge.hpp"
#include "tempsal/tempsal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tempsal;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

json default_config() {
  return json{
      {"seed", 2024},
      {"workers", 1},
      {"out", "tempsal-run"},
      {"lookback", 24},
      {"horizon", 1},
      {"data",
       {{"source", "synthetic"},
        {"task", "regression"},
        {"features", 3},
        {"length", 2000},
        {"noise_std", 0.0},
        {"ar_coefficient", 0.7},
        {"classes", 2},
        {"planted",
         json::array({{{"feature", 0}, {"lag", 1}, {"weight", 1.0}},
                      {{"feature", 1}, {"lag", 5}, {"weight", -0.8}},
                      {{"feature", 2}, {"lag", 12}, {"weight", 0.6}}})},
        {"path", ""},
        {"time_column", ""},
        {"feature_columns", json::array()},
        {"target_columns", json::array()},
        {"calendar_features", false}}},
      {"model",
       {{"kind", "linear"},
        {"ridge_lambda", 0.0},
        {"hidden", json::array({32})},
        {"epochs", 50},
        {"learning_rate", 1e-3},
        {"batch_size", 32}}},
      {"bridge", ""},
      {"methods", json::array({"FA", "WinTSR"})},
      {"attribution",
       {{"baseline", "standard_normal"},
        {"ig_steps", 50},
        {"gs_samples", 20},
        {"afo_repeats", 10},
        {"fp_repeats", 5},
        {"fp_batch", 32},
        {"winit_window", nullptr},
        {"tsr_alpha", 0.55},
        {"wintsr_skip_threshold", 0.0},
        {"time_reduction", "per_output"},
        {"normalization", "max"}}},
      {"topk", json::array({5.0, 7.5, 10.0, 15.0})},
      {"evaluation", {{"random_baseline", true}, {"scope", "per_slice"}}},
      {"max_instances", 0},
      {"heatmaps", 3}};
}

// Recursively overlays `patch` onto `base`; unknown keys are rejected so that
// typos in a config file do not silently fall back to defaults.
void overlay(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw UsageError("config: '" + path + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw UsageError("config: unknown key '" + where + "'");
    if (base[key].is_object() && value.is_object()) {
      overlay(base[key], value, where);
    } else {
      base[key] = value;
    }
  }
}

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::parse_number(item);
    if (!v) throw UsageError(std::string("--") + what + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers, lookback, horizon;
  std::string out, methods, topk, bridge;
};

json resolve_config(const Flags& flags) {
  json cfg = default_config();
  if (!flags.config.empty()) {
    std::ifstream in(flags.config);
    if (!in) throw UsageError("cannot open config file '" + flags.config + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file '" + flags.config + "' is not valid JSON: " + e.what());
    }
    overlay(cfg, file, "");
  }
  if (flags.seed) cfg["seed"] = *flags.seed;
  if (flags.workers) cfg["workers"] = *flags.workers;
  if (flags.lookback) cfg["lookback"] = *flags.lookback;
  if (flags.horizon) cfg["horizon"] = *flags.horizon;
  if (!flags.out.empty()) cfg["out"] = flags.out;
  if (!flags.methods.empty()) cfg["methods"] = parse_name_list(flags.methods);
  if (!flags.topk.empty()) cfg["topk"] = parse_number_list(flags.topk, "topk");
  if (!flags.bridge.empty()) cfg["bridge"] = flags.bridge;
  return cfg;
}

template <typename T>
T get(const json& node, const char* key) {
  try {
    return node.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config: '") + key + "' has the wrong type");
  }
}

SyntheticSpec synthetic_spec(const json& cfg) {
  const json& d = cfg["data"];
  SyntheticSpec spec;
  spec.task = parse_task(get<std::string>(d, "task"));
  spec.features = get<std::size_t>(d, "features");
  spec.lags = get<std::size_t>(cfg, "lookback");
  spec.horizons = get<std::size_t>(cfg, "horizon");
  spec.classes = get<std::size_t>(d, "classes");
  spec.length = get<std::size_t>(d, "length");
  spec.noise_std = get<double>(d, "noise_std");
  spec.ar_coefficient = get<double>(d, "ar_coefficient");
  spec.seed = get<std::uint64_t>(cfg, "seed");
  spec.planted.clear();
  for (const auto& p : d.at("planted")) {
    spec.planted.push_back({get<std::size_t>(p, "feature"), get<std::size_t>(p, "lag"), get<double>(p, "weight")});
  }
  validate_synthetic_spec(spec);
  return spec;
}

bool is_synthetic(const json& cfg) {
  const auto source = get<std::string>(cfg["data"], "source");
  if (source != "synthetic" && source != "csv") {
    throw UsageError("config: data.source must be 'synthetic' or 'csv', got '" + source + "'");
  }
  return source == "synthetic";
}

// Normalized dataset for every downstream command.
DatasetBundle load_bundle(const json& cfg) {
  if (is_synthetic(cfg)) return normalize_dataset(generate_synthetic(synthetic_spec(cfg)));
  const json& d = cfg["data"];
  if (parse_task(get<std::string>(d, "task")) != TaskKind::regression) {
    throw UsageError("CSV datasets are supported for regression only");
  }
  const auto path = get<std::string>(d, "path");
  if (path.empty()) throw UsageError("config: data.path is required for a CSV source");
  CsvSchema schema;
  schema.time_column = get<std::string>(d, "time_column");
  schema.feature_columns = get<std::vector<std::string>>(d, "feature_columns");
  schema.target_columns = get<std::vector<std::string>>(d, "target_columns");
  schema.calendar_features = get<bool>(d, "calendar_features");
  if (schema.target_columns.empty()) throw UsageError("config: data.target_columns is empty");
  const LoadedSeries series = load_csv(path, schema);
  DatasetBundle bundle;
  bundle.task = TaskKind::regression;
  bundle.features = series.features.cols();
  bundle.lags = get<std::size_t>(cfg, "lookback");
  bundle.outputs = series.targets.cols();
  bundle.horizons = get<std::size_t>(cfg, "horizon");
  bundle.feature_names = series.feature_names;
  split_chronological(sliding_windows(series.features, series.targets, bundle.lags, bundle.horizons,
                                      series.feature_names),
                      bundle);
  return normalize_dataset(std::move(bundle));
}

std::vector<Method> configured_methods(const json& cfg) {
  std::vector<Method> out;
  for (const auto& name : get<std::vector<std::string>>(cfg, "methods")) out.push_back(parse_method(name));
  if (out.empty()) throw UsageError("no methods configured");
  return out;
}

AttributionConfig attribution_config(const json& cfg, Method m) {
  const json& a = cfg["attribution"];
  AttributionConfig out;
  out.method = m;
  out.baseline.kind = parse_baseline_kind(get<std::string>(a, "baseline"));
  if (out.baseline.kind == BaselineKind::fixed_matrix) {
    throw UsageError("config: attribution.baseline must be 'standard_normal' or 'zeros'");
  }
  out.baseline.seed = get<std::uint64_t>(cfg, "seed");
  out.ig_steps = get<std::size_t>(a, "ig_steps");
  out.gs_samples = get<std::size_t>(a, "gs_samples");
  out.afo_repeats = get<std::size_t>(a, "afo_repeats");
  out.fp_repeats = get<std::size_t>(a, "fp_repeats");
  if (!a.at("winit_window").is_null()) out.winit_window = get<std::size_t>(a, "winit_window");
  out.tsr_alpha = get<double>(a, "tsr_alpha");
  out.wintsr_skip_threshold = get<double>(a, "wintsr_skip_threshold");
  const auto reduction = get<std::string>(a, "time_reduction");
  if (reduction == "per_output") {
    out.time_reduction = TimeReduction::per_output;
  } else if (reduction == "aggregate") {
    out.time_reduction = TimeReduction::aggregate;
  } else {
    throw UsageError("config: attribution.time_reduction must be 'per_output' or 'aggregate'");
  }
  out.normalization = parse_normalization(get<std::string>(a, "normalization"));
  out.validate();
  return out;
}

TopKGrid topk_grid(const json& cfg) {
  TopKGrid grid{get<std::vector<double>>(cfg, "topk")};
  grid.validate();
  return grid;
}

// ---------------------------------------------------------------------------
// Output staging

class Staging {
 public:
  explicit Staging(fs::path out) : out_(std::move(out)) {
    const fs::path parent = out_.has_parent_path() ? out_.parent_path() : fs::path(".");
    fs::create_directories(parent);
    dir_ = parent / (".tempsal-staging-" + std::to_string(::getpid()) + "-" + out_.filename().string());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Staging() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;

  fs::path file(const std::string& name) const { return dir_ / name; }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(file(name));
    if (!out) throw std::runtime_error("cannot write '" + file(name).string() + "'");
    return out;
  }

  void commit() {
    fs::create_directories(out_);
    for (const auto& entry : fs::directory_iterator(dir_)) {
      fs::rename(entry.path(), out_ / entry.path().filename());
    }
  }

 private:
  fs::path out_;
  fs::path dir_;
};

void write_config_copy(const Staging& stage, const std::string& command, const json& cfg) {
  // The directory is implied by where the copy lives; leaving it out keeps
  // runs into different directories byte-identical.
  json copy = cfg;
  copy.erase("out");
  auto out = stage.open(command + ".config.json");
  out << copy.dump(2) << '\n';
}

fs::path out_dir(const json& cfg) { return fs::path(get<std::string>(cfg, "out")); }

// Native model from the output directory, or the configured bridge.
std::unique_ptr<Predictor> open_predictor(const json& cfg, const DatasetBundle& bundle) {
  const auto bridge = get<std::string>(cfg, "bridge");
  std::unique_ptr<Predictor> model;
  if (!bridge.empty()) {
    BridgeConfig bc;
    bc.command = split_command(bridge);
    model = BridgePredictor::connect(bc);
  } else {
    const fs::path path = out_dir(cfg) / "model.txt";
    if (!fs::exists(path)) {
      throw UsageError("no model at '" + path.string() + "'; run 'tempsal train' first or pass --bridge");
    }
    model = load_model_file(path.string());
  }
  const auto in = model->input_shape();
  const auto out = model->output_shape();
  if (in.features != bundle.features || in.lags != bundle.lags || out.horizons != bundle.horizons) {
    throw UsageError("predictor shape (" + std::to_string(in.features) + " features, " +
                     std::to_string(in.lags) + " lags, " + std::to_string(out.horizons) +
                     " horizons) does not match the dataset");
  }
  return model;
}

std::vector<Matrix> evaluation_instances(const json& cfg, const DatasetBundle& bundle, std::vector<int>* labels) {
  const auto cap = get<std::size_t>(cfg, "max_instances");
  const std::size_t n = cap == 0 ? bundle.test.size() : std::min(cap, bundle.test.size());
  std::vector<Matrix> xs;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(bundle.test[i].values);
    if (labels) labels->push_back(bundle.test[i].label);
  }
  return xs;
}

std::string saliency_file(Method m) { return "saliency_" + std::string(method_name(m)) + ".csv"; }

// ---------------------------------------------------------------------------
// Commands

void cmd_generate_data(const json& cfg) {
  if (!is_synthetic(cfg)) throw UsageError("generate-data needs a synthetic data source");
  const SyntheticSpec spec = synthetic_spec(cfg);
  const auto series = synthetic_series(spec);
  Staging stage(out_dir(cfg));
  write_series_csv(stage.file("series.csv").string(), series.features, series.names, &series.target);
  {
    auto out = stage.open("ground_truth.csv");
    const Matrix mask = planted_mask(spec);
    out << "j,l,planted\n";
    for (std::size_t j = 0; j < mask.rows(); ++j) {
      for (std::size_t l = 0; l < mask.cols(); ++l) out << j << ',' << l << ',' << mask(j, l) << '\n';
    }
  }
  write_config_copy(stage, "generate-data", cfg);
  stage.commit();
  spdlog::info("wrote {} time steps to {}", spec.length, out_dir(cfg).string());
}

json regression_metrics(const Predictor& model, const std::vector<WindowInstance>& split) {
  double abs_sum = 0.0, sq_sum = 0.0;
  std::size_t count = 0;
  for (const auto& w : split) {
    const Matrix y = model.predict_one(w.values).values;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double e = y[i] - w.target[i];
      abs_sum += std::abs(e);
      sq_sum += e * e;
      ++count;
    }
  }
  return {{"mae", abs_sum / static_cast<double>(count)}, {"mse", sq_sum / static_cast<double>(count)}};
}

json classification_metrics(const Predictor& model, const std::vector<WindowInstance>& split) {
  const std::size_t classes = model.output_shape().outputs;
  std::vector<int> labels;
  std::vector<std::vector<double>> scores(classes);
  std::size_t correct = 0;
  for (const auto& w : split) {
    const Matrix p = model.predict_one(w.values).values;
    std::size_t best = 0;
    for (std::size_t o = 0; o < classes; ++o) {
      scores[o].push_back(p(o, 0));
      if (p(o, 0) > p(best, 0)) best = o;
    }
    correct += static_cast<int>(best) == w.label ? 1 : 0;
    labels.push_back(w.label);
  }
  // One-vs-rest AUC averaged over classes present in the split.
  double auc = 0.0;
  std::size_t used = 0;
  for (std::size_t o = 0; o < classes; ++o) {
    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] == static_cast<int>(o) ? 1 : 0;
    const auto positives = std::count(binary.begin(), binary.end(), 1);
    if (positives == 0 || positives == static_cast<long>(binary.size())) continue;
    auc += auc_roc(binary, scores[o]);
    ++used;
  }
  return {{"accuracy", static_cast<double>(correct) / static_cast<double>(split.size())},
          {"auc", used ? json(auc / static_cast<double>(used)) : json(nullptr)}};
}

void cmd_train(const json& cfg) {
  if (!get<std::string>(cfg, "bridge").empty()) throw UsageError("train fits native models; drop --bridge");
  const DatasetBundle bundle = load_bundle(cfg);
  const json& m = cfg["model"];
  const auto kind = get<std::string>(m, "kind");
  std::unique_ptr<Predictor> model;
  json metrics;
  if (kind == "linear") {
    auto fit = fit_linear(bundle, get<double>(m, "ridge_lambda"));
    metrics["train_mse"] = fit.train_mse;
    model = std::make_unique<LinearForecaster>(std::move(fit.model));
  } else if (kind == "mlp") {
    MlpOptions opts;
    opts.hidden = get<std::vector<std::size_t>>(m, "hidden");
    opts.epochs = get<std::size_t>(m, "epochs");
    opts.learning_rate = get<double>(m, "learning_rate");
    opts.batch_size = get<std::size_t>(m, "batch_size");
    opts.seed = get<std::uint64_t>(cfg, "seed");
    auto fit = fit_mlp(bundle, opts);
    if (!fit.loss_history.empty()) metrics["final_train_loss"] = fit.loss_history.back();
    model = std::make_unique<Mlp>(std::move(fit.model));
  } else {
    throw UsageError("config: model.kind must be 'linear' or 'mlp', got '" + kind + "'");
  }
  metrics["task"] = std::string(task_name(bundle.task));
  metrics["model"] = kind;
  for (const auto* name : {"val", "test"}) {
    const auto& split = std::string(name) == "val" ? bundle.val : bundle.test;
    metrics[name] = bundle.task == TaskKind::regression ? regression_metrics(*model, split)
                                                        : classification_metrics(*model, split);
  }
  Staging stage(out_dir(cfg));
  save_model_file(stage.file("model.txt").string(), *model);
  stage.open("metrics.json") << metrics.dump(2) << '\n';
  write_config_copy(stage, "train", cfg);
  stage.commit();
  std::cout << metrics.dump(2) << '\n';
}

void cmd_attribute(const json& cfg) {
  const auto methods = configured_methods(cfg);
  const DatasetBundle bundle = load_bundle(cfg);
  const auto model = open_predictor(cfg, bundle);
  const auto xs = evaluation_instances(cfg, bundle, nullptr);
  std::vector<Matrix> train_values;
  for (const auto& w : bundle.train) train_values.push_back(w.values);
  const FeaturePool pool = build_feature_pool(train_values);
  AttributeOptions opts;
  opts.seed = get<std::uint64_t>(cfg, "seed");
  opts.workers = std::max<std::size_t>(1, get<std::size_t>(cfg, "workers"));
  opts.fp_batch = get<std::size_t>(cfg["attribution"], "fp_batch");
  opts.pool = &pool;
  const auto heatmaps = std::min(get<std::size_t>(cfg, "heatmaps"), xs.size());

  Staging stage(out_dir(cfg));
  auto calls = stage.open("attribution_calls.csv");
  calls << "method,instances,forward_calls,gradient_calls\n";
  for (Method m : methods) {
    const auto before = model->forward_calls();
    const auto grads_before = model->gradient_calls();
    const auto maps = attribute_dataset(*model, xs, attribution_config(cfg, m), opts);
    calls << method_name(m) << ',' << xs.size() << ',' << model->forward_calls() - before << ','
          << model->gradient_calls() - grads_before << '\n';
    {
      auto out = stage.open(saliency_file(m));
      write_saliency_csv(out, maps);
    }
    for (std::size_t i = 0; i < heatmaps; ++i) {
      auto out = stage.open("heatmap_" + std::string(method_name(m)) + "_" + std::to_string(i) + ".svg");
      write_heatmap_svg(out, mean_over_outputs(maps[i]), bundle.feature_names,
                        std::string(method_name(m)) + " test instance " + std::to_string(i));
    }
    spdlog::info("{}: {} maps", method_name(m), maps.size());
  }
  calls.close();
  write_config_copy(stage, "attribute", cfg);
  stage.commit();
}

std::map<std::string, std::uint64_t> read_call_counts(const fs::path& path) {
  std::map<std::string, std::uint64_t> out;
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return out;
  while (std::getline(in, line)) {
    const auto fields = detail::split_csv_line(line);
    if (fields.size() >= 3) out[fields[0]] = std::stoull(fields[2]);
  }
  return out;
}

void cmd_evaluate(const json& cfg) {
  const auto methods = configured_methods(cfg);
  const DatasetBundle bundle = load_bundle(cfg);
  const auto model = open_predictor(cfg, bundle);
  std::vector<int> labels;
  const auto xs = evaluation_instances(cfg, bundle, &labels);
  const MapShape shape{model->output_shape().outputs, model->output_shape().horizons, bundle.features,
                       bundle.lags};
  const fs::path dir = out_dir(cfg);
  std::vector<std::pair<std::string, std::vector<SaliencyMap>>> maps;
  for (Method m : methods) {
    const fs::path path = dir / saliency_file(m);
    std::ifstream in(path);
    if (!in) {
      throw UsageError("no saliency maps for method '" + std::string(method_name(m)) + "' at '" +
                       path.string() + "'; run 'tempsal attribute' first");
    }
    auto loaded = read_saliency_csv(in, shape, std::string(method_name(m)));
    if (loaded.size() != xs.size()) {
      throw UsageError("'" + path.string() + "' holds " + std::to_string(loaded.size()) +
                       " maps but the evaluation set has " + std::to_string(xs.size()) + " instances");
    }
    maps.emplace_back(std::string(method_name(m)), std::move(loaded));
  }
  const json& e = cfg["evaluation"];
  if (get<bool>(e, "random_baseline")) {
    std::vector<SaliencyMap> random;
    const auto seed = derive_seed(get<std::uint64_t>(cfg, "seed"), streams::kRandomMap);
    for (std::size_t i = 0; i < xs.size(); ++i) random.push_back(random_saliency_map(shape, derive_seed(seed, i)));
    maps.emplace_back("random", std::move(random));
  }
  EvalOptions options;
  options.workers = std::max<std::size_t>(1, get<std::size_t>(cfg, "workers"));
  const auto scope = get<std::string>(e, "scope");
  if (scope == "global") {
    options.scope = TopKScope::global;
  } else if (scope != "per_slice") {
    throw UsageError("config: evaluation.scope must be 'per_slice' or 'global'");
  }
  const BaselineSpec baseline{parse_baseline_kind(get<std::string>(cfg["attribution"], "baseline")),
                              get<std::uint64_t>(cfg, "seed"),
                              {}};
  EvalReport report = evaluate_methods(*model, xs, labels, maps, topk_grid(cfg), baseline, options);
  const auto calls = read_call_counts(dir / "attribution_calls.csv");
  for (auto& m : report.methods) {
    if (auto it = calls.find(m.method); it != calls.end()) m.forward_calls = it->second;
  }
  Staging stage(dir);
  {
    auto out = stage.open("eval.csv");
    write_eval_csv(out, report);
  }
  {
    auto out = stage.open("eval.txt");
    write_eval_text(out, report);
  }
  write_config_copy(stage, "evaluate", cfg);
  stage.commit();
  write_eval_text(std::cout, report);
}

void cmd_benchmark(const json& cfg) {
  const auto methods = configured_methods(cfg);
  const DatasetBundle bundle = load_bundle(cfg);
  const auto model = open_predictor(cfg, bundle);
  const auto xs = evaluation_instances(cfg, bundle, nullptr);
  std::vector<AttributionConfig> configs;
  for (Method m : methods) configs.push_back(attribution_config(cfg, m));
  std::vector<Matrix> train_values;
  for (const auto& w : bundle.train) train_values.push_back(w.values);
  const FeaturePool pool = build_feature_pool(train_values);
  RuntimeOptions options;
  options.attribute.seed = get<std::uint64_t>(cfg, "seed");
  options.attribute.workers = std::max<std::size_t>(1, get<std::size_t>(cfg, "workers"));
  options.attribute.fp_batch = get<std::size_t>(cfg["attribution"], "fp_batch");
  options.attribute.pool = &pool;
  const auto rows = measure_runtime(*model, xs, configs, options);
  Staging stage(out_dir(cfg));
  {
    auto out = stage.open("runtime.csv");
    write_runtime_csv(out, rows);
  }
  {
    auto out = stage.open("runtime.txt");
    write_runtime_text(out, rows);
  }
  write_config_copy(stage, "benchmark", cfg);
  stage.commit();
  write_runtime_text(std::cout, rows);
}

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("TEMPSAL_LOG")) {
    const std::string v = level;
    if (v == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (v == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (v == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      spdlog::warn("TEMPSAL_LOG='{}' not recognized; use error, info or debug", v);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Temporal saliency for time-series forecasters"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON run configuration");
    cmd->add_option("--seed", flags.seed, "Run seed (default 2024)");
    cmd->add_option("--workers", flags.workers, "Worker threads");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--methods", flags.methods, "Comma-separated methods: " + supported_method_names());
    cmd->add_option("--lookback", flags.lookback, "Look-back window L");
    cmd->add_option("--horizon", flags.horizon, "Forecast horizon");
    cmd->add_option("--topk", flags.topk, "Comma-separated top-k percentages");
    cmd->add_option("--bridge", flags.bridge, "Command serving an external model");
  };
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const json&);
  };
  const Command commands[] = {
      {"generate-data", "Write a planted synthetic series and its ground-truth mask", cmd_generate_data},
      {"train", "Fit a native predictor and report validation/test metrics", cmd_train},
      {"attribute", "Compute saliency maps on the test split", cmd_attribute},
      {"evaluate", "Score saliency maps with comprehensiveness and sufficiency", cmd_evaluate},
      {"benchmark", "Time each method and count forward calls", cmd_benchmark},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    const json cfg = resolve_config(flags);
    for (const auto& [sub, command] : subs) {
      if (sub->parsed()) command->run(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "tempsal: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
