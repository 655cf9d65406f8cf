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

#include <Eigen/QR>
#include <cmath>
#include <sstream>

#include "oracles.hpp"

using namespace tempsal;

namespace {

LinearForecaster single_weight_model() {
  // w = [[[[1,0],[0,0]]]], b = 0
  RowMatrixXd w(1, 4);
  w << 1, 0, 0, 0;
  return LinearForecaster({2, 2}, {1, 1}, w, Eigen::VectorXd::Zero(1));
}

double max_relative_error(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

std::vector<WindowInstance> windows_from(const std::vector<Matrix>& xs, const std::vector<double>& ys) {
  std::vector<WindowInstance> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    WindowInstance w;
    w.values = xs[i];
    w.target = Matrix(1, 1, ys[i]);
    w.end_time = static_cast<std::int64_t>(i);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace

TEST(Predict, LinearHandDotProduct) {
  const auto model = single_weight_model();
  const auto y = model.predict_one(Matrix{{3, 4}, {5, 6}});
  EXPECT_EQ(y.values(0, 0), 3.0);
  EXPECT_EQ(y.task, TaskKind::regression);
}

TEST(Predict, CounterAdvancesByBatchSize) {
  const auto model = oracle::random_linear(2, 3, 1, 2, 1);
  std::vector<Matrix> batch;
  for (int i = 0; i < 7; ++i) batch.push_back(oracle::random_matrix(2, 3, static_cast<std::uint64_t>(i)));
  const auto before = model.forward_calls();
  const auto out = model.predict(std::span<const Matrix>(batch));
  EXPECT_EQ(out.size(), 7u);
  EXPECT_EQ(model.forward_calls() - before, 7u);
  for (const auto& o : out) {
    EXPECT_EQ(o.values.rows(), 1u);
    EXPECT_EQ(o.values.cols(), 2u);
  }
}

TEST(Predict, RejectsNanShapeAndEmptyBatch) {
  const auto model = single_weight_model();
  EXPECT_THROW(model.predict_one(Matrix{{std::nan(""), 0}, {0, 0}}), std::invalid_argument);
  EXPECT_THROW(model.predict_one(Matrix{{1, 2, 3}, {1, 2, 3}}), std::invalid_argument);
  EXPECT_THROW(model.predict_flat(std::span<const Matrix>()), std::invalid_argument);
  EXPECT_EQ(model.forward_calls(), 0u);
}

TEST(Predict, DeterministicAndBatchInvariant) {
  const auto model = oracle::random_mlp(3, 4, 2, 2, 9);
  std::vector<Matrix> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(oracle::random_matrix(3, 4, 100u + static_cast<unsigned>(i)));
  const Matrix all = model.predict_flat(batch);
  EXPECT_EQ(all, model.predict_flat(batch));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Matrix one = model.predict_flat(std::span<const Matrix>(&batch[i], 1));
    for (std::size_t k = 0; k < one.cols(); ++k) EXPECT_NEAR(one(0, k), all(i, k), 1e-12);
  }
}

TEST(Predict, PredictorFailurePropagates) {
  FunctionPredictor failing(TaskKind::regression, {1, 1}, {1, 1},
                            [](const Matrix&, std::span<double>) { throw PredictorError("boom"); });
  EXPECT_THROW(failing.predict_one(Matrix{{1}}), PredictorError);
  FunctionPredictor nan_out(TaskKind::regression, {1, 1}, {1, 1},
                            [](const Matrix&, std::span<double> out) { out[0] = std::nan(""); });
  EXPECT_THROW(nan_out.predict_one(Matrix{{1}}), PredictorError);
}

TEST(Predict, CopiesStartWithFreshCounters) {
  const auto model = single_weight_model();
  model.predict_one(Matrix{{1, 1}, {1, 1}});
  const LinearForecaster copy = model;
  EXPECT_EQ(copy.forward_calls(), 0u);
  EXPECT_EQ(model.forward_calls(), 1u);
}

TEST(FitLinear, RecoversSingleWeightFromNoiselessData) {
  // y = 2 * x_{1,L} with J = 2, L = 3.
  std::vector<Matrix> xs;
  std::vector<double> ys;
  for (std::uint64_t i = 0; i < 40; ++i) {
    xs.push_back(oracle::random_matrix(2, 3, 500 + i));
    ys.push_back(2.0 * xs.back()(0, 2));
  }
  const auto fit = fit_linear(windows_from(xs, ys), 0.0);
  // Independent oracle: least squares through column-pivoted QR.
  Eigen::MatrixXd design(40, 7);
  Eigen::VectorXd target(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    for (Eigen::Index c = 0; c < 6; ++c) design(i, c) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    design(i, 6) = 1.0;
    target(i) = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd solution = design.colPivHouseholderQr().solve(target);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t l = 0; l < 3; ++l) {
      const double expected = (j == 0 && l == 2) ? 2.0 : 0.0;
      EXPECT_NEAR(fit.model.weight(0, 0, j, l), expected, 1e-8);
      EXPECT_NEAR(fit.model.weight(0, 0, j, l), solution(static_cast<Eigen::Index>(j * 3 + l)), 1e-8);
    }
  }
  EXPECT_NEAR(fit.model.bias()(0), 0.0, 1e-8);
  EXPECT_LT(fit.train_mse, 1e-16);
}

TEST(FitLinear, ConstantTargetGivesZeroWeightsAndBias) {
  std::vector<Matrix> xs;
  std::vector<double> ys;
  for (std::uint64_t i = 0; i < 30; ++i) {
    xs.push_back(oracle::random_matrix(1, 4, 900 + i));
    ys.push_back(3.5);
  }
  const auto fit = fit_linear(windows_from(xs, ys), 0.0);
  for (Eigen::Index c = 0; c < fit.model.weights().cols(); ++c) {
    EXPECT_NEAR(fit.model.weights()(0, c), 0.0, 1e-10);
  }
  EXPECT_NEAR(fit.model.bias()(0), 3.5, 1e-10);
}

TEST(FitLinear, Errors) {
  std::vector<Matrix> xs;
  std::vector<double> ys;
  for (std::uint64_t i = 0; i < 4; ++i) {
    xs.push_back(oracle::random_matrix(2, 3, i));
    ys.push_back(1.0);
  }
  EXPECT_THROW(fit_linear(windows_from(xs, ys), 0.0), FitError);
  EXPECT_NO_THROW(fit_linear(windows_from(xs, ys), 0.1));
  EXPECT_THROW(fit_linear(std::vector<WindowInstance>{}, 0.1), std::invalid_argument);
  EXPECT_THROW(fit_linear(windows_from(xs, ys), -1.0), std::invalid_argument);
}

TEST(Gradient, LinearEqualsWeightSlice) {
  const auto model = oracle::random_linear(3, 4, 2, 3, 17);
  const Matrix x = oracle::random_matrix(3, 4, 18);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t h = 0; h < 3; ++h) EXPECT_EQ(model.gradient(x, {o, h}), model.weight_slice({o, h}));
  }
  EXPECT_THROW(model.gradient(x, {2, 0}), std::out_of_range);
}

TEST(Gradient, ConstantPredictorIsZero) {
  const auto model = make_constant_predictor({2, 3}, {1, 2}, 4.0);
  EXPECT_EQ(model.gradient(oracle::random_matrix(2, 3, 1), {0, 1}), Matrix(2, 3, 0.0));
}

TEST(Gradient, UnsupportedWithoutFallback) {
  FunctionPredictor model(TaskKind::regression, {1, 2}, {1, 1},
                          [](const Matrix& x, std::span<double> out) { out[0] = 3.0 * x(0, 0); });
  EXPECT_THROW(model.gradient(Matrix{{1, 2}}, {0, 0}, false), PredictorError);
  const Matrix g = model.gradient(Matrix{{1, 2}}, {0, 0}, true);
  EXPECT_EQ(g(0, 1), 0.0);
}

TEST(FiniteDifference, ExactForLinearAndCountsCalls) {
  FunctionPredictor model(TaskKind::regression, {2, 3}, {1, 1},
                          [](const Matrix& x, std::span<double> out) { out[0] = 3.0 * x(0, 0); });
  const Matrix x = oracle::random_matrix(2, 3, 4);
  const auto before = model.forward_calls();
  const Matrix g = finite_difference_gradient(model, x, {0, 0}, 1e-3);
  EXPECT_EQ(model.forward_calls() - before, 2u * 2u * 3u);
  EXPECT_NEAR(g(0, 0), 3.0, 1e-9);
  for (std::size_t c = 1; c < g.size(); ++c) EXPECT_EQ(g[c], 0.0);
  EXPECT_THROW(finite_difference_gradient(model, x, {0, 0}, 0.0), std::invalid_argument);
  EXPECT_THROW(finite_difference_gradient(model, x, {0, 0}, -1.0), std::invalid_argument);
}

TEST(FiniteDifference, MatchesAnalyticGradientsOfNativeModels) {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto mlp = oracle::random_mlp(3, 5, 2, 1, 40 + trial,
                                        trial % 2 ? TaskKind::classification : TaskKind::regression);
    const auto lin = oracle::random_linear(3, 5, 1, 2, 40 + trial);
    const Matrix x = oracle::random_matrix(3, 5, 7000 + trial);
    EXPECT_LE(max_relative_error(mlp.jacobian(x), finite_difference_jacobian(mlp, x, 1e-3)), 1e-3)
        << "trial " << trial;
    EXPECT_LE(max_relative_error(lin.jacobian(x), finite_difference_jacobian(lin, x, 1e-3)), 1e-6);
  }
}

TEST(Mlp, SoftmaxRowsSumToOne) {
  const auto model = oracle::random_mlp(2, 6, 3, 1, 8, TaskKind::classification, {12, 6});
  std::vector<Matrix> batch;
  for (std::uint64_t i = 0; i < 1000; ++i) batch.push_back(oracle::random_matrix(2, 6, 3000 + i, 2.0));
  const Matrix out = model.predict_flat(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double s = 0.0;
    for (double p : out.row(i)) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(FitMlp, ZeroEpochsReturnsSeededInitialization) {
  SyntheticSpec spec;
  spec.task = TaskKind::classification;
  spec.length = 400;
  const auto bundle = normalize_dataset(generate_synthetic(spec));
  MlpOptions opts;
  opts.epochs = 0;
  opts.hidden = {8};
  const auto fit = fit_mlp(bundle, opts);
  const auto init = init_mlp(TaskKind::classification, {3, 24}, {2, 1}, {8}, opts.seed);
  ASSERT_EQ(fit.model.layers().size(), init.layers().size());
  for (std::size_t k = 0; k < init.layers().size(); ++k) {
    EXPECT_EQ(fit.model.layers()[k].weights, init.layers()[k].weights);
    EXPECT_EQ(fit.model.layers()[k].bias, init.layers()[k].bias);
  }
  EXPECT_TRUE(fit.loss_history.empty());
}

TEST(FitMlp, SameSeedIsBitIdentical) {
  SyntheticSpec spec;
  spec.length = 500;
  const auto bundle = normalize_dataset(generate_synthetic(spec));
  MlpOptions opts;
  opts.epochs = 3;
  opts.hidden = {8};
  const auto a = fit_mlp(bundle, opts);
  const auto b = fit_mlp(bundle, opts);
  for (std::size_t k = 0; k < a.model.layers().size(); ++k) {
    EXPECT_EQ(a.model.layers()[k].weights, b.model.layers()[k].weights);
  }
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(FitMlp, SeparableClassificationReachesHighValidationAccuracy) {
  SyntheticSpec spec;
  spec.task = TaskKind::classification;
  spec.length = 6000;  // ~4.8k training windows; 2.4k leaves the 72-input MLP near 0.93
  const auto bundle = normalize_dataset(generate_synthetic(spec));
  MlpOptions opts;
  opts.epochs = 30;
  const auto fit = fit_mlp(bundle, opts);
  std::size_t correct = 0;
  for (const auto& w : bundle.val) {
    const auto p = fit.model.predict_one(w.values).values;
    const int guess = p(1, 0) > p(0, 0) ? 1 : 0;
    correct += guess == w.label ? 1u : 0u;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(bundle.val.size());
  EXPECT_GE(accuracy, 0.95);
  EXPECT_LT(fit.loss_history.back(), fit.loss_history.front());
}

TEST(FitMlp, Errors) {
  SyntheticSpec spec;
  spec.task = TaskKind::classification;
  spec.length = 200;
  auto bundle = generate_synthetic(spec);
  MlpOptions opts;
  opts.learning_rate = 0.0;
  EXPECT_THROW(fit_mlp(bundle, opts), std::invalid_argument);
  opts = {};
  opts.hidden = {0};
  EXPECT_THROW(fit_mlp(bundle, opts), std::invalid_argument);
  opts = {};
  bundle.train.front().label = 5;
  EXPECT_THROW(fit_mlp(bundle, opts), std::invalid_argument);
  bundle.train.clear();
  EXPECT_THROW(fit_mlp(bundle, opts), std::invalid_argument);
}

TEST(ModelIo, RoundTripIsExact) {
  const auto lin = oracle::random_linear(2, 3, 1, 2, 77);
  const auto mlp = oracle::random_mlp(2, 3, 2, 1, 78, TaskKind::classification, {5, 4});
  for (const Predictor* model : {static_cast<const Predictor*>(&lin), static_cast<const Predictor*>(&mlp)}) {
    std::stringstream buffer;
    if (const auto* l = dynamic_cast<const LinearForecaster*>(model)) save_model(buffer, *l);
    if (const auto* m = dynamic_cast<const Mlp*>(model)) save_model(buffer, *m);
    const auto loaded = load_model(buffer);
    EXPECT_EQ(loaded->task(), model->task());
    const Matrix x = oracle::random_matrix(2, 3, 5);
    EXPECT_EQ(loaded->predict_one(x).values, model->predict_one(x).values);
  }
}

TEST(ModelIo, RejectsGarbage) {
  std::stringstream bad("not a model");
  EXPECT_THROW(load_model(bad), ModelFormatError);
  std::stringstream truncated("tempsal-model 1 linear regression 1 2 1 1\nridge_lambda 0\n1");
  EXPECT_THROW(load_model(truncated), ModelFormatError);
  std::stringstream version("tempsal-model 9 linear regression 1 2 1 1\n");
  EXPECT_THROW(load_model(version), ModelFormatError);
}
