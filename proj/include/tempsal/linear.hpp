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

#ifndef TEMPSAL_LINEAR_HPP_
#define TEMPSAL_LINEAR_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "tempsal/core.hpp"
#include "tempsal/data.hpp"
#include "tempsal/predictor.hpp"

namespace tempsal {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Affine forecaster f(X)_{o,h} = sum_{j,l} w[o][h][j][l] x_{j,l} + b[o][h].
class LinearForecaster final : public Predictor {
 public:
  // weights: (O*H) x (J*L), bias: O*H.
  LinearForecaster(InputShape input, OutputShape output, RowMatrixXd weights,
                   Eigen::VectorXd bias, double ridge_lambda = 0.0,
                   TaskKind task = TaskKind::regression)
      : Predictor(task, input, output, Capabilities{.has_gradients = true}),
        weights_(std::move(weights)),
        bias_(std::move(bias)),
        ridge_lambda_(ridge_lambda) {
    if (weights_.rows() != static_cast<Eigen::Index>(output.size()) ||
        weights_.cols() != static_cast<Eigen::Index>(input.cells()) ||
        bias_.size() != static_cast<Eigen::Index>(output.size())) {
      throw std::invalid_argument("LinearForecaster: parameter shapes do not match");
    }
  }

  const RowMatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  double ridge_lambda() const { return ridge_lambda_; }

  double weight(std::size_t o, std::size_t h, std::size_t j, std::size_t l) const {
    return weights_(static_cast<Eigen::Index>(o * output_shape().horizons + h),
                    static_cast<Eigen::Index>(j * input_shape().lags + l));
  }

  // Weight slice for one output element as a J x L matrix.
  Matrix weight_slice(OutputIndex index) const {
    Matrix out(input_shape().features, input_shape().lags);
    const auto row = static_cast<Eigen::Index>(index.output * output_shape().horizons + index.horizon);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = weights_(row, static_cast<Eigen::Index>(c));
    return out;
  }

 protected:
  void evaluate(std::span<const Matrix> batch, std::span<double> out) const override {
    const auto width = static_cast<Eigen::Index>(output_shape().size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Eigen::Map<const Eigen::VectorXd> x(batch[i].data(), static_cast<Eigen::Index>(batch[i].size()));
      Eigen::Map<Eigen::VectorXd> y(out.data() + i * static_cast<std::size_t>(width), width);
      y.noalias() = weights_ * x;
      y += bias_;
    }
  }

  void evaluate_jacobian(const Matrix&, Matrix& jac) const override {
    Eigen::Map<RowMatrixXd>(jac.data(), weights_.rows(), weights_.cols()) = weights_;
  }

 private:
  RowMatrixXd weights_;
  Eigen::VectorXd bias_;
  double ridge_lambda_;
};

struct LinearFit {
  LinearForecaster model;
  double train_mse = 0.0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-form ridge regression on flattened J*L inputs. The intercept is not
// penalized: inputs and targets are centered, the normal equations
// (Xc^T Xc + lambda I) W = Xc^T Yc are solved by Cholesky, and the bias
// recovers the means.
inline LinearFit fit_linear(const std::vector<WindowInstance>& train, double ridge_lambda) {
  if (ridge_lambda < 0.0) throw std::invalid_argument("fit_linear: ridge_lambda must be >= 0");
  if (train.empty()) throw std::invalid_argument("fit_linear: empty training set");
  const std::size_t j_count = train.front().features();
  const std::size_t lags = train.front().lags();
  const std::size_t o_count = train.front().target.rows();
  const std::size_t h_count = train.front().target.cols();
  if (o_count == 0 || h_count == 0) throw std::invalid_argument("fit_linear: instances carry no targets");
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto p = static_cast<Eigen::Index>(j_count * lags);
  const auto q = static_cast<Eigen::Index>(o_count * h_count);
  if (ridge_lambda == 0.0 && n - 1 < p) {
    throw FitError("fit_linear: " + std::to_string(n) + " samples cannot determine " +
                   std::to_string(p) + " weights without regularization (rank deficient)");
  }

  RowMatrixXd x(n, p);
  RowMatrixXd y(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = train[static_cast<std::size_t>(i)];
    if (w.values.rows() != j_count || w.values.cols() != lags || w.target.rows() != o_count ||
        w.target.cols() != h_count) {
      throw std::invalid_argument("fit_linear: inconsistent instance shapes");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(w.values.data(), p);
    y.row(i) = Eigen::Map<const Eigen::RowVectorXd>(w.target.data(), q);
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  x.rowwise() -= x_mean;
  y.rowwise() -= y_mean;

  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += ridge_lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
    throw FitError("fit_linear: singular normal equations; increase ridge_lambda");
  }
  const Eigen::MatrixXd coef = llt.solve(x.transpose() * y);  // p x q
  RowMatrixXd weights = coef.transpose();
  Eigen::VectorXd bias = (y_mean - x_mean * coef).transpose();

  const RowMatrixXd residual = x * coef - y;
  const double mse = residual.squaredNorm() / static_cast<double>(n * q);
  return LinearFit{LinearForecaster(InputShape{j_count, lags}, OutputShape{o_count, h_count},
                                    std::move(weights), std::move(bias), ridge_lambda),
                   mse};
}

inline LinearFit fit_linear(const DatasetBundle& bundle, double ridge_lambda) {
  return fit_linear(bundle.train, ridge_lambda);
}

}  // namespace tempsal

#endif  // TEMPSAL_LINEAR_HPP_
