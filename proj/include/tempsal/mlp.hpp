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

// Small fully connected network over the flattened J*L window. Hidden layers
// use the rectifier (subgradient 0 at 0); the head is a softmax over O classes
// for classification and identity for regression.

#ifndef TEMPSAL_MLP_HPP_
#define TEMPSAL_MLP_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "tempsal/core.hpp"
#include "tempsal/data.hpp"
#include "tempsal/linear.hpp"
#include "tempsal/predictor.hpp"

namespace tempsal {

struct DenseLayer {
  RowMatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

class Mlp final : public Predictor {
 public:
  Mlp(TaskKind task, InputShape input, OutputShape output, std::vector<DenseLayer> layers)
      : Predictor(task, input, output, Capabilities{.has_gradients = true}),
        layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("Mlp: at least one layer required");
    Eigen::Index in = static_cast<Eigen::Index>(input.cells());
    for (const auto& layer : layers_) {
      if (layer.weights.cols() != in || layer.bias.size() != layer.weights.rows()) {
        throw std::invalid_argument("Mlp: layer shapes do not chain");
      }
      in = layer.weights.rows();
    }
    if (in != static_cast<Eigen::Index>(output.size())) {
      throw std::invalid_argument("Mlp: last layer width must equal O*H");
    }
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  // Logits or regression outputs for a row-major n x (J*L) batch.
  RowMatrixXd forward_batch(const RowMatrixXd& x) const {
    RowMatrixXd a = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      RowMatrixXd z = a * layers_[k].weights.transpose();
      z.rowwise() += layers_[k].bias.transpose();
      if (k + 1 < layers_.size()) z = z.cwiseMax(0.0);
      a = std::move(z);
    }
    if (task() == TaskKind::classification) softmax_rows(a);
    return a;
  }

  static void softmax_rows(RowMatrixXd& z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double m = z.row(i).maxCoeff();
      z.row(i) = (z.row(i).array() - m).exp();
      z.row(i) /= z.row(i).sum();
    }
  }

 protected:
  void evaluate(std::span<const Matrix> batch, std::span<double> out) const override {
    // One instance at a time: a blocked matrix product would round
    // differently depending on batch composition.
    const auto cells = static_cast<Eigen::Index>(input_shape().cells());
    const std::size_t width = output_shape().size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(batch[i].data(), cells);
      for (std::size_t k = 0; k < layers_.size(); ++k) {
        Eigen::VectorXd z = layers_[k].weights * a + layers_[k].bias;
        if (k + 1 < layers_.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
      }
      if (task() == TaskKind::classification) {
        a = (a.array() - a.maxCoeff()).exp();
        a /= a.sum();
      }
      std::copy(a.data(), a.data() + width, out.data() + i * width);
    }
  }

  void evaluate_jacobian(const Matrix& x_in, Matrix& jac) const override {
    const auto cells = static_cast<Eigen::Index>(input_shape().cells());
    std::vector<Eigen::VectorXd> masks;
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x_in.data(), cells);
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      Eigen::VectorXd z = layers_[k].weights * a + layers_[k].bias;
      if (k + 1 < layers_.size()) {
        masks.push_back((z.array() > 0.0).cast<double>().matrix());
        z = z.cwiseMax(0.0);
      }
      a = std::move(z);
    }
    RowMatrixXd g = layers_.back().weights;
    for (std::size_t k = layers_.size() - 1; k-- > 0;) {
      g = g * masks[k].asDiagonal();
      g = g * layers_[k].weights;
    }
    if (task() == TaskKind::classification) {
      Eigen::VectorXd p = (a.array() - a.maxCoeff()).exp();
      p /= p.sum();
      RowMatrixXd s = -p * p.transpose();
      s.diagonal() += p;
      g = s * g;
    }
    Eigen::Map<RowMatrixXd>(jac.data(), g.rows(), g.cols()) = g;
  }

 private:
  std::vector<DenseLayer> layers_;
};

struct MlpOptions {
  std::vector<std::size_t> hidden = {32};
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::uint64_t seed = 2024;
  std::size_t batch_size = 32;
  std::size_t classes = 2;  // classification only
};

struct MlpFit {
  Mlp model;
  std::vector<double> loss_history;  // mean training loss per epoch
};

// He-normal weights, zero biases.
inline Mlp init_mlp(TaskKind task, InputShape input, OutputShape output,
                    const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DenseLayer> layers;
  std::size_t in = input.cells();
  std::vector<std::size_t> widths = hidden;
  widths.push_back(output.size());
  for (std::size_t width : widths) {
    if (width == 0) throw std::invalid_argument("Mlp: layer width must be >= 1");
    DenseLayer layer{RowMatrixXd(width, in), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width))};
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = scale * normal(rng);
    }
    layers.push_back(std::move(layer));
    in = width;
  }
  return Mlp(task, input, output, std::move(layers));
}

// Mini-batch gradient descent with Adam updates. Cross-entropy for
// classification, half squared error for regression. Deterministic in `seed`.
inline MlpFit fit_mlp(const std::vector<WindowInstance>& train, TaskKind task,
                      const MlpOptions& options) {
  if (train.empty()) throw std::invalid_argument("fit_mlp: empty training set");
  if (options.hidden.empty() || std::any_of(options.hidden.begin(), options.hidden.end(),
                                            [](std::size_t h) { return h == 0; })) {
    throw std::invalid_argument("fit_mlp: hidden sizes must be >= 1");
  }
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("fit_mlp: learning rate must be > 0");
  if (options.batch_size == 0) throw std::invalid_argument("fit_mlp: batch size must be >= 1");
  const InputShape input{train.front().features(), train.front().lags()};
  OutputShape output;
  if (task == TaskKind::classification) {
    output = {options.classes, 1};
    for (const auto& w : train) {
      if (w.label < 0 || static_cast<std::size_t>(w.label) >= options.classes) {
        throw std::invalid_argument("fit_mlp: label " + std::to_string(w.label) +
                                    " outside [0, " + std::to_string(options.classes) + ")");
      }
    }
  } else {
    output = {train.front().target.rows(), train.front().target.cols()};
    if (output.size() == 0) throw std::invalid_argument("fit_mlp: instances carry no targets");
  }

  const auto n = static_cast<Eigen::Index>(train.size());
  const auto p = static_cast<Eigen::Index>(input.cells());
  const auto q = static_cast<Eigen::Index>(output.size());
  RowMatrixXd x(n, p);
  RowMatrixXd y = RowMatrixXd::Zero(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = train[static_cast<std::size_t>(i)];
    if (w.values.rows() != input.features || w.values.cols() != input.lags) {
      throw std::invalid_argument("fit_mlp: inconsistent instance shapes");
    }
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(w.values.data(), p);
    if (task == TaskKind::classification) {
      y(i, w.label) = 1.0;
    } else {
      y.row(i) = Eigen::Map<const Eigen::RowVectorXd>(w.target.data(), q);
    }
  }

  Mlp model = init_mlp(task, input, output, options.hidden, options.seed);
  auto& layers = model.mutable_layers();
  const std::size_t depth = layers.size();
  std::vector<RowMatrixXd> mw(depth), vw(depth);
  std::vector<Eigen::VectorXd> mb(depth), vb(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    mw[k] = vw[k] = RowMatrixXd::Zero(layers[k].weights.rows(), layers[k].weights.cols());
    mb[k] = vb[k] = Eigen::VectorXd::Zero(layers[k].bias.size());
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::uint64_t step = 0;

  Rng rng(derive_seed(options.seed, 7));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t count = std::min(options.batch_size, order.size() - begin);
      const auto m = static_cast<Eigen::Index>(count);
      RowMatrixXd xb(m, p), yb(m, q);
      for (Eigen::Index r = 0; r < m; ++r) {
        xb.row(r) = x.row(order[begin + static_cast<std::size_t>(r)]);
        yb.row(r) = y.row(order[begin + static_cast<std::size_t>(r)]);
      }
      // Forward, keeping activations.
      std::vector<RowMatrixXd> acts{xb};
      std::vector<RowMatrixXd> pre;
      for (std::size_t k = 0; k < depth; ++k) {
        RowMatrixXd z = acts.back() * layers[k].weights.transpose();
        z.rowwise() += layers[k].bias.transpose();
        pre.push_back(z);
        if (k + 1 < depth) z = z.cwiseMax(0.0);
        acts.push_back(std::move(z));
      }
      RowMatrixXd delta;
      if (task == TaskKind::classification) {
        RowMatrixXd prob = acts.back();
        Mlp::softmax_rows(prob);
        epoch_loss += -(yb.array() * (prob.array().max(1e-300)).log()).sum();
        delta = (prob - yb) / static_cast<double>(m);
      } else {
        const RowMatrixXd diff = acts.back() - yb;
        epoch_loss += 0.5 * diff.squaredNorm();
        delta = diff / static_cast<double>(m);
      }
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = depth; k-- > 0;) {
        const RowMatrixXd grad_w = delta.transpose() * acts[k];
        const Eigen::VectorXd grad_b = delta.colwise().sum().transpose();
        if (k > 0) {
          delta = (delta * layers[k].weights).cwiseProduct(
              (pre[k - 1].array() > 0.0).cast<double>().matrix());
        }
        mw[k] = kBeta1 * mw[k] + (1.0 - kBeta1) * grad_w;
        vw[k] = kBeta2 * vw[k] + (1.0 - kBeta2) * grad_w.cwiseAbs2();
        mb[k] = kBeta1 * mb[k] + (1.0 - kBeta1) * grad_b;
        vb[k] = kBeta2 * vb[k] + (1.0 - kBeta2) * grad_b.cwiseAbs2();
        layers[k].weights.array() -= options.learning_rate * (mw[k].array() / c1) /
                                     ((vw[k].array() / c2).sqrt() + kEps);
        layers[k].bias.array() -= options.learning_rate * (mb[k].array() / c1) /
                                  ((vb[k].array() / c2).sqrt() + kEps);
      }
    }
    history.push_back(epoch_loss / static_cast<double>(n));
  }
  return MlpFit{std::move(model), std::move(history)};
}

inline MlpFit fit_mlp(const DatasetBundle& bundle, const MlpOptions& options) {
  MlpOptions opts = options;
  if (bundle.task == TaskKind::classification) opts.classes = bundle.outputs;
  return fit_mlp(bundle.train, bundle.task, opts);
}

}  // namespace tempsal

#endif  // TEMPSAL_MLP_HPP_
