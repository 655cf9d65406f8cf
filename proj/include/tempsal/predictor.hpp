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

// The black-box model contract. Attribution code only ever talks to a model
// through `Predictor`, which validates inputs, batches, and counts every
// forward evaluation it serves.

#ifndef TEMPSAL_PREDICTOR_HPP_
#define TEMPSAL_PREDICTOR_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tempsal/core.hpp"

namespace tempsal {

struct InputShape {
  std::size_t features = 0;  // J
  std::size_t lags = 0;      // L
  std::size_t cells() const { return features * lags; }
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct OutputShape {
  std::size_t outputs = 0;   // O
  std::size_t horizons = 0;  // H (tau_max, or 1 for classification)
  std::size_t size() const { return outputs * horizons; }
  friend bool operator==(const OutputShape&, const OutputShape&) = default;
};

struct Capabilities {
  bool has_gradients = false;
  bool reentrant = true;
  std::size_t max_batch = 0;  // 0: unlimited
};

struct OutputIndex {
  std::size_t output = 0;
  std::size_t horizon = 0;
};

class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Predictor;
Matrix finite_difference_jacobian(const Predictor& model, const Matrix& x, double epsilon);

class Predictor {
 public:
  Predictor(TaskKind task, InputShape input, OutputShape output, Capabilities caps)
      : task_(task), input_(input), output_(output), caps_(caps) {
    if (input.features == 0 || input.lags == 0) {
      throw std::invalid_argument("predictor input shape must be positive");
    }
    if (output.outputs == 0 || output.horizons == 0) {
      throw std::invalid_argument("predictor output shape must be positive");
    }
    if (task == TaskKind::classification && output.horizons != 1) {
      throw std::invalid_argument("classification predictors must have H = 1");
    }
  }
  virtual ~Predictor() = default;
  // Copies describe the same model but start with fresh call counters.
  Predictor(const Predictor& other)
      : task_(other.task_), input_(other.input_), output_(other.output_), caps_(other.caps_) {}
  Predictor& operator=(const Predictor& other) {
    task_ = other.task_;
    input_ = other.input_;
    output_ = other.output_;
    caps_ = other.caps_;
    return *this;
  }

  TaskKind task() const { return task_; }
  InputShape input_shape() const { return input_; }
  OutputShape output_shape() const { return output_; }
  const Capabilities& capabilities() const { return caps_; }

  // Forward evaluations served so far (one per instance).
  std::uint64_t forward_calls() const { return calls_.load(std::memory_order_relaxed); }
  // Analytic Jacobian evaluations served so far.
  std::uint64_t gradient_calls() const { return grad_calls_.load(std::memory_order_relaxed); }

  // Evaluates a batch and returns an n x (O*H) matrix, row i holding output
  // [o][h] of instance i at column o*H + h.
  Matrix predict_flat(std::span<const Matrix> batch) const {
    if (batch.empty()) throw std::invalid_argument("predict: empty batch");
    for (std::size_t i = 0; i < batch.size(); ++i) validate_input(batch[i], i);
    const std::size_t width = output_.size();
    Matrix out(batch.size(), width);
    const std::size_t chunk = caps_.max_batch == 0 ? batch.size() : caps_.max_batch;
    for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
      const std::size_t n = std::min(chunk, batch.size() - begin);
      evaluate(batch.subspan(begin, n),
               out.values().subspan(begin * width, n * width));
      calls_.fetch_add(n, std::memory_order_relaxed);
    }
    for (double v : out.values()) {
      if (!std::isfinite(v)) throw PredictorError("predictor returned a non-finite output");
    }
    return out;
  }

  std::vector<PredictionOutput> predict(std::span<const Matrix> batch) const {
    Matrix flat = predict_flat(batch);
    std::vector<PredictionOutput> result;
    result.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto row = flat.row(i);
      result.push_back({Matrix(output_.outputs, output_.horizons,
                               std::vector<double>(row.begin(), row.end())),
                        task_});
    }
    return result;
  }

  std::vector<PredictionOutput> predict(std::span<const WindowInstance> batch) const {
    std::vector<Matrix> inputs;
    inputs.reserve(batch.size());
    for (const auto& w : batch) inputs.push_back(w.values);
    return predict(std::span<const Matrix>(inputs));
  }

  PredictionOutput predict_one(const Matrix& x) const {
    return std::move(predict(std::span<const Matrix>(&x, 1)).front());
  }

  // Full Jacobian as an (O*H) x (J*L) matrix: row o*H+h, column j*L+l.
  // Falls back to central finite differences when the model has no analytic
  // gradients and `allow_fallback` is set.
  Matrix jacobian(const Matrix& x, bool allow_fallback = true,
                  double epsilon = 1e-3) const {
    validate_input(x, 0);
    if (caps_.has_gradients) {
      Matrix jac(output_.size(), input_.cells());
      evaluate_jacobian(x, jac);
      grad_calls_.fetch_add(1, std::memory_order_relaxed);
      return jac;
    }
    if (!allow_fallback) {
      throw PredictorError("gradients unsupported by this predictor and fallback disabled");
    }
    return finite_difference_jacobian(*this, x, epsilon);
  }

  // d f_{o,h} / d x_{j,l} as a J x L matrix.
  Matrix gradient(const Matrix& x, OutputIndex index, bool allow_fallback = true,
                  double epsilon = 1e-3) const {
    if (index.output >= output_.outputs || index.horizon >= output_.horizons) {
      throw std::out_of_range("gradient: output index out of range");
    }
    Matrix jac = jacobian(x, allow_fallback, epsilon);
    auto row = jac.row(index.output * output_.horizons + index.horizon);
    return Matrix(input_.features, input_.lags, std::vector<double>(row.begin(), row.end()));
  }

 protected:
  // Writes n * (O*H) values for the n instances of `batch` into `out`.
  virtual void evaluate(std::span<const Matrix> batch, std::span<double> out) const = 0;

  virtual void evaluate_jacobian(const Matrix& /*x*/, Matrix& /*jac*/) const {
    throw PredictorError("analytic gradients not implemented");
  }

 private:
  void validate_input(const Matrix& x, std::size_t position) const {
    if (x.rows() != input_.features || x.cols() != input_.lags) {
      throw std::invalid_argument("predict: instance " + std::to_string(position) +
                                  " has shape " + std::to_string(x.rows()) + "x" +
                                  std::to_string(x.cols()) + ", expected " +
                                  std::to_string(input_.features) + "x" +
                                  std::to_string(input_.lags));
    }
    if (!x.all_finite()) {
      throw std::invalid_argument("predict: instance " + std::to_string(position) +
                                  " contains non-finite values");
    }
  }

  TaskKind task_;
  InputShape input_;
  OutputShape output_;
  Capabilities caps_;
  mutable std::atomic<std::uint64_t> calls_{0};
  mutable std::atomic<std::uint64_t> grad_calls_{0};
};

// Central differences over every cell, evaluated as one batch of 2*J*L
// forward calls. Exact for models that are linear in the input.
inline Matrix finite_difference_jacobian(const Predictor& model, const Matrix& x,
                                         double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite difference epsilon must be > 0");
  const std::size_t cells = x.size();
  std::vector<Matrix> probes;
  probes.reserve(2 * cells);
  for (std::size_t c = 0; c < cells; ++c) {
    Matrix plus = x;
    plus[c] += epsilon;
    Matrix minus = x;
    minus[c] -= epsilon;
    probes.push_back(std::move(plus));
    probes.push_back(std::move(minus));
  }
  Matrix out = model.predict_flat(probes);
  const std::size_t width = model.output_shape().size();
  Matrix jac(width, cells);
  for (std::size_t c = 0; c < cells; ++c) {
    auto up = out.row(2 * c);
    auto down = out.row(2 * c + 1);
    for (std::size_t k = 0; k < width; ++k) jac(k, c) = (up[k] - down[k]) / (2.0 * epsilon);
  }
  return jac;
}

inline Matrix finite_difference_gradient(const Predictor& model, const Matrix& x,
                                         OutputIndex index, double epsilon = 1e-3) {
  const auto out_shape = model.output_shape();
  if (index.output >= out_shape.outputs || index.horizon >= out_shape.horizons) {
    throw std::out_of_range("finite_difference_gradient: output index out of range");
  }
  Matrix jac = finite_difference_jacobian(model, x, epsilon);
  auto row = jac.row(index.output * out_shape.horizons + index.horizon);
  return Matrix(x.rows(), x.cols(), std::vector<double>(row.begin(), row.end()));
}

// Wraps a per-instance callable. Handy for closed-form test models and for
// adapting foreign models that are already callable in-process.
class FunctionPredictor final : public Predictor {
 public:
  using Forward = std::function<void(const Matrix& x, std::span<double> out)>;
  using Backward = std::function<void(const Matrix& x, Matrix& jac)>;

  FunctionPredictor(TaskKind task, InputShape input, OutputShape output, Forward forward,
                    Backward backward = nullptr)
      : Predictor(task, input, output,
                  Capabilities{.has_gradients = static_cast<bool>(backward)}),
        forward_(std::move(forward)),
        backward_(std::move(backward)) {}

 protected:
  void evaluate(std::span<const Matrix> batch, std::span<double> out) const override {
    const std::size_t width = output_shape().size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      forward_(batch[i], out.subspan(i * width, width));
    }
  }
  void evaluate_jacobian(const Matrix& x, Matrix& jac) const override { backward_(x, jac); }

 private:
  Forward forward_;
  Backward backward_;
};

// f(X) = c for every input; zero gradients.
inline FunctionPredictor make_constant_predictor(InputShape input, OutputShape output,
                                                 double value = 1.0,
                                                 TaskKind task = TaskKind::regression) {
  return FunctionPredictor(
      task, input, output,
      [value](const Matrix&, std::span<double> out) { std::fill(out.begin(), out.end(), value); },
      [](const Matrix&, Matrix& jac) { std::fill(jac.values().begin(), jac.values().end(), 0.0); });
}

}  // namespace tempsal

#endif  // TEMPSAL_PREDICTOR_HPP_
