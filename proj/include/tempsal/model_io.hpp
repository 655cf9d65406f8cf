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

// Text persistence for native models. Layout:
//
//   tempsal-model 1 <linear|mlp> <task> J L O H
//   linear: "ridge_lambda <v>", then O*H weight rows of J*L values, then one
//           bias row of O*H values.
//   mlp:    "layers <n>", then per layer "layer <out> <in>", <out> weight rows
//           and one bias row.
//
// Values are written with 17 significant digits so a save/load round trip is
// exact.

#ifndef TEMPSAL_MODEL_IO_HPP_
#define TEMPSAL_MODEL_IO_HPP_

#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tempsal/linear.hpp"
#include "tempsal/mlp.hpp"

namespace tempsal {

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_row(std::ostream& out, const double* values, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i) out << ' ';
    out << values[i];
  }
  out << '\n';
}

inline void write_header(std::ostream& out, const char* kind, const Predictor& model) {
  out << "tempsal-model 1 " << kind << ' ' << task_name(model.task()) << ' '
      << model.input_shape().features << ' ' << model.input_shape().lags << ' '
      << model.output_shape().outputs << ' ' << model.output_shape().horizons << '\n';
}

inline double read_value(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw ModelFormatError("model file truncated");
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw ModelFormatError("model file: bad number '" + token + "'");
  }
}

inline void expect(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) {
    throw ModelFormatError("model file: expected '" + word + "', found '" + token + "'");
  }
}

}  // namespace detail

inline void save_model(std::ostream& out, const LinearForecaster& model) {
  out << std::setprecision(17);
  detail::write_header(out, "linear", model);
  out << "ridge_lambda " << model.ridge_lambda() << '\n';
  const auto& w = model.weights();
  for (Eigen::Index r = 0; r < w.rows(); ++r) detail::write_row(out, w.row(r).data(), w.cols());
  detail::write_row(out, model.bias().data(), model.bias().size());
}

inline void save_model(std::ostream& out, const Mlp& model) {
  out << std::setprecision(17);
  detail::write_header(out, "mlp", model);
  out << "layers " << model.layers().size() << '\n';
  for (const auto& layer : model.layers()) {
    out << "layer " << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      detail::write_row(out, layer.weights.row(r).data(), layer.weights.cols());
    }
    detail::write_row(out, layer.bias.data(), layer.bias.size());
  }
}

// Loads either model kind.
inline std::unique_ptr<Predictor> load_model(std::istream& in) {
  std::string magic, kind, task_s;
  int version = 0;
  std::size_t j = 0, l = 0, o = 0, h = 0;
  if (!(in >> magic >> version >> kind >> task_s >> j >> l >> o >> h) || magic != "tempsal-model") {
    throw ModelFormatError("not a tempsal model file");
  }
  if (version != 1) throw ModelFormatError("unsupported model file version " + std::to_string(version));
  TaskKind task;
  try {
    task = parse_task(task_s);
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(e.what());
  }
  const InputShape input{j, l};
  const OutputShape output{o, h};
  if (kind == "linear") {
    detail::expect(in, "ridge_lambda");
    const double lambda = detail::read_value(in);
    RowMatrixXd w(static_cast<Eigen::Index>(o * h), static_cast<Eigen::Index>(j * l));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = detail::read_value(in);
    }
    Eigen::VectorXd b(static_cast<Eigen::Index>(o * h));
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = detail::read_value(in);
    return std::make_unique<LinearForecaster>(input, output, std::move(w), std::move(b), lambda, task);
  }
  if (kind == "mlp") {
    detail::expect(in, "layers");
    const auto count = static_cast<std::size_t>(detail::read_value(in));
    std::vector<DenseLayer> layers;
    for (std::size_t k = 0; k < count; ++k) {
      detail::expect(in, "layer");
      const auto rows = static_cast<Eigen::Index>(detail::read_value(in));
      const auto cols = static_cast<Eigen::Index>(detail::read_value(in));
      DenseLayer layer{RowMatrixXd(rows, cols), Eigen::VectorXd(rows)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = detail::read_value(in);
      }
      for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = detail::read_value(in);
      layers.push_back(std::move(layer));
    }
    return std::make_unique<Mlp>(task, input, output, std::move(layers));
  }
  throw ModelFormatError("unknown model kind '" + kind + "'");
}

inline void save_model_file(const std::string& path, const Predictor& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  if (const auto* lin = dynamic_cast<const LinearForecaster*>(&model)) {
    save_model(out, *lin);
  } else if (const auto* mlp = dynamic_cast<const Mlp*>(&model)) {
    save_model(out, *mlp);
  } else {
    throw std::invalid_argument("save_model_file: only native models can be saved");
  }
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

inline std::unique_ptr<Predictor> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace tempsal

#endif  // TEMPSAL_MODEL_IO_HPP_
