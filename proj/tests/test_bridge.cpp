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

#include <filesystem>

#include "oracles.hpp"
#include "tempsal/bridge.hpp"
#include "tempsal/model_io.hpp"

using namespace tempsal;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

std::string saved_model(const Predictor& model, const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tempsal_test_bridge";
  fs::create_directories(dir);
  const auto path = (dir / name).string();
  save_model_file(path, model);
  return path;
}

BridgeConfig shim_config(const std::string& model_path, const std::string& mode = "ok") {
  BridgeConfig cfg;
  cfg.command = {TEMPSAL_FAKE_SHIM, model_path, mode};
  cfg.handshake_timeout = 5000ms;
  cfg.request_timeout = 5000ms;
  return cfg;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(BridgeHandshake, EchoesDeclaredShapes) {
  const auto native = oracle::random_linear(2, 3, 1, 1, 1);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "shapes.model")));
  EXPECT_EQ(bridge->input_shape().features, 2u);
  EXPECT_EQ(bridge->input_shape().lags, 3u);
  EXPECT_EQ(bridge->output_shape().outputs, 1u);
  EXPECT_EQ(bridge->output_shape().horizons, 1u);
  EXPECT_EQ(bridge->meta().version, "1");
  EXPECT_TRUE(bridge->capabilities().has_gradients);
  EXPECT_FALSE(bridge->capabilities().reentrant);
}

TEST(BridgeHandshake, ChildExitNamesStatus) {
  const auto msg = error_of([] { BridgePredictor::connect(shim_config("unused", "exit-early")); });
  EXPECT_NE(msg.find("exited with status 3"), std::string::npos) << msg;
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto path = saved_model(native, "exit.model");
  const auto msg2 = error_of([&] { BridgePredictor::connect(shim_config(path, "exit-after-hello")); });
  EXPECT_NE(msg2.find("exited with status 4"), std::string::npos) << msg2;
}

TEST(BridgeHandshake, VersionMismatch) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto msg = error_of(
      [&] { BridgePredictor::connect(shim_config(saved_model(native, "v2.model"), "bad-version")); });
  EXPECT_NE(msg.find("protocol version mismatch"), std::string::npos) << msg;
}

TEST(BridgeHandshake, MalformedMetadata) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto msg = error_of(
      [&] { BridgePredictor::connect(shim_config(saved_model(native, "meta.model"), "bad-meta")); });
  EXPECT_NE(msg.find("malformed metadata"), std::string::npos) << msg;
  EXPECT_THROW(BridgePredictor::parse_meta("not json"), BridgeError);
  EXPECT_THROW(BridgePredictor::parse_meta(R"({"type":"meta","version":"1","task":"regression","j":0,"l":2,"o":1,"h":1})"),
               BridgeError);
  const auto meta = BridgePredictor::parse_meta(
      R"({"type":"meta","version":"1","task":"classification","j":2,"l":3,"o":2,"h":1,"grad":false})");
  EXPECT_EQ(meta.task, TaskKind::classification);
  EXPECT_FALSE(meta.has_gradients);
}

TEST(BridgeHandshake, SpawnFailure) {
  BridgeConfig cfg;
  cfg.command = {"/nonexistent/model-server"};
  const auto msg = error_of([&] { BridgePredictor::connect(cfg); });
  EXPECT_NE(msg.find("cannot spawn"), std::string::npos) << msg;
}

TEST(BridgeConfig, Validation) {
  BridgeConfig cfg;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.command = {"x"};
  cfg.max_batch = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.max_batch = 4;
  cfg.request_timeout = 0ms;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(BridgeConfig, SplitCommand) {
  EXPECT_EQ(split_command("python shim.py --model 'my model.pt'"),
            (std::vector<std::string>{"python", "shim.py", "--model", "my model.pt"}));
  EXPECT_EQ(split_command(R"(a "b \"c\"" d\ e)"), (std::vector<std::string>{"a", "b \"c\"", "d e"}));
  EXPECT_THROW(split_command("a 'b"), std::invalid_argument);
}

TEST(BridgePredict, ParityWithNativeLinear) {
  const auto native = oracle::random_linear(3, 5, 1, 2, 7);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "parity.model")));
  std::vector<Matrix> batch;
  for (std::uint64_t i = 0; i < 100; ++i) batch.push_back(oracle::random_matrix(3, 5, i, 3.0));
  const Matrix a = native.predict_flat(batch);
  const Matrix b = bridge->predict_flat(batch);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  EXPECT_EQ(bridge->requests_sent(), 1u);
  EXPECT_EQ(bridge->forward_calls(), 100u);
}

TEST(BridgePredict, SumModelHandExample) {
  const auto bridge = BridgePredictor::connect(shim_config("unused", "sum"));
  const std::vector<Matrix> batch = {Matrix{{1, 2}, {3, 4}}};
  EXPECT_EQ(bridge->predict_flat(batch)(0, 0), 10.0);
}

TEST(BridgePredict, OneRequestPerChunk) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  auto cfg = shim_config(saved_model(native, "chunk.model"));
  cfg.max_batch = 4;
  const auto bridge = BridgePredictor::connect(cfg);
  const std::vector<Matrix> batch(10, Matrix{{1, 2}});
  bridge->predict_flat(batch);
  EXPECT_EQ(bridge->requests_sent(), 3u);
}

TEST(BridgePredict, EmptyBatchIsAnError) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "empty.model")));
  EXPECT_THROW(bridge->predict_flat(std::vector<Matrix>{}), std::invalid_argument);
}

TEST(BridgePredict, ResponseCountMismatch) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "count.model"), "wrong-count"));
  const std::vector<Matrix> batch(4, Matrix{{1, 2}});
  const auto msg = error_of([&] { bridge->predict_flat(batch); });
  EXPECT_NE(msg.find("sent 4 instances, received 3 outputs"), std::string::npos) << msg;
}

TEST(BridgePredict, ResponseIdMismatch) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "id.model"), "wrong-id"));
  const auto msg = error_of([&] { bridge->predict_flat(std::vector<Matrix>{Matrix{{1, 2}}}); });
  EXPECT_NE(msg.find("id does not match"), std::string::npos) << msg;
}

TEST(BridgePredict, NonFiniteResponse) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "nan.model"), "non-finite"));
  const auto msg = error_of([&] { bridge->predict_flat(std::vector<Matrix>{Matrix{{1, 2}}}); });
  EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
}

TEST(BridgePredict, ChildErrorIsSurfaced) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "err.model"), "error"));
  const auto msg = error_of([&] { bridge->predict_flat(std::vector<Matrix>{Matrix{{1, 2}}}); });
  EXPECT_NE(msg.find("model raised ValueError"), std::string::npos) << msg;
}

TEST(BridgePredict, Timeout) {
  const auto native = oracle::random_linear(1, 2, 1, 1, 1);
  auto cfg = shim_config(saved_model(native, "slow.model"), "slow");
  cfg.request_timeout = 300ms;
  const auto bridge = BridgePredictor::connect(cfg);
  const auto start = std::chrono::steady_clock::now();
  const auto msg = error_of([&] { bridge->predict_flat(std::vector<Matrix>{Matrix{{1, 2}}}); });
  EXPECT_NE(msg.find("timed out"), std::string::npos) << msg;
  EXPECT_LT(std::chrono::steady_clock::now() - start, 3s);
}

TEST(BridgeGradients, MatchNativeJacobian) {
  const auto native = oracle::random_mlp(2, 4, 1, 2, 3);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "grad.model")));
  const Matrix x = oracle::random_matrix(2, 4, 4);
  const Matrix a = native.jacobian(x);
  const Matrix b = bridge->jacobian(x, false);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_EQ(bridge->gradient_calls(), 1u);
}

TEST(BridgeGradients, UnsupportedFallsBackOrFails) {
  const auto native = oracle::random_linear(1, 3, 1, 1, 5);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "nograd.model"), "no-grad"));
  EXPECT_FALSE(bridge->capabilities().has_gradients);
  const Matrix x{{1, 2, 3}};
  EXPECT_THROW(bridge->jacobian(x, false), PredictorError);
  const Matrix fd = bridge->jacobian(x, true);
  const auto w = native.weight_slice({0, 0});
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(fd[c], w[c], 1e-6);
}

TEST(BridgeAttribution, MapsMatchNative) {
  const auto native = oracle::random_linear(3, 6, 1, 2, 11);
  const auto bridge = BridgePredictor::connect(shim_config(saved_model(native, "maps.model")));
  std::vector<Matrix> xs;
  for (std::uint64_t i = 0; i < 4; ++i) xs.push_back(oracle::random_matrix(3, 6, 20 + i));
  const auto pool = build_feature_pool(xs);
  for (Method m : kAllMethods) {
    AttributionConfig cfg;
    cfg.method = m;
    cfg.ig_steps = 5;
    cfg.gs_samples = 5;
    cfg.allow_finite_difference = false;
    AttributeOptions opts;
    opts.pool = &pool;
    opts.workers = 4;  // ignored for the bridge: it is not reentrant
    const auto a = attribute_dataset(native, xs, cfg, opts);
    const auto b = attribute_dataset(*bridge, xs, cfg, opts);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      EXPECT_LE(oracle::max_abs_diff(a[i], b[i]), 1e-6) << method_name(m);
    }
  }
}
