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

// Client side of the external-model protocol: line-delimited JSON over a
// child process's stdin/stdout (POSIX only).
//
//   -> {"type":"hello"}
//   <- {"type":"meta","version":"1","task":"regression","j":J,"l":L,"o":O,"h":H,"grad":bool}
//   -> {"type":"predict","id":n,"batch":[[[x_jl ...] ...] ...]}
//   <- {"type":"result","id":n,"outputs":[[[y_oh ...] ...] ...]}
//   -> {"type":"grad","id":n,"batch":[...]}
//   <- {"type":"result","id":n,"outputs":[ [O][H][J][L] per instance ]}
//   -> {"type":"shutdown"}
//
// A child may answer any request with {"type":"error","id":n,"message":...}.
// The child's stderr is inherited for diagnostics.

#ifndef TEMPSAL_BRIDGE_HPP_
#define TEMPSAL_BRIDGE_HPP_

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "tempsal/predictor.hpp"

namespace tempsal {

class BridgeError : public PredictorError {
 public:
  using PredictorError::PredictorError;
};

inline constexpr const char* kBridgeProtocolVersion = "1";

struct BridgeConfig {
  std::vector<std::string> command;
  std::chrono::milliseconds handshake_timeout{10000};
  std::chrono::milliseconds request_timeout{60000};
  std::size_t max_batch = 1024;

  void validate() const {
    if (command.empty() || command.front().empty()) {
      throw std::invalid_argument("bridge: command is empty");
    }
    if (handshake_timeout.count() <= 0 || request_timeout.count() <= 0) {
      throw std::invalid_argument("bridge: timeouts must be positive");
    }
    if (max_batch < 1) throw std::invalid_argument("bridge: max_batch must be >= 1");
  }
};

// Whitespace-separated words; single or double quotes group, backslash
// escapes the next character outside single quotes.
inline std::vector<std::string> split_command(const std::string& line) {
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < line.size()) {
        current += line[++i];
      } else {
        current += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == '\\' && i + 1 < line.size()) {
      current += line[++i];
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current += c;
      in_word = true;
    }
  }
  if (quote) throw std::invalid_argument("bridge command has an unterminated quote");
  if (in_word) words.push_back(std::move(current));
  return words;
}

namespace detail {

inline std::string describe_wait_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "was killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped (status " + std::to_string(status) + ")";
}

// Owns the child process and both stream ends.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& command) {
    int to_child[2], from_child[2], exec_report[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, to_child) != 0 ||
        socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, from_child) != 0 ||
        pipe2(exec_report, O_CLOEXEC) != 0) {
      throw BridgeError(std::string("bridge: cannot create pipes: ") + std::strerror(errno));
    }
    std::vector<char*> argv;
    for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_ = fork();
    if (pid_ < 0) throw BridgeError(std::string("bridge: fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      dup2(to_child[1], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      execvp(argv[0], argv.data());
      const int err = errno;
      (void)!write(exec_report[1], &err, sizeof err);
      _exit(127);
    }
    ::close(to_child[1]);
    ::close(from_child[1]);
    ::close(exec_report[1]);
    in_ = to_child[0];
    out_ = from_child[0];
    int err = 0;
    ssize_t got;
    do {
      got = ::read(exec_report[0], &err, sizeof err);
    } while (got < 0 && errno == EINTR);
    ::close(exec_report[0]);
    if (got == static_cast<ssize_t>(sizeof err)) {
      reap(true);
      close_fds();
      throw BridgeError("bridge: cannot spawn '" + command.front() + "': " + std::strerror(err));
    }
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    if (in_ >= 0) {
      static const std::string bye = "{\"type\":\"shutdown\"}\n";
      (void)::send(in_, bye.data(), bye.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
    }
    close_fds();
    if (pid_ > 0 && !exited_) {
      for (int i = 0; i < 100 && !reap(false); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      if (!exited_) {
        ::kill(pid_, SIGKILL);
        reap(true);
      }
    }
  }

  void write_line(const std::string& line) {
    std::size_t sent = 0;
    while (sent < line.size()) {
      const ssize_t n = ::send(in_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError("bridge: write to child failed (" + std::string(std::strerror(errno)) +
                          ")" + exit_suffix());
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout, const char* waiting_for) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        throw BridgeError(std::string("bridge: timed out waiting for ") + waiting_for + " after " +
                          std::to_string(timeout.count()) + " ms");
      }
      pollfd p{out_, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("bridge: poll failed: ") + std::strerror(errno));
      }
      if (ready == 0) continue;
      char chunk[65536];
      const ssize_t n = ::read(out_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("bridge: read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        reap(true);
        throw BridgeError(std::string("bridge: child closed its output while waiting for ") +
                          waiting_for + exit_suffix());
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  // Returns true once the child has been reaped.
  bool reap(bool block) {
    if (exited_) return true;
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
    if (r == pid_) {
      exited_ = true;
      status_ = status;
    }
    return exited_;
  }

  std::string exit_suffix() {
    // Give a dying child a moment so the status can be reported.
    for (int i = 0; i < 50 && !reap(false); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return exited_ ? "; child " + describe_wait_status(status_) : "";
  }

  void close_fds() {
    if (in_ >= 0) ::close(in_);
    if (out_ >= 0) ::close(out_);
    in_ = out_ = -1;
  }

  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  bool exited_ = false;
  int status_ = 0;
  std::string buffer_;
};

inline void append_number(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

inline void append_matrix(std::string& out, const Matrix& x) {
  out += '[';
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (r) out += ',';
    out += '[';
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (c) out += ',';
      append_number(out, x(r, c));
    }
    out += ']';
  }
  out += ']';
}

// Flattens a nested array of numbers, checking the extent at every depth.
inline void flatten_tensor(const nlohmann::json& node, std::span<const std::size_t> extents,
                           std::vector<double>& out, const std::string& where) {
  if (extents.empty()) {
    if (node.is_null()) throw BridgeError("bridge: non-finite value in " + where);
    if (!node.is_number()) throw BridgeError("bridge: malformed " + where + ": expected a number");
    const double v = node.get<double>();
    if (!std::isfinite(v)) throw BridgeError("bridge: non-finite value in " + where);
    out.push_back(v);
    return;
  }
  if (!node.is_array() || node.size() != extents.front()) {
    throw BridgeError("bridge: malformed " + where + ": expected an array of " +
                      std::to_string(extents.front()));
  }
  for (const auto& child : node) flatten_tensor(child, extents.subspan(1), out, where);
}

}  // namespace detail

struct BridgeMeta {
  std::string version;
  TaskKind task = TaskKind::regression;
  InputShape input;
  OutputShape output;
  bool has_gradients = false;
};

// Predictor backed by one child process. One request is in flight at a time
// (reentrant = false); a mutex enforces the single-stream contract even if a
// caller ignores the capability flag.
class BridgePredictor final : public Predictor {
 public:
  static std::unique_ptr<BridgePredictor> connect(const BridgeConfig& cfg) {
    cfg.validate();
    auto child = std::make_unique<detail::ChildProcess>(cfg.command);
    child->write_line("{\"type\":\"hello\"}\n");
    const BridgeMeta meta = parse_meta(child->read_line(cfg.handshake_timeout, "handshake"));
    return std::unique_ptr<BridgePredictor>(new BridgePredictor(cfg, meta, std::move(child)));
  }

  BridgePredictor(const BridgePredictor&) = delete;
  BridgePredictor& operator=(const BridgePredictor&) = delete;

  const BridgeMeta& meta() const { return meta_; }
  // Request lines written so far (one per batch, not per instance).
  std::uint64_t requests_sent() const {
    std::lock_guard lock(mutex_);
    return next_id_;
  }

  static BridgeMeta parse_meta(const std::string& line) {
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw BridgeError("bridge: malformed metadata line: " + line);
    }
    try {
      if (!msg.is_object() || msg.value("type", "") != "meta") {
        throw BridgeError("bridge: expected a meta message, got: " + line);
      }
      BridgeMeta meta;
      const auto& version = msg.at("version");
      meta.version = version.is_string() ? version.get<std::string>() : version.dump();
      if (meta.version != kBridgeProtocolVersion) {
        throw BridgeError("bridge: protocol version mismatch: child speaks \"" + meta.version +
                          "\", client speaks \"" + kBridgeProtocolVersion + "\"");
      }
      meta.task = parse_task(msg.at("task").get<std::string>());
      auto positive = [&](const char* key) {
        const auto v = msg.at(key).get<long long>();
        if (v < 1) throw BridgeError(std::string("bridge: metadata field '") + key + "' must be >= 1");
        return static_cast<std::size_t>(v);
      };
      meta.input = {positive("j"), positive("l")};
      meta.output = {positive("o"), positive("h")};
      meta.has_gradients = msg.value("grad", false);
      return meta;
    } catch (const nlohmann::json::exception& e) {
      throw BridgeError(std::string("bridge: malformed metadata: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw BridgeError(std::string("bridge: malformed metadata: ") + e.what());
    }
  }

 protected:
  void evaluate(std::span<const Matrix> batch, std::span<double> out) const override {
    const std::size_t extents[] = {batch.size(), output_shape().outputs, output_shape().horizons};
    const auto values = round_trip("predict", batch, extents);
    std::copy(values.begin(), values.end(), out.begin());
  }

  void evaluate_jacobian(const Matrix& x, Matrix& jac) const override {
    const auto in = input_shape();
    const auto outs = output_shape();
    const std::size_t extents[] = {1, outs.outputs, outs.horizons, in.features, in.lags};
    const auto values = round_trip("grad", std::span<const Matrix>(&x, 1), extents);
    std::copy(values.begin(), values.end(), jac.values().begin());
  }

 private:
  BridgePredictor(const BridgeConfig& cfg, const BridgeMeta& meta,
                  std::unique_ptr<detail::ChildProcess> child)
      : Predictor(meta.task, meta.input, meta.output,
                  Capabilities{.has_gradients = meta.has_gradients,
                               .reentrant = false,
                               .max_batch = cfg.max_batch}),
        cfg_(cfg),
        meta_(meta),
        child_(std::move(child)) {}

  std::vector<double> round_trip(const char* type, std::span<const Matrix> batch,
                                 std::span<const std::size_t> extents) const {
    std::lock_guard lock(mutex_);
    const std::uint64_t id = next_id_++;
    std::string request = "{\"type\":\"";
    request += type;
    request += "\",\"id\":" + std::to_string(id) + ",\"batch\":[";
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (i) request += ',';
      detail::append_matrix(request, batch[i]);
    }
    request += "]}\n";
    child_->write_line(request);
    const std::string line = child_->read_line(cfg_.request_timeout, "a response");
    nlohmann::json msg;
    try {
      msg = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw BridgeError("bridge: malformed response line: " + line.substr(0, 200));
    }
    if (!msg.is_object()) throw BridgeError("bridge: response is not an object");
    const std::string kind = msg.value("type", "");
    if (kind == "error") {
      throw BridgeError("bridge: child reported an error for request " + std::to_string(id) + ": " +
                        msg.value("message", std::string("(no message)")));
    }
    if (kind != "result") throw BridgeError("bridge: unexpected response type '" + kind + "'");
    if (!msg.contains("id") || !msg["id"].is_number_integer() ||
        msg["id"].get<std::uint64_t>() != id) {
      throw BridgeError("bridge: response id does not match request id " + std::to_string(id));
    }
    const auto& outputs = msg["outputs"];
    if (!outputs.is_array()) throw BridgeError("bridge: response has no outputs array");
    if (outputs.size() != batch.size()) {
      throw BridgeError("bridge: response count mismatch: sent " + std::to_string(batch.size()) +
                        " instances, received " + std::to_string(outputs.size()) + " outputs");
    }
    std::vector<double> values;
    values.reserve(batch.size() * 64);
    detail::flatten_tensor(outputs, extents, values, std::string(type) + " response");
    return values;
  }

  BridgeConfig cfg_;
  BridgeMeta meta_;
  mutable std::mutex mutex_;
  mutable std::uint64_t next_id_ = 0;
  std::unique_ptr<detail::ChildProcess> child_;
};

}  // namespace tempsal

#endif  // TEMPSAL_BRIDGE_HPP_
