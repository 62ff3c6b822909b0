// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEXVEIL_SERVER_HPP_
#define LEXVEIL_SERVER_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lexveil/error.hpp"
#include "lexveil/net.hpp"
#include "lexveil/rng.hpp"
#include "lexveil/store.hpp"
#include "lexveil/wire.hpp"

namespace lexveil {

// Downstream stand-in the server runs over the sanitized ids it receives.
// `kEcho` returns the input unchanged; `kLinear` applies a fixed random
// linear map to each id's unit embedding and answers with the nearest
// token under the dot product. Both are deliberately tiny: the harness
// exercises the privacy boundary and the timing report, not model quality.
class ToyModel {
 public:
  enum class Kind { kEcho, kLinear };

  static ToyModel Echo() { return ToyModel(Kind::kEcho); }

  static ToyModel Linear(const EmbeddingStore& store, uint64_t seed = 42) {
    ToyModel model(Kind::kLinear);
    const size_t dim = store.dim();
    model.matrix_.resize(dim * dim);
    RngStream rng(seed, /*stream_id=*/0);
    for (double& cell : model.matrix_) {
      cell = 2.0 * rng.NextUnit() - 1.0;
    }
    return model;
  }

  static Kind ParseKind(const std::string& name) {
    if (name == "echo") return Kind::kEcho;
    if (name == "linear") return Kind::kLinear;
    Fail(ErrorKind::kConfig, "model must be 'echo' or 'linear', got '" +
                                 name + "'");
  }

  Kind kind() const { return kind_; }

  std::vector<uint32_t> Apply(std::span<const uint32_t> ids,
                              const EmbeddingStore& store) const {
    std::vector<uint32_t> out;
    out.reserve(ids.size());
    if (kind_ == Kind::kEcho) {
      out.assign(ids.begin(), ids.end());
      return out;
    }
    const size_t dim = store.dim();
    std::vector<double> mapped(dim);
    for (uint32_t id : ids) {
      if (id == kOovId) {
        out.push_back(kOovId);
        continue;
      }
      const std::span<const double> row = store.unit_vector(id);
      for (size_t r = 0; r < dim; ++r) {
        double acc = 0.0;
        for (size_t c = 0; c < dim; ++c) {
          acc += matrix_[r * dim + c] * row[c];
        }
        mapped[r] = acc;
      }
      uint32_t best = 0;
      double best_dot = -std::numeric_limits<double>::infinity();
      for (uint32_t j = 0; j < store.size(); ++j) {
        const std::span<const double> candidate = store.unit_vector(j);
        double dot = 0.0;
        for (size_t c = 0; c < dim; ++c) dot += candidate[c] * mapped[c];
        if (dot > best_dot) {
          best_dot = dot;
          best = j;
        }
      }
      out.push_back(best);
    }
    return out;
  }

 private:
  explicit ToyModel(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::vector<double> matrix_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  uint16_t port = 0;  // 0 binds an ephemeral port
  ToyModel::Kind model = ToyModel::Kind::kEcho;
  uint64_t model_seed = 42;
};

// Accepts framed requests over TCP and answers with model output.
// The server only ever sees sanitized ids; raw text never reaches it.
class InferenceServer {
 public:
  InferenceServer(const EmbeddingStore& store, ServerConfig config)
      : store_(store),
        model_(config.model == ToyModel::Kind::kEcho
                   ? ToyModel::Echo()
                   : ToyModel::Linear(store, config.model_seed)),
        listener_(config.host, config.port) {}

  ~InferenceServer() { Stop(); }

  InferenceServer(const InferenceServer&) = delete;
  InferenceServer& operator=(const InferenceServer&) = delete;

  uint16_t port() const { return listener_.bound_port(); }

  void Start() {
    if (accept_thread_.joinable()) return;
    stop_.store(false);
    accept_thread_ = std::thread([this] { AcceptLoop(); });
  }

  void Stop() {
    stop_.store(true);
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lock(workers_mutex_);
      workers.swap(workers_);
    }
    for (std::thread& worker : workers) {
      if (worker.joinable()) worker.join();
    }
  }

  // Convenience for foreground use: serves until `stop_flag` turns true.
  void RunUntil(const std::atomic<bool>& stop_flag) {
    Start();
    while (!stop_flag.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    Stop();
  }

 private:
  void AcceptLoop() {
    while (!stop_.load()) {
      net::Socket socket = listener_.AcceptWithTimeout(/*timeout_ms=*/50);
      if (!socket.Valid()) continue;
      std::lock_guard<std::mutex> lock(workers_mutex_);
      workers_.emplace_back(
          [this, sock = std::move(socket)]() mutable { Serve(sock); });
    }
  }

  void Serve(net::Socket& socket) {
    while (!stop_.load()) {
      wire::Frame frame;
      try {
        if (!socket.TryRecvFrame(&frame)) return;  // clean close
      } catch (const Error& error) {
        // Framing errors leave the stream position unknown; report and drop.
        SendErrorBestEffort(socket, wire::kErrMalformedPayload, error.what());
        return;
      }
      if (frame.version != wire::kProtocolVersion) {
        SendErrorBestEffort(
            socket, wire::kErrUnsupportedVersion,
            "protocol version " + std::to_string(frame.version) +
                " is not supported");
        continue;  // the client may retry with a supported version
      }
      if (frame.type != wire::FrameType::kRequest) {
        SendErrorBestEffort(socket, wire::kErrMalformedPayload,
                            "expected a request frame");
        return;
      }
      wire::InferenceRequest request;
      try {
        request = wire::DecodeRequest(frame.payload);
        for (uint32_t id : request.token_ids) {
          if (id != kOovId && id >= store_.size()) {
            Fail(ErrorKind::kProtocol,
                 "token id " + std::to_string(id) +
                     " is out of range for the vocabulary");
          }
        }
      } catch (const Error& error) {
        SendErrorBestEffort(socket, wire::kErrMalformedPayload, error.what());
        return;
      }
      wire::InferenceResponse response;
      response.session_id = request.session_id;
      try {
        if (request.token_ids.empty()) {
          response.compute_us = 0;
        } else {
          const auto start = std::chrono::steady_clock::now();
          response.output_ids = model_.Apply(request.token_ids, store_);
          const auto end = std::chrono::steady_clock::now();
          response.compute_us = static_cast<uint64_t>(
              std::chrono::duration_cast<std::chrono::microseconds>(end -
                                                                    start)
                  .count());
        }
      } catch (const std::exception& error) {
        SendErrorBestEffort(socket, wire::kErrInternal, error.what());
        return;
      }
      wire::Frame reply;
      reply.type = wire::FrameType::kResponse;
      reply.payload = wire::EncodeResponse(response);
      try {
        socket.SendFrame(reply);
      } catch (const Error&) {
        return;  // peer went away; nothing further to do
      }
    }
  }

  static void SendErrorBestEffort(const net::Socket& socket, uint16_t code,
                                  const std::string& message) {
    wire::Frame reply;
    reply.type = wire::FrameType::kError;
    reply.payload = wire::EncodeError({code, message});
    try {
      socket.SendFrame(reply);
    } catch (const Error&) {
      // The peer is already gone; the close below is all that is left.
    }
  }

  const EmbeddingStore& store_;
  ToyModel model_;
  net::Listener listener_;
  std::atomic<bool> stop_{false};
  std::thread accept_thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
};

}  // namespace lexveil

#endif  // LEXVEIL_SERVER_HPP_
