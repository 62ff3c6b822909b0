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

#ifndef LEXVEIL_CLIENT_HPP_
#define LEXVEIL_CLIENT_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lexveil/candidates.hpp"
#include "lexveil/error.hpp"
#include "lexveil/net.hpp"
#include "lexveil/sanitizer.hpp"
#include "lexveil/store.hpp"
#include "lexveil/wire.hpp"

namespace lexveil {

// Per-phase wall-clock attribution for one inference round trip, all in
// microseconds. Phases may overlap (network includes the server's work),
// so the total is measured independently rather than summed.
struct TimingBreakdown {
  uint64_t sanitize_us = 0;
  uint64_t embed_us = 0;
  uint64_t serialize_us = 0;
  uint64_t network_us = 0;
  uint64_t server_compute_us = 0;
  uint64_t total_us = 0;
};

inline nlohmann::json TimingToJson(const TimingBreakdown& timing) {
  return nlohmann::json{
      {"sanitizeUs", timing.sanitize_us},
      {"embedUs", timing.embed_us},
      {"serializeUs", timing.serialize_us},
      {"networkUs", timing.network_us},
      {"serverComputeUs", timing.server_compute_us},
      {"totalUs", timing.total_us},
  };
}

struct ClientConfig {
  SanitizerConfig sanitizer;
  uint64_t session_id = 0;
  uint64_t doc_index = 0;  // selects the sanitizer's RNG stream
};

struct ClientResult {
  wire::InferenceResponse response;
  TimingBreakdown timing;
  std::vector<AuditRecord> audit;
  std::vector<uint32_t> sent_ids;
};

// Observes the exact bytes of the serialized request frame before it is
// sent; used by tests that audit what crosses the privacy boundary.
using WireObserver = std::function<void(std::span<const uint8_t>)>;

// Runs the client half of a split-inference round trip over an open
// connection: sanitize locally, resolve embeddings locally (they stay on
// this side of the wire — only sanitized ids are transmitted), then send
// the request and wait for the reply.
inline ClientResult ClientInfer(const net::Socket& socket,
                                const std::string& text,
                                const EmbeddingStore& store,
                                const SensitivityPartition& partition,
                                const CandidateTable& table,
                                const ClientConfig& config,
                                const WireObserver& observer = nullptr) {
  using Clock = std::chrono::steady_clock;
  const auto micros_between = [](Clock::time_point a, Clock::time_point b) {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(b - a).count());
  };

  config.sanitizer.Validate();
  CheckPipeline(store, table, config.sanitizer.k);

  ClientResult result;
  const auto t_start = Clock::now();

  // Phase 1: sanitize. The RNG stream is pinned by (seed, doc index), so
  // an identical request produces identical bytes on the wire.
  RngStream rng(config.sanitizer.seed, config.doc_index);
  DocumentResult sanitized =
      SanitizeDocument(text, store, partition, table, config.sanitizer.Params(),
                       rng, config.doc_index);
  result.audit = std::move(sanitized.records);
  result.sent_ids.reserve(result.audit.size());
  for (const AuditRecord& record : result.audit) {
    result.sent_ids.push_back(record.decision.output_id);
  }
  const auto t_sanitized = Clock::now();

  // Phase 2: embedding lookup. The vectors feed the local model half in a
  // real deployment; here we resolve and fold them so the phase costs what
  // a lookup costs, then drop them before anything touches the socket.
  double fold = 0.0;
  for (uint32_t id : result.sent_ids) {
    if (id == kOovId) continue;
    const std::span<const double> row = store.unit_vector(id);
    for (double value : row) fold += value;
  }
  // Publish the fold so the loop above cannot be optimized away.
  volatile double sink = fold;
  (void)sink;
  const auto t_embedded = Clock::now();

  // Phase 3: serialize.
  wire::InferenceRequest request;
  request.session_id = config.session_id;
  request.token_ids = result.sent_ids;
  wire::Frame frame;
  frame.type = wire::FrameType::kRequest;
  frame.payload = wire::EncodeRequest(request);
  const std::vector<uint8_t> frame_bytes = wire::EncodeFrame(frame);
  const auto t_serialized = Clock::now();

  if (observer) observer(frame_bytes);

  // Phase 4: network round trip (includes the server's compute time).
  socket.SendAll(frame_bytes);
  const wire::Frame reply = socket.RecvFrame();
  const auto t_replied = Clock::now();

  if (reply.type == wire::FrameType::kError) {
    const wire::ErrorFrame error = wire::DecodeError(reply.payload);
    Fail(ErrorKind::kProtocol, "server error " + std::to_string(error.code) +
                                   ": " + error.message);
  }
  if (reply.type != wire::FrameType::kResponse) {
    Fail(ErrorKind::kProtocol, "expected a response frame");
  }
  result.response = wire::DecodeResponse(reply.payload);
  if (result.response.session_id != request.session_id) {
    Fail(ErrorKind::kProtocol, "response session id does not match request");
  }

  result.timing.sanitize_us = micros_between(t_start, t_sanitized);
  result.timing.embed_us = micros_between(t_sanitized, t_embedded);
  result.timing.serialize_us = micros_between(t_embedded, t_serialized);
  result.timing.network_us = micros_between(t_serialized, t_replied);
  result.timing.server_compute_us = result.response.compute_us;
  result.timing.total_us = micros_between(t_start, Clock::now());
  return result;
}

// Convenience overload that opens (and closes) its own connection.
inline ClientResult ClientInfer(const std::string& host, uint16_t port,
                                const std::string& text,
                                const EmbeddingStore& store,
                                const SensitivityPartition& partition,
                                const CandidateTable& table,
                                const ClientConfig& config,
                                const WireObserver& observer = nullptr) {
  const net::Socket socket = net::Connect(host, port);
  return ClientInfer(socket, text, store, partition, table, config, observer);
}

}  // namespace lexveil

#endif  // LEXVEIL_CLIENT_HPP_
