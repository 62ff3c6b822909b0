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

#ifndef LEXVEIL_WIRE_HPP_
#define LEXVEIL_WIRE_HPP_

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "lexveil/error.hpp"

namespace lexveil::wire {

// Length-prefixed binary framing, little-endian throughout:
//   magic "SSIP" | version u16 | frame type u8 | payload length u32 | payload
// Only sanitized token ids ever cross this boundary.

inline constexpr uint16_t kProtocolVersion = 1;
inline constexpr size_t kHeaderSize = 4 + 2 + 1 + 4;
inline constexpr uint32_t kMaxPayload = 1u << 26;

enum class FrameType : uint8_t {
  kRequest = 1,
  kResponse = 2,
  kError = 3,
};

enum ErrorCode : uint16_t {
  kErrUnsupportedVersion = 1,
  kErrMalformedPayload = 2,
  kErrInternal = 3,
};

struct Frame {
  uint16_t version = kProtocolVersion;
  FrameType type = FrameType::kRequest;
  std::vector<uint8_t> payload;
};

struct InferenceRequest {
  uint64_t session_id = 0;
  std::vector<uint32_t> token_ids;  // sanitized ids, or kOovId
};

struct InferenceResponse {
  uint64_t session_id = 0;
  std::vector<uint32_t> output_ids;
  uint64_t compute_us = 0;
};

struct ErrorFrame {
  uint16_t code = kErrInternal;
  std::string message;
};

namespace detail {

inline void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void PutU64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> data) : data_(data) {}

  uint16_t U16() { return static_cast<uint16_t>(Byte() | (Byte() << 8)); }

  uint32_t U32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(Byte()) << (8 * i);
    return v;
  }

  uint64_t U64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(Byte()) << (8 * i);
    return v;
  }

  std::string Bytes(size_t n) {
    if (pos_ + n > data_.size()) {
      Fail(ErrorKind::kProtocol, "frame payload truncated");
    }
    std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return out;
  }

  bool Done() const { return pos_ == data_.size(); }

  size_t Remaining() const { return data_.size() - pos_; }

 private:
  uint32_t Byte() {
    if (pos_ >= data_.size()) {
      Fail(ErrorKind::kProtocol, "frame payload truncated");
    }
    return data_[pos_++];
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<uint8_t> EncodeFrame(const Frame& frame) {
  const uint32_t length = static_cast<uint32_t>(frame.payload.size());
  std::vector<uint8_t> out(kHeaderSize + frame.payload.size());
  out[0] = 'S';
  out[1] = 'S';
  out[2] = 'I';
  out[3] = 'P';
  out[4] = static_cast<uint8_t>(frame.version);
  out[5] = static_cast<uint8_t>(frame.version >> 8);
  out[6] = static_cast<uint8_t>(frame.type);
  for (int i = 0; i < 4; ++i) {
    out[7 + i] = static_cast<uint8_t>(length >> (8 * i));
  }
  std::copy(frame.payload.begin(), frame.payload.end(),
            out.begin() + kHeaderSize);
  return out;
}

inline Frame DecodeFrame(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    Fail(ErrorKind::kProtocol, "frame shorter than header");
  }
  if (std::memcmp(bytes.data(), "SSIP", 4) != 0) {
    Fail(ErrorKind::kProtocol, "bad frame magic");
  }
  Frame frame;
  frame.version = static_cast<uint16_t>(bytes[4] | (bytes[5] << 8));
  const uint8_t raw_type = bytes[6];
  if (raw_type < 1 || raw_type > 3) {
    Fail(ErrorKind::kProtocol,
         "unknown frame type " + std::to_string(raw_type));
  }
  frame.type = static_cast<FrameType>(raw_type);
  uint32_t length = 0;
  for (int i = 0; i < 4; ++i) {
    length |= static_cast<uint32_t>(bytes[7 + i]) << (8 * i);
  }
  if (length > kMaxPayload) {
    Fail(ErrorKind::kProtocol, "frame payload length out of range");
  }
  if (bytes.size() != kHeaderSize + length) {
    Fail(ErrorKind::kProtocol, "frame length does not match payload");
  }
  frame.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  return frame;
}

inline std::vector<uint8_t> EncodeRequest(const InferenceRequest& request) {
  std::vector<uint8_t> payload;
  payload.reserve(12 + 4 * request.token_ids.size());
  detail::PutU64(payload, request.session_id);
  detail::PutU32(payload, static_cast<uint32_t>(request.token_ids.size()));
  for (uint32_t id : request.token_ids) detail::PutU32(payload, id);
  return payload;
}

inline InferenceRequest DecodeRequest(std::span<const uint8_t> payload) {
  detail::Reader reader(payload);
  InferenceRequest request;
  request.session_id = reader.U64();
  const uint32_t count = reader.U32();
  // Check the claimed count against the bytes actually present before
  // reserving, so a corrupted prefix cannot demand a huge allocation.
  if (count > reader.Remaining() / 4) {
    Fail(ErrorKind::kProtocol, "frame payload truncated");
  }
  request.token_ids.reserve(count);
  for (uint32_t i = 0; i < count; ++i) request.token_ids.push_back(reader.U32());
  if (!reader.Done()) {
    Fail(ErrorKind::kProtocol, "trailing bytes after request payload");
  }
  return request;
}

inline std::vector<uint8_t> EncodeResponse(const InferenceResponse& response) {
  std::vector<uint8_t> payload;
  payload.reserve(20 + 4 * response.output_ids.size());
  detail::PutU64(payload, response.session_id);
  detail::PutU32(payload, static_cast<uint32_t>(response.output_ids.size()));
  for (uint32_t id : response.output_ids) detail::PutU32(payload, id);
  detail::PutU64(payload, response.compute_us);
  return payload;
}

inline InferenceResponse DecodeResponse(std::span<const uint8_t> payload) {
  detail::Reader reader(payload);
  InferenceResponse response;
  response.session_id = reader.U64();
  const uint32_t count = reader.U32();
  if (count > reader.Remaining() / 4) {
    Fail(ErrorKind::kProtocol, "frame payload truncated");
  }
  response.output_ids.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    response.output_ids.push_back(reader.U32());
  }
  response.compute_us = reader.U64();
  if (!reader.Done()) {
    Fail(ErrorKind::kProtocol, "trailing bytes after response payload");
  }
  return response;
}

inline std::vector<uint8_t> EncodeError(const ErrorFrame& error) {
  std::vector<uint8_t> payload;
  detail::PutU16(payload, error.code);
  detail::PutU32(payload, static_cast<uint32_t>(error.message.size()));
  payload.insert(payload.end(), error.message.begin(), error.message.end());
  return payload;
}

inline ErrorFrame DecodeError(std::span<const uint8_t> payload) {
  detail::Reader reader(payload);
  ErrorFrame error;
  error.code = reader.U16();
  const uint32_t length = reader.U32();
  error.message = reader.Bytes(length);
  if (!reader.Done()) {
    Fail(ErrorKind::kProtocol, "trailing bytes after error payload");
  }
  return error;
}

}  // namespace lexveil::wire

#endif  // LEXVEIL_WIRE_HPP_
