// Copyright 2026 The Lexveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lexveil/wire.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "lexveil/error.hpp"
#include "lexveil/store.hpp"

namespace lexveil::wire {
namespace {

void ExpectProtocolError(const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "expected kProtocol";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProtocol);
  }
}

TEST(FrameTest, HeaderLayoutIsPinned) {
  Frame frame;
  frame.type = FrameType::kResponse;
  frame.payload = {0xAA, 0xBB, 0xCC};
  const std::vector<uint8_t> bytes = EncodeFrame(frame);

  ASSERT_EQ(bytes.size(), kHeaderSize + 3);
  EXPECT_EQ(bytes[0], 'S');
  EXPECT_EQ(bytes[1], 'S');
  EXPECT_EQ(bytes[2], 'I');
  EXPECT_EQ(bytes[3], 'P');
  EXPECT_EQ(bytes[4], 1);  // version, little-endian low byte
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 2);  // response type
  EXPECT_EQ(bytes[7], 3);  // payload length, little-endian
  EXPECT_EQ(bytes[8], 0);
  EXPECT_EQ(bytes[9], 0);
  EXPECT_EQ(bytes[10], 0);
  EXPECT_EQ(bytes[11], 0xAA);
}

TEST(FrameTest, RoundTripsAllTypesAndEmptyPayload) {
  for (FrameType type :
       {FrameType::kRequest, FrameType::kResponse, FrameType::kError}) {
    Frame frame;
    frame.type = type;
    frame.payload = {1, 2, 3, 4, 5};
    const Frame back = DecodeFrame(EncodeFrame(frame));
    EXPECT_EQ(back.version, kProtocolVersion);
    EXPECT_EQ(back.type, type);
    EXPECT_EQ(back.payload, frame.payload);
  }

  Frame empty;
  empty.payload.clear();
  const Frame back = DecodeFrame(EncodeFrame(empty));
  EXPECT_TRUE(back.payload.empty());
}

TEST(FrameTest, ForeignVersionStillDecodes) {
  // Version negotiation is the server's job; the codec carries the number
  // through untouched so the peer can answer with a proper error frame.
  Frame frame;
  frame.version = 99;
  frame.payload = {7};
  const Frame back = DecodeFrame(EncodeFrame(frame));
  EXPECT_EQ(back.version, 99);
}

TEST(FrameTest, RejectsShortBuffer) {
  const std::vector<uint8_t> stub = {'S', 'S', 'I', 'P', 1, 0, 1};
  ExpectProtocolError([&] { DecodeFrame(stub); });
}

TEST(FrameTest, RejectsBadMagic) {
  Frame frame;
  frame.payload = {1};
  std::vector<uint8_t> bytes = EncodeFrame(frame);
  bytes[0] = 'X';
  ExpectProtocolError([&] { DecodeFrame(bytes); });
}

TEST(FrameTest, RejectsUnknownType) {
  Frame frame;
  std::vector<uint8_t> bytes = EncodeFrame(frame);
  bytes[6] = 0;
  ExpectProtocolError([&] { DecodeFrame(bytes); });
  bytes[6] = 4;
  ExpectProtocolError([&] { DecodeFrame(bytes); });
}

TEST(FrameTest, RejectsLengthMismatch) {
  Frame frame;
  frame.payload = {1, 2, 3};
  std::vector<uint8_t> bytes = EncodeFrame(frame);

  std::vector<uint8_t> longer = bytes;
  longer.push_back(0);
  ExpectProtocolError([&] { DecodeFrame(longer); });

  std::vector<uint8_t> shorter = bytes;
  shorter.pop_back();
  ExpectProtocolError([&] { DecodeFrame(shorter); });
}

TEST(FrameTest, RejectsOversizedLengthField) {
  std::vector<uint8_t> bytes = {'S', 'S', 'I', 'P', 1, 0, 1, 0, 0, 0, 0};
  const uint32_t huge = kMaxPayload + 1;
  for (int i = 0; i < 4; ++i) {
    bytes[7 + i] = static_cast<uint8_t>(huge >> (8 * i));
  }
  ExpectProtocolError([&] { DecodeFrame(bytes); });
}

TEST(RequestCodecTest, RoundTripsIdsIncludingOov) {
  InferenceRequest request;
  request.session_id = 0x0123456789ABCDEFULL;
  request.token_ids = {0, 42, kOovId, 7};

  const std::vector<uint8_t> payload = EncodeRequest(request);
  const InferenceRequest back = DecodeRequest(payload);
  EXPECT_EQ(back.session_id, request.session_id);
  EXPECT_EQ(back.token_ids, request.token_ids);
}

TEST(RequestCodecTest, PayloadLayoutIsPinned) {
  InferenceRequest request;
  request.session_id = 2;
  request.token_ids = {0x01020304};

  const std::vector<uint8_t> payload = EncodeRequest(request);
  ASSERT_EQ(payload.size(), 8u + 4u + 4u);
  EXPECT_EQ(payload[0], 2);   // session id, little-endian
  EXPECT_EQ(payload[8], 1);   // token count
  EXPECT_EQ(payload[12], 0x04);
  EXPECT_EQ(payload[13], 0x03);
  EXPECT_EQ(payload[14], 0x02);
  EXPECT_EQ(payload[15], 0x01);
}

TEST(RequestCodecTest, RejectsTruncationAndTrailingBytes) {
  InferenceRequest request;
  request.token_ids = {1, 2, 3};
  std::vector<uint8_t> payload = EncodeRequest(request);

  std::vector<uint8_t> truncated(payload.begin(), payload.end() - 1);
  ExpectProtocolError([&] { DecodeRequest(truncated); });

  std::vector<uint8_t> padded = payload;
  padded.push_back(0);
  ExpectProtocolError([&] { DecodeRequest(padded); });
}

TEST(ResponseCodecTest, RoundTripsComputeTime) {
  InferenceResponse response;
  response.session_id = 77;
  response.output_ids = {5, 6, kOovId};
  response.compute_us = 123'456'789;

  const InferenceResponse back = DecodeResponse(EncodeResponse(response));
  EXPECT_EQ(back.session_id, 77u);
  EXPECT_EQ(back.output_ids, response.output_ids);
  EXPECT_EQ(back.compute_us, 123'456'789u);
}

TEST(ResponseCodecTest, RejectsTruncation) {
  InferenceResponse response;
  response.output_ids = {1};
  std::vector<uint8_t> payload = EncodeResponse(response);
  payload.pop_back();
  ExpectProtocolError([&] { DecodeResponse(payload); });
}

TEST(ErrorCodecTest, RoundTripsCodeAndMessage) {
  ErrorFrame error;
  error.code = kErrUnsupportedVersion;
  error.message = "protocol version 9 is not supported";

  const ErrorFrame back = DecodeError(EncodeError(error));
  EXPECT_EQ(back.code, kErrUnsupportedVersion);
  EXPECT_EQ(back.message, error.message);

  ErrorFrame plain;
  plain.code = kErrInternal;
  const ErrorFrame empty = DecodeError(EncodeError(plain));
  EXPECT_EQ(empty.code, kErrInternal);
  EXPECT_TRUE(empty.message.empty());
}

TEST(ErrorCodecTest, RejectsTruncatedMessage) {
  ErrorFrame error;
  error.code = kErrMalformedPayload;
  error.message = "bad";
  std::vector<uint8_t> payload = EncodeError(error);
  payload.pop_back();
  ExpectProtocolError([&] { DecodeError(payload); });
}

// Randomized round-trip: any frame the encoder produces must survive a
// decode/re-encode cycle byte for byte, and any corrupted buffer must either
// decode to a still-consistent frame or raise a protocol error -- never
// anything else.
TEST(WireFuzzTest, EncodedFramesSurviveAndMutationsFailCleanly) {
  std::mt19937_64 gen(20260819);
  std::uniform_int_distribution<int> kind_dist(0, 2);
  std::uniform_int_distribution<size_t> count_dist(0, 12);
  std::uniform_int_distribution<uint32_t> id_dist(0, 500);
  std::uniform_int_distribution<uint64_t> wide_dist;
  std::uniform_int_distribution<int> byte_dist(0, 255);

  for (int round = 0; round < 10'000; ++round) {
    Frame frame;
    switch (kind_dist(gen)) {
      case 0: {
        InferenceRequest request;
        request.session_id = wide_dist(gen);
        request.token_ids.resize(count_dist(gen));
        for (auto& id : request.token_ids) {
          id = (byte_dist(gen) == 0) ? kOovId : id_dist(gen);
        }
        frame.type = FrameType::kRequest;
        frame.payload = EncodeRequest(request);
        break;
      }
      case 1: {
        InferenceResponse response;
        response.session_id = wide_dist(gen);
        response.compute_us = wide_dist(gen);
        response.output_ids.resize(count_dist(gen));
        for (auto& id : response.output_ids) id = id_dist(gen);
        frame.type = FrameType::kResponse;
        frame.payload = EncodeResponse(response);
        break;
      }
      default: {
        ErrorFrame error;
        error.code = static_cast<uint16_t>(1 + (round % 3));
        error.message.assign(count_dist(gen), 'e');
        frame.type = FrameType::kError;
        frame.payload = EncodeError(error);
        break;
      }
    }

    const std::vector<uint8_t> bytes = EncodeFrame(frame);
    const Frame decoded = DecodeFrame(bytes);
    EXPECT_EQ(EncodeFrame(decoded), bytes) << "round " << round;

    // Corrupt one byte (or truncate) and require a clean outcome.
    std::vector<uint8_t> mutant = bytes;
    if (byte_dist(gen) < 32 && !mutant.empty()) {
      mutant.resize(mutant.size() - 1 - (count_dist(gen) % mutant.size()));
    } else {
      std::uniform_int_distribution<size_t> pos_dist(0, mutant.size() - 1);
      const size_t pos = pos_dist(gen);
      mutant[pos] = static_cast<uint8_t>(mutant[pos] ^
                                         (1u << (byte_dist(gen) % 8)));
    }
    try {
      const Frame survived = DecodeFrame(mutant);
      EXPECT_EQ(EncodeFrame(survived), mutant) << "round " << round;
      switch (survived.type) {
        case FrameType::kRequest:
          DecodeRequest(survived.payload);
          break;
        case FrameType::kResponse:
          DecodeResponse(survived.payload);
          break;
        case FrameType::kError:
          DecodeError(survived.payload);
          break;
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kProtocol) << "round " << round;
    }
  }
}

}  // namespace
}  // namespace lexveil::wire
