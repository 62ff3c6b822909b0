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

#ifndef LEXVEIL_RNG_HPP_
#define LEXVEIL_RNG_HPP_

#include <array>
#include <cmath>
#include <cstdint>

#include "lexveil/error.hpp"

namespace lexveil {

namespace detail {

inline uint64_t SplitMix64Next(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline uint64_t RotL(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

// Deterministic random stream keyed by (seed, stream id). Identical keys
// reproduce identical draw sequences on every platform; distinct stream ids
// give statistically independent sequences, so parallel workers each take
// their own stream. xoshiro256++ state, seeded through splitmix64.
class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    // Fold the stream id into the seeding path through an odd multiplier so
    // consecutive ids land far apart in splitmix's sequence space.
    uint64_t x = seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1));
    for (auto& word : state_) word = detail::SplitMix64Next(x);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
      state_[0] = 0x9E3779B97F4A7C15ULL;
    }
  }

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t NextU64() {
    const uint64_t result =
        detail::RotL(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::RotL(state_[3], 45);
    return result;
  }

  // Uniform draw in [0, 1), 53 mantissa bits.
  double NextUnit() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Uniform draw in the open interval (0, 1); never returns an endpoint, so
  // it is safe to feed through a logarithm.
  double NextOpenUnit() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // One uniform draw per decision keeps the draw schedule auditable.
  bool NextBernoulli(double probability) { return NextUnit() < probability; }

  // Laplace(0, scale) via the inverse CDF of a single uniform draw.
  double NextLaplace(double scale) {
    if (!(scale > 0.0)) {
      Fail(ErrorKind::kParameter, "laplace scale must be positive");
    }
    const double u = NextOpenUnit() - 0.5;
    const double magnitude = -scale * std::log(1.0 - 2.0 * std::fabs(u));
    return u < 0.0 ? -magnitude : magnitude;
  }

 private:
  std::array<uint64_t, 4> state_;
  uint64_t seed_;
  uint64_t stream_id_;
};

}  // namespace lexveil

#endif  // LEXVEIL_RNG_HPP_
