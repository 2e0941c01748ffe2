// Copyright 2026 The VolSeg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VOLSEG_RNG_HPP_
#define VOLSEG_RNG_HPP_

#include <cstdint>

namespace volseg {

namespace detail {

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator keyed by (seed, draw_index): a SplitMix64 stream
// whose initial state is a SplitMix64-finalizer hash of the key pair. The
// same pair always yields the same sequence regardless of call order or
// thread count, so callers may shard draw indices across workers. The
// algorithm is fixed per release; changing it breaks reproducibility.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t draw_index) {
    std::uint64_t h = detail::splitmix_finalize(seed + 0x9E3779B97F4A7C15ULL);
    state_ = detail::splitmix_finalize(h ^ (draw_index + 0xBF58476D1CE4E5B9ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return detail::splitmix_finalize(state_);
  }

  // Uniform in [0, n). Bounded multiply keeps the bias below 2^-64.
  std::int64_t next_index(std::int64_t n) {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(next_u64()) *
        static_cast<unsigned __int128>(n);
    return static_cast<std::int64_t>(wide >> 64);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  std::int64_t next_int_range(std::int64_t lo, std::int64_t hi) {
    return lo + next_index(hi - lo + 1);
  }

  bool bernoulli(double p) { return next_unit() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace volseg

#endif  // VOLSEG_RNG_HPP_
