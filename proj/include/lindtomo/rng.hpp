// Copyright 2026 The lindtomo Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace lindtomo {

/// Named sub-streams of one run seed.
enum class StreamDomain : std::uint64_t {
  kAcquisition = 1,
  kShadowSettings = 2,
  kShadowOutcomes = 3,
  kSubsampling = 4,
  kContamination = 5,
  kGroundTruth = 6,
  kTimes = 7,
  kTest = 99,
};

__extension__ using uint128 = unsigned __int128;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream key for (seed, domain, a, b); a and b are typically the time
/// index and shot index.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, StreamDomain domain,
                                          std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t k = splitmix64(seed ^ 0x6c696e64746f6d6fULL);
  k = splitmix64(k ^ static_cast<std::uint64_t>(domain));
  k = splitmix64(k ^ a);
  return splitmix64(k ^ (b * 0xd1342543de82ef95ULL));
}

/// Counter-based generator: draw k of stream `key` is splitmix64(key + k*phi).
/// Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t key) : key_(key) {}
  static constexpr Stream derive(std::uint64_t seed, StreamDomain domain, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    return Stream(derive_key(seed, domain, a, b));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(key_ + counter_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bias-free (Lemire).
  std::uint64_t bounded(std::uint64_t bound) {
    uint128 m = static_cast<uint128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<uint128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal by Box-Muller (one variate per call).
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

template <class T>
void shuffle(std::span<T> items, Stream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// k distinct indices from [0, total), in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t total, std::size_t k, Stream& rng);

}  // namespace lindtomo
