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

#include "lindtomo/rng.hpp"

#include <numeric>
#include <unordered_map>

#include "lindtomo/error.hpp"

namespace lindtomo {

std::vector<std::size_t> sample_without_replacement(std::size_t total, std::size_t k,
                                                    Stream& rng) {
  if (k > total) throw DomainError("cannot draw more items than available");
  if (k < total / 8) {
    // Same swap sequence with only the displaced slots stored.
    std::unordered_map<std::size_t, std::size_t> moved;
    moved.reserve(2 * k);
    auto at = [&](std::size_t i) {
      const auto it = moved.find(i);
      return it == moved.end() ? i : it->second;
    };
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.bounded(total - i));
      const std::size_t vi = at(i);
      out[i] = at(j);
      moved[j] = vi;
    }
    return out;
  }
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.bounded(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace lindtomo
