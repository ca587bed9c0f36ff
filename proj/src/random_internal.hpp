// Copyright 2026 The DIFT Game Authors.
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

// Random streams shared by the Monte Carlo evaluator and the learner.

#ifndef DIFT_SRC_RANDOM_INTERNAL_HPP_
#define DIFT_SRC_RANDOM_INTERNAL_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace dift::internal {

// 53 random bits scaled into [0, 1).
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw; zero-probability entries are never returned.
inline std::size_t sample(std::span<const double> dist,
                          std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    if (dist[a] <= 0.0) continue;
    acc += dist[a];
    last = a;
    if (u < acc) return a;
  }
  return last;
}

inline std::mt19937_64 stream(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

}  // namespace dift::internal

#endif  // DIFT_SRC_RANDOM_INTERNAL_HPP_
