/*
 * Copyright 2026 The ultr Authors.
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

#ifndef ULTR_RNG_H_
#define ULTR_RNG_H_

#include <cstdint>
#include <random>

namespace ultr {

using Engine = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for an independent stream identified by (seed, stream, index). Used to
// give every session / round / purpose its own generator so results do not
// depend on thread scheduling.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t index = 0) {
  return Mix64(Mix64(Mix64(seed) ^ stream) ^ index);
}

inline Engine MakeEngine(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t index = 0) {
  return Engine(DeriveSeed(seed, stream, index));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double UniformUnit(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Stream tags. Keep values stable: changing one changes every seeded output.
enum class Stream : std::uint64_t {
  kSyntheticData = 1,
  kSplit = 2,
  kInitialRanker = 3,
  kSessions = 4,
  kBagging = 5,
  kFeatureFraction = 6,
  kSubsample = 7,
};

inline Engine MakeEngine(std::uint64_t seed, Stream stream,
                         std::uint64_t index = 0) {
  return MakeEngine(seed, static_cast<std::uint64_t>(stream), index);
}

}  // namespace ultr

#endif  // ULTR_RNG_H_
