// Copyright 2026 svslab authors
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

#ifndef SVS_RNG_HPP
#define SVS_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace svs {

// splitmix64 finalizer; good avalanche for seed mixing.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hash_tag(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Counter-derived RNG streams: every consumer of randomness gets its own
// generator keyed by (seed, purpose, counters), so results do not depend on
// evaluation order or scheduling.
inline std::mt19937_64 stream(uint64_t seed, std::string_view purpose, uint64_t a = 0,
                              uint64_t b = 0) {
  uint64_t s = mix64(seed ^ mix64(hash_tag(purpose)) ^ mix64(a * 0x9e3779b97f4a7c15ull + b));
  return std::mt19937_64(s);
}

}  // namespace svs

#endif  // SVS_RNG_HPP
