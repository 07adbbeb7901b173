// Copyright 2026 The adlab Authors.
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

#ifndef ADLAB_RNG_H_
#define ADLAB_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace adlab {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a.
inline std::uint64_t HashString(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Child seed for (component, index). Streams of different components are
// independent of each other, so adding a component never shifts another's.
inline std::uint64_t DeriveSeed(std::uint64_t master, std::string_view component,
                                std::uint64_t index = 0) {
  return Mix64(Mix64(master ^ HashString(component)) + Mix64(index));
}

inline Rng MakeRng(std::uint64_t master, std::string_view component,
                   std::uint64_t index = 0) {
  return Rng(DeriveSeed(master, component, index));
}

}  // namespace adlab

#endif  // ADLAB_RNG_H_
