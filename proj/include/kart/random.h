// Copyright 2026 The KART Harness Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KART_RANDOM_H_
#define KART_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace kart {

// Stable 64-bit hash of a string (FNV-1a); used to derive per-item seeds.
uint64_t StableHash(std::string_view s);

uint64_t Mix64(uint64_t x);

// Derives an independent seed from a base seed and a path of item keys, so
// that per-(patient, category) or per-document streams do not depend on the
// order in which items are generated.
uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> path);

// Seeded generator whose conversions are written out explicitly so output is
// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n); n must be positive.
  uint64_t Below(uint64_t n);
  // Uniform integer in [lo, hi].
  int64_t Between(int64_t lo, int64_t hi);
  bool Bernoulli(double p) { return Uniform() < p; }
  double Normal();

  template <typename Container>
  const auto& Pick(const Container& items) {
    return items[Below(items.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kart

#endif  // KART_RANDOM_H_
