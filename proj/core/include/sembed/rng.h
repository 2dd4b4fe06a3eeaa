// Copyright (c) 2026 The sembed Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEMBED_RNG_H_
#define SEMBED_RNG_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sembed {

// Deterministic RNG. All sampling goes through this class so results are
// pinned by this code alone, not by standard-library distribution internals
// (those are implementation defined). Every run artifact that must be
// byte-reproducible derives from a (seed, stream name) pair.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Raw 64 random bits.
  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1). 53-bit resolution.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be positive. Rejection sampled, so the
  // distribution is exact.
  uint64_t uniform_int(uint64_t n);

  // Standard normal via Box-Muller. Both draws of a pair are consumed
  // immediately; no state is cached across calls.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Sample k distinct indices from [0, n) in selection order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k);

 private:
  std::mt19937_64 engine_;
};

// Derives a child seed from (seed, name). Different names give statistically
// independent streams; the mapping is stable across runs and platforms.
uint64_t derive_seed(uint64_t seed, const std::string& name);

}  // namespace sembed

#endif  // SEMBED_RNG_H_
