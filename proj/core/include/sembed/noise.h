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

#ifndef SEMBED_NOISE_H_
#define SEMBED_NOISE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sembed/rng.h"
#include "sembed/vocab.h"

namespace sembed {

enum class NoiseKind { kDelete, kSwap, kMask, kReplace, kAdd };

NoiseKind noise_kind_from_string(const std::string& s);
const char* to_string(NoiseKind kind);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kDelete;
  double ratio = 0.6;
};

// Applies one noise model to a content-token sequence (no specials, no PAD):
//   delete:  drop each token with prob ratio; if all would go, keep one
//            uniformly chosen token
//   swap:    exchange ceil(ratio*l/2) disjoint random position pairs
//   mask:    each token becomes MASK with prob ratio
//   replace: each token becomes a uniform random content token with prob ratio
//   add:     insert ceil(ratio*l) uniform random content tokens at random
//            positions
// ratio 0 is the identity for every kind. Output is never empty.
std::vector<int64_t> corrupt(const std::vector<int64_t>& tokens,
                             const NoiseSpec& spec, const Vocabulary& vocab,
                             Rng& rng);

}  // namespace sembed

#endif  // SEMBED_NOISE_H_
