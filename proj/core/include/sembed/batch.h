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

#ifndef SEMBED_BATCH_H_
#define SEMBED_BATCH_H_

#include <cstdint>
#include <vector>

#include "sembed/noise.h"
#include "sembed/rng.h"
#include "sembed/vocab.h"

namespace sembed {

// Row-major [rows, cols] id matrix padded with kPadId, plus true lengths.
struct PaddedBatch {
  std::vector<int64_t> ids;
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> lengths;

  int64_t at(int64_t r, int64_t c) const { return ids[static_cast<size_t>(r * cols + c)]; }
  std::vector<int64_t> row(int64_t r) const {
    return std::vector<int64_t>(ids.begin() + r * cols,
                                ids.begin() + r * cols + lengths[static_cast<size_t>(r)]);
  }
};

PaddedBatch pad_sequences(const std::vector<std::vector<int64_t>>& seqs);

// Per-position loss mask: 1.0 at content positions, 0.0 at PAD, flattened
// row-major.
std::vector<double> content_mask(const PaddedBatch& batch);

// Inputs for one denoising step: corrupted encoder inputs and clean decoder
// targets, padded independently. No specials are added here; model code
// prepends CLS where it needs it.
struct DenoisingBatch {
  PaddedBatch corrupted;
  PaddedBatch target;
};

DenoisingBatch make_denoising_batch(const std::vector<std::vector<int64_t>>& sentences,
                                    const NoiseSpec& spec, const Vocabulary& vocab,
                                    Rng& rng);

}  // namespace sembed

#endif  // SEMBED_BATCH_H_
