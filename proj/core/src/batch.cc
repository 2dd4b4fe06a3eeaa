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

#include "sembed/batch.h"

#include <algorithm>

#include "sembed/error.h"

namespace sembed {

PaddedBatch pad_sequences(const std::vector<std::vector<int64_t>>& seqs) {
  SEMBED_CHECK(!seqs.empty(), ContractError, "pad_sequences: empty batch");
  PaddedBatch b;
  b.rows = static_cast<int64_t>(seqs.size());
  for (const auto& s : seqs) {
    SEMBED_CHECK(!s.empty(), ContractError, "pad_sequences: empty sequence");
    b.cols = std::max(b.cols, static_cast<int64_t>(s.size()));
  }
  b.ids.assign(static_cast<size_t>(b.rows * b.cols), kPadId);
  b.lengths.reserve(seqs.size());
  for (int64_t r = 0; r < b.rows; ++r) {
    const auto& s = seqs[static_cast<size_t>(r)];
    std::copy(s.begin(), s.end(), b.ids.begin() + r * b.cols);
    b.lengths.push_back(static_cast<int64_t>(s.size()));
  }
  return b;
}

std::vector<double> content_mask(const PaddedBatch& batch) {
  std::vector<double> m(static_cast<size_t>(batch.rows * batch.cols), 0.0);
  for (int64_t r = 0; r < batch.rows; ++r) {
    for (int64_t c = 0; c < batch.lengths[static_cast<size_t>(r)]; ++c) {
      m[static_cast<size_t>(r * batch.cols + c)] = 1.0;
    }
  }
  return m;
}

DenoisingBatch make_denoising_batch(const std::vector<std::vector<int64_t>>& sentences,
                                    const NoiseSpec& spec, const Vocabulary& vocab,
                                    Rng& rng) {
  SEMBED_CHECK(!sentences.empty(), ContractError, "make_denoising_batch: empty batch");
  std::vector<std::vector<int64_t>> corrupted;
  corrupted.reserve(sentences.size());
  for (const auto& s : sentences) {
    corrupted.push_back(corrupt(s, spec, vocab, rng));
  }
  DenoisingBatch out;
  out.corrupted = pad_sequences(corrupted);
  out.target = pad_sequences(sentences);
  return out;
}

}  // namespace sembed
