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

#ifndef SEMBED_OBJECTIVES_H_
#define SEMBED_OBJECTIVES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sembed/batch.h"
#include "sembed/model.h"
#include "sembed/noise.h"

namespace sembed {

// Every objective is split in two: batch preparation consumes randomness
// (corruption, token selection, negative sampling) and loss construction is
// a deterministic function of the prepared batch and the parameters. That
// split is what makes the losses checkable by finite differences.

// ---------------------------------------------------------------------------
// Denoising auto-encoder reconstruction.

struct TsdaeBatch {
  PaddedBatch encoder_in;           // [CLS] + corrupted tokens
  PaddedBatch decoder_in;           // [CLS] + gold[0 .. L-2] (shifted right)
  std::vector<int64_t> targets;     // flat [B*T] gold ids, PAD at padding
  Tensor target_mask;               // [B*T], 1.0 where a gold token sits
  int64_t num_targets = 0;          // number of ones in target_mask
};

// Corrupts each sentence independently, in order. Sentences are truncated to
// max_len gold tokens before corruption; the corrupted side is truncated to
// max_len - 1 so [CLS] fits.
TsdaeBatch make_tsdae_batch(const std::vector<std::vector<int64_t>>& sentences,
                            const NoiseSpec& noise, const Vocabulary& vocab,
                            Rng& rng, int64_t max_len);

// Mean reconstruction cross-entropy over gold token positions. The decoder
// sees the sentence only through the pooled embedding.
Var tsdae_loss(Tape& tape, const TransformerEncoder& enc,
               const TransformerDecoder& dec, const TsdaeBatch& batch,
               bool train = false, Rng* dropout_rng = nullptr,
               AttnProbe* probe = nullptr);

// ---------------------------------------------------------------------------
// Masked language modeling.

struct MlmBatch {
  PaddedBatch input;                // [CLS] + sentence with selections applied
  std::vector<int64_t> targets;     // flat [B*S] original ids, PAD elsewhere
  Tensor target_mask;               // [B*S], 1.0 at selected positions
  int64_t num_selected = 0;
};

// Selects each content position with prob `select_prob`; a selected token is
// replaced by [MASK] (80%), a random content token (10%), or kept (10%).
// If no position is selected the whole selection is redrawn once; a second
// empty draw is an error.
MlmBatch make_mlm_batch(const std::vector<std::vector<int64_t>>& sentences,
                        const Vocabulary& vocab, double select_prob, Rng& rng,
                        int64_t max_len);

// Mean cross-entropy at selected positions; logits are scored against the
// encoder's own token embedding table.
Var mlm_loss(Tape& tape, const TransformerEncoder& enc, const MlmBatch& batch,
             bool train = false, Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Contrastive objectives.

// Row-normalizes both sides and returns the [B, B] cosine matrix. A zero-norm
// embedding is a domain error.
Var cosine_matrix(Tape& tape, Var a, Var b);

// Per-row cosine between paired rows of a and b, shape [B].
Var cosine_rows(Tape& tape, Var a, Var b);

struct PairBatch {
  std::vector<std::vector<int64_t>> x;
  std::vector<std::vector<int64_t>> y;
};

// Multiple-negatives ranking: scaled cosine matrix between the x side and the
// y side, cross-entropy against the diagonal. All x rows are embedded before
// any y row so the two sides take independent dropout draws.
Var mnrl_loss(Tape& tape, const TransformerEncoder& enc, const PairBatch& batch,
              double scale = 20.0, bool train = false,
              Rng* dropout_rng = nullptr);

// MNRL where both sides are the same sentences and dropout provides the
// augmentation. Constructs the identical graph to mnrl_loss on (s, s).
Var simcse_loss(Tape& tape, const TransformerEncoder& enc,
                const std::vector<std::vector<int64_t>>& sentences,
                double scale = 20.0, bool train = true,
                Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Contrastive tension (two independent towers).

struct CtBatch {
  std::vector<std::vector<int64_t>> a;  // tower-1 side
  std::vector<std::vector<int64_t>> b;  // tower-2 side
  std::vector<int64_t> labels;          // 1 identical pair, 0 negative
};

// For each anchor index: one (anchor, anchor) positive plus `num_negatives`
// (anchor, random other sentence) negatives.
CtBatch make_ct_batch(const std::vector<std::vector<int64_t>>& corpus,
                      const std::vector<size_t>& anchor_indices,
                      int64_t num_negatives, Rng& rng);

// Binary cross-entropy on the dot product of the two towers' embeddings,
// computed stably as two-class cross-entropy over logits [0, z]. Tower 1 is
// the model that is kept after training.
Var ct_loss(Tape& tape, const TransformerEncoder& tower1,
            const TransformerEncoder& tower2, const CtBatch& batch,
            bool train = false, Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Regression on gold similarity scores.

struct ScoredPairBatch {
  std::vector<std::vector<int64_t>> x;
  std::vector<std::vector<int64_t>> y;
  std::vector<double> scores;  // gold similarities, one per pair
};

// Mean squared difference between pairwise cosine and the gold score.
Var mse_loss(Tape& tape, const TransformerEncoder& enc,
             const ScoredPairBatch& batch, bool train = false,
             Rng* dropout_rng = nullptr);

}  // namespace sembed

#endif  // SEMBED_OBJECTIVES_H_
