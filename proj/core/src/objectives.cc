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

#include "sembed/objectives.h"

#include <utility>

#include "sembed/error.h"

namespace sembed {

namespace {

// Masked mean of per-row cross-entropy: sum(ce * mask) / count.
Var masked_mean_ce(Tape& tape, Var logits_flat, const std::vector<int64_t>& targets,
                   const Tensor& mask, int64_t count) {
  SEMBED_CHECK(count > 0, ContractError, "no target positions in batch");
  Var ce = cross_entropy_with_logits(logits_flat, targets);
  Var masked = mul(ce, tape.constant(mask));
  return scale(sum_all(masked), 1.0 / static_cast<double>(count));
}

// L2-normalizes the rows of a [B, d] matrix. Norm zero is rejected before
// the reciprocal is built.
Var normalize_rows(Tape& tape, Var a) {
  (void)tape;
  SEMBED_CHECK(a.shape().size() == 2, ShapeError, "expected [B, d] embeddings");
  Var sq = sum_last(mul(a, a));  // [B, 1]
  const Tensor& sqv = sq.value();
  for (int64_t i = 0; i < sqv.numel(); ++i) {
    SEMBED_CHECK(sqv[i] > 0.0, DomainError,
                 "cannot cosine-normalize a zero embedding (row ", i, ")");
  }
  return mul(a, reciprocal_pos(sqrt(sq)));
}

void check_pair_sides(size_t xs, size_t ys) {
  SEMBED_CHECK(xs == ys, ContractError, "pair batch sides differ: ", xs,
               " vs ", ys);
  SEMBED_CHECK(xs >= 1, ContractError, "empty pair batch");
}

}  // namespace

// ---------------------------------------------------------------------------
// TSDAE

TsdaeBatch make_tsdae_batch(const std::vector<std::vector<int64_t>>& sentences,
                            const NoiseSpec& noise, const Vocabulary& vocab,
                            Rng& rng, int64_t max_len) {
  SEMBED_CHECK(!sentences.empty(), ContractError, "empty batch");
  SEMBED_CHECK(max_len >= 2, ContractError, "max_len must be >= 2");

  std::vector<std::vector<int64_t>> enc_rows, dec_rows, gold_rows;
  for (const auto& sent : sentences) {
    SEMBED_CHECK(!sent.empty(), ContractError, "empty sentence in batch");
    std::vector<int64_t> gold(sent.begin(),
                              sent.begin() + std::min<size_t>(sent.size(),
                                                              static_cast<size_t>(max_len)));
    std::vector<int64_t> corrupted = corrupt(gold, noise, vocab, rng);
    if (static_cast<int64_t>(corrupted.size()) > max_len - 1) {
      corrupted.resize(static_cast<size_t>(max_len - 1));
    }

    std::vector<int64_t> enc_row{kClsId};
    enc_row.insert(enc_row.end(), corrupted.begin(), corrupted.end());
    std::vector<int64_t> dec_row{kClsId};
    dec_row.insert(dec_row.end(), gold.begin(), gold.end() - 1);

    enc_rows.push_back(std::move(enc_row));
    dec_rows.push_back(std::move(dec_row));
    gold_rows.push_back(std::move(gold));
  }

  TsdaeBatch out;
  out.encoder_in = pad_sequences(enc_rows);
  out.decoder_in = pad_sequences(dec_rows);

  const int64_t b = out.decoder_in.rows, t = out.decoder_in.cols;
  out.targets.assign(static_cast<size_t>(b * t), kPadId);
  out.target_mask = Tensor::zeros({b * t});
  for (int64_t r = 0; r < b; ++r) {
    const auto& gold = gold_rows[static_cast<size_t>(r)];
    for (size_t c = 0; c < gold.size(); ++c) {
      out.targets[static_cast<size_t>(r * t) + c] = gold[c];
      out.target_mask[r * t + static_cast<int64_t>(c)] = 1.0;
      ++out.num_targets;
    }
  }
  return out;
}

Var tsdae_loss(Tape& tape, const TransformerEncoder& enc,
               const TransformerDecoder& dec, const TsdaeBatch& batch,
               bool train, Rng* dropout_rng, AttnProbe* probe) {
  Var hidden = enc.forward(tape, batch.encoder_in, train, dropout_rng);
  Var sent = pool(hidden, batch.encoder_in.lengths, enc.config().pooling);
  Var dh = dec.forward(tape, sent, batch.decoder_in, train, dropout_rng, probe);
  Var lg = dec.logits(tape, dh);  // [B, T, N]
  const int64_t b = lg.shape()[0], t = lg.shape()[1], n = lg.shape()[2];
  return masked_mean_ce(tape, reshape(lg, {b * t, n}), batch.targets,
                        batch.target_mask, batch.num_targets);
}

// ---------------------------------------------------------------------------
// MLM

MlmBatch make_mlm_batch(const std::vector<std::vector<int64_t>>& sentences,
                        const Vocabulary& vocab, double select_prob, Rng& rng,
                        int64_t max_len) {
  SEMBED_CHECK(!sentences.empty(), ContractError, "empty batch");
  SEMBED_CHECK(select_prob > 0.0 && select_prob <= 1.0, ContractError,
               "select_prob must be in (0, 1]");
  SEMBED_CHECK(vocab.content_size() >= 1, DataError,
               "masked-token replacement needs at least one content token");

  std::vector<std::vector<int64_t>> rows;
  for (const auto& sent : sentences) {
    SEMBED_CHECK(!sent.empty(), ContractError, "empty sentence in batch");
    std::vector<int64_t> row{kClsId};
    for (size_t i = 0; i < sent.size() &&
                       static_cast<int64_t>(i) < max_len - 1; ++i) {
      row.push_back(sent[i]);
    }
    rows.push_back(std::move(row));
  }

  // [CLS] at position 0 is never a candidate.
  auto draw = [&]() {
    std::vector<std::pair<size_t, size_t>> sel;
    for (size_t r = 0; r < rows.size(); ++r) {
      for (size_t c = 1; c < rows[r].size(); ++c) {
        if (rng.bernoulli(select_prob)) sel.emplace_back(r, c);
      }
    }
    return sel;
  };
  auto selected = draw();
  if (selected.empty()) selected = draw();
  SEMBED_CHECK(!selected.empty(), DataError,
               "no position selected for masking after a redraw");

  std::vector<std::pair<std::pair<size_t, size_t>, int64_t>> originals;
  for (const auto& [r, c] : selected) {
    const int64_t orig = rows[r][c];
    const double u = rng.uniform();
    if (u < 0.8) {
      rows[r][c] = kMaskId;
    } else if (u < 0.9) {
      rows[r][c] = kNumSpecials + rng.uniform_int(vocab.content_size());
    }  // else keep the token
    originals.push_back({{r, c}, orig});
  }

  MlmBatch out;
  out.input = pad_sequences(rows);
  const int64_t b = out.input.rows, s = out.input.cols;
  out.targets.assign(static_cast<size_t>(b * s), kPadId);
  out.target_mask = Tensor::zeros({b * s});
  for (const auto& [rc, orig] : originals) {
    const int64_t flat = static_cast<int64_t>(rc.first) * s +
                         static_cast<int64_t>(rc.second);
    out.targets[static_cast<size_t>(flat)] = orig;
    out.target_mask[flat] = 1.0;
    ++out.num_selected;
  }
  return out;
}

Var mlm_loss(Tape& tape, const TransformerEncoder& enc, const MlmBatch& batch,
             bool train, Rng* dropout_rng) {
  Var hidden = enc.forward(tape, batch.input, train, dropout_rng);
  Var lg = matmul(hidden, transpose(tape.leaf(enc.token_embedding())));
  const int64_t b = lg.shape()[0], s = lg.shape()[1], n = lg.shape()[2];
  return masked_mean_ce(tape, reshape(lg, {b * s, n}), batch.targets,
                        batch.target_mask, batch.num_selected);
}

// ---------------------------------------------------------------------------
// Contrastive

Var cosine_matrix(Tape& tape, Var a, Var b) {
  SEMBED_CHECK(a.shape().size() == 2 && b.shape().size() == 2 &&
                   a.shape()[1] == b.shape()[1],
               ShapeError, "cosine_matrix expects [Ba, d] and [Bb, d]");
  return matmul(normalize_rows(tape, a), transpose(normalize_rows(tape, b)));
}

Var cosine_rows(Tape& tape, Var a, Var b) {
  SEMBED_CHECK(a.shape() == b.shape() && a.shape().size() == 2, ShapeError,
               "cosine_rows expects matching [B, d] inputs");
  const int64_t rows = a.shape()[0];
  Var dot = sum_last(mul(normalize_rows(tape, a), normalize_rows(tape, b)));
  return reshape(dot, {rows});
}

Var mnrl_loss(Tape& tape, const TransformerEncoder& enc, const PairBatch& batch,
              double scale_factor, bool train, Rng* dropout_rng) {
  check_pair_sides(batch.x.size(), batch.y.size());
  Var ex = embed_sentences(tape, enc, batch.x, train, dropout_rng);
  Var ey = embed_sentences(tape, enc, batch.y, train, dropout_rng);
  Var scores = scale(cosine_matrix(tape, ex, ey), scale_factor);

  std::vector<int64_t> diag(batch.x.size());
  for (size_t i = 0; i < diag.size(); ++i) diag[i] = static_cast<int64_t>(i);
  return mean_all(cross_entropy_with_logits(scores, diag));
}

Var simcse_loss(Tape& tape, const TransformerEncoder& enc,
                const std::vector<std::vector<int64_t>>& sentences,
                double scale_factor, bool train, Rng* dropout_rng) {
  PairBatch pairs{sentences, sentences};
  return mnrl_loss(tape, enc, pairs, scale_factor, train, dropout_rng);
}

// ---------------------------------------------------------------------------
// Contrastive tension

CtBatch make_ct_batch(const std::vector<std::vector<int64_t>>& corpus,
                      const std::vector<size_t>& anchor_indices,
                      int64_t num_negatives, Rng& rng) {
  SEMBED_CHECK(!anchor_indices.empty(), ContractError, "no anchors");
  SEMBED_CHECK(num_negatives >= 0, ContractError, "negative num_negatives");
  SEMBED_CHECK(num_negatives == 0 || corpus.size() >= 2, DataError,
               "negatives need at least two corpus sentences");

  CtBatch out;
  for (size_t i : anchor_indices) {
    SEMBED_CHECK(i < corpus.size(), ContractError, "anchor index out of range");
    out.a.push_back(corpus[i]);
    out.b.push_back(corpus[i]);
    out.labels.push_back(1);
    for (int64_t k = 0; k < num_negatives; ++k) {
      size_t j = i;
      while (j == i) j = static_cast<size_t>(rng.uniform_int(
          static_cast<int64_t>(corpus.size())));
      out.a.push_back(corpus[i]);
      out.b.push_back(corpus[j]);
      out.labels.push_back(0);
    }
  }
  return out;
}

Var ct_loss(Tape& tape, const TransformerEncoder& tower1,
            const TransformerEncoder& tower2, const CtBatch& batch,
            bool train, Rng* dropout_rng) {
  check_pair_sides(batch.a.size(), batch.b.size());
  SEMBED_CHECK(batch.labels.size() == batch.a.size(), ContractError,
               "labels/pairs mismatch");
  for (int64_t label : batch.labels) {
    SEMBED_CHECK(label == 0 || label == 1, ContractError,
                 "labels must be 0 or 1");
  }
  Var ea = embed_sentences(tape, tower1, batch.a, train, dropout_rng);
  Var eb = embed_sentences(tape, tower2, batch.b, train, dropout_rng);
  const int64_t m = ea.shape()[0];

  // Binary CE on the dot product z, phrased as 2-class CE over [0, z]:
  // softmax([0, z]) = [sigma(-z), sigma(z)], so class 1 reproduces
  // -log sigma(z) and class 0 reproduces -log(1 - sigma(z)).
  Var z = sum_last(mul(ea, eb));  // [M, 1]
  Var two_class = concat({tape.constant(Tensor::zeros({m, 1})), z}, 1);
  return mean_all(cross_entropy_with_logits(two_class, batch.labels));
}

// ---------------------------------------------------------------------------
// MSE regression

Var mse_loss(Tape& tape, const TransformerEncoder& enc,
             const ScoredPairBatch& batch, bool train, Rng* dropout_rng) {
  check_pair_sides(batch.x.size(), batch.y.size());
  SEMBED_CHECK(batch.scores.size() == batch.x.size(), ContractError,
               "scores/pairs mismatch");
  Var ex = embed_sentences(tape, enc, batch.x, train, dropout_rng);
  Var ey = embed_sentences(tape, enc, batch.y, train, dropout_rng);
  Var cos = cosine_rows(tape, ex, ey);  // [B]

  Tensor gold({static_cast<int64_t>(batch.scores.size())});
  for (size_t i = 0; i < batch.scores.size(); ++i) gold[static_cast<int64_t>(i)] = batch.scores[i];
  Var diff = sub(cos, tape.constant(std::move(gold)));
  return mean_all(mul(diff, diff));
}

}  // namespace sembed
