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

#ifndef SEMBED_MODEL_H_
#define SEMBED_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sembed/autograd.h"
#include "sembed/batch.h"
#include "sembed/rng.h"
#include "sembed/vocab.h"

namespace sembed {

enum class Pooling { kCls, kMean, kMax };

Pooling pooling_from_string(const std::string& s);
const char* to_string(Pooling p);

struct ModelConfig {
  int64_t layers = 2;
  int64_t hidden = 64;
  int64_t heads = 4;
  int64_t ffn = 256;
  int64_t vocab_size = 0;
  int64_t max_len = 64;
  double dropout = 0.1;
  Pooling pooling = Pooling::kCls;
  bool tie_weights = true;

  void validate() const;
};

// Attention weights captured during a forward pass, one [B, h, Tq, Tk]
// tensor per layer, in layer order.
struct AttnProbe {
  std::vector<Tensor> self_attn;
  std::vector<Tensor> cross_attn;
};

class TransformerDecoder;

// Pre-norm transformer encoder over padded token-id batches. PAD keys are
// masked out of every attention softmax; PAD query rows are computed but
// never reach a loss, so they stay gradient-free.
class TransformerEncoder {
 public:
  struct Block {
    ParamPtr att_ln_g, att_ln_b;
    ParamPtr wq, bq, wk, bk, wv, bv, wo, bo;
    ParamPtr ffn_ln_g, ffn_ln_b;
    ParamPtr w1, b1, w2, b2;
  };

  TransformerEncoder(const ModelConfig& cfg, uint64_t seed,
                     const std::string& prefix = "encoder");

  // Hidden states [B, S, d]. `probe`, when given, receives per-layer
  // attention weights.
  Var forward(Tape& tape, const PaddedBatch& batch, bool train,
              Rng* dropout_rng = nullptr, AttnProbe* probe = nullptr) const;

  std::vector<ParamPtr> parameters() const;
  const ModelConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }
  const ParamPtr& token_embedding() const { return tok_emb_; }
  const ParamPtr& position_embedding() const { return pos_emb_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  // Deep copy with every parameter renamed under `new_prefix`; values are
  // copied, not shared.
  TransformerEncoder clone(const std::string& new_prefix) const;

 private:
  TransformerEncoder() = default;
  friend class TransformerDecoder;
  friend void tie_parameters(const TransformerEncoder& enc, TransformerDecoder& dec);

  ModelConfig cfg_;
  std::string prefix_;
  ParamPtr tok_emb_, pos_emb_;
  std::vector<Block> blocks_;
  ParamPtr final_ln_g_, final_ln_b_;
};

// Causal decoder whose cross-attention sees exactly one key/value slot: the
// sentence embedding. Output logits are scored against its token embedding
// table, so the output projection is the embedding transpose.
class TransformerDecoder {
 public:
  struct Block {
    TransformerEncoder::Block base;
    ParamPtr cross_ln_g, cross_ln_b;
    ParamPtr cwq, cbq, cwk, cbk, cwv, cbv, cwo, cbo;
  };

  TransformerDecoder(const ModelConfig& cfg, uint64_t seed,
                     const std::string& prefix = "decoder");

  // `sent` is [B, d]; `prefix_ids` holds the already-shifted target prefix.
  // Returns hidden states [B, T, d].
  Var forward(Tape& tape, Var sent, const PaddedBatch& prefix_ids, bool train,
              Rng* dropout_rng = nullptr, AttnProbe* probe = nullptr) const;

  // [B, T, vocab] token scores for decoder hidden states.
  Var logits(Tape& tape, Var hidden) const;

  std::vector<ParamPtr> parameters() const;
  const ModelConfig& config() const { return cfg_; }
  const ParamPtr& token_embedding() const { return tok_emb_; }
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  friend void tie_parameters(const TransformerEncoder& enc, TransformerDecoder& dec);

  ModelConfig cfg_;
  std::string prefix_;
  ParamPtr tok_emb_, pos_emb_;
  std::vector<Block> blocks_;
  ParamPtr final_ln_g_, final_ln_b_;
};

// Shares the encoder's token embedding and per-layer self-attention/FFN
// parameters into the decoder (layer i to layer i). Cross-attention and
// position tables stay decoder-owned. Gradients accumulate through the
// shared storage automatically.
void tie_parameters(const TransformerEncoder& enc, TransformerDecoder& dec);

// Sentence representation [B, d] from hidden states [B, S, d]. `lengths`
// counts real (non-PAD) rows per item; PAD positions never contribute.
Var pool(Var hidden, const std::vector<int64_t>& lengths, Pooling method);

// Tokenized sentences -> pooled embeddings [B, d]. Prepends [CLS], truncates
// content to max_len - 1, pads, and runs the encoder.
Var embed_sentences(Tape& tape, const TransformerEncoder& enc,
                    const std::vector<std::vector<int64_t>>& sentences,
                    bool train = false, Rng* dropout_rng = nullptr);

// Deduplicates parameters by storage identity, preserving first-seen order.
std::vector<ParamPtr> unique_params(const std::vector<std::vector<ParamPtr>>& groups);

// Total trainable scalar count.
int64_t unique_param_count(const std::vector<ParamPtr>& params);

}  // namespace sembed

#endif  // SEMBED_MODEL_H_
