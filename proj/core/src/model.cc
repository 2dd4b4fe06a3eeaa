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

#include "sembed/model.h"

#include <cmath>

#include "sembed/error.h"

namespace sembed {

namespace {

constexpr double kMaskedScore = -1e30;
constexpr double kInitStddev = 0.02;

ParamPtr init_normal(const std::string& name, Shape shape, uint64_t seed) {
  Rng r(derive_seed(seed, name));
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = r.normal(0.0, kInitStddev);
  return make_param(name, std::move(t));
}

ParamPtr init_const(const std::string& name, Shape shape, double v) {
  return make_param(name, Tensor::full(std::move(shape), v));
}

Var leaf_linear(Tape& tape, Var x, const ParamPtr& w, const ParamPtr& b) {
  return add(matmul(x, tape.leaf(w)), tape.leaf(b));
}

Var ln_affine(Tape& tape, Var x, const ParamPtr& g, const ParamPtr& b) {
  return add(mul(layer_norm(x), tape.leaf(g)), tape.leaf(b));
}

Var split_heads(Var x, int64_t b, int64_t s, int64_t h, int64_t dk) {
  return transpose(reshape(x, {b, s, h, dk}), {0, 2, 1, 3});
}

Var merge_heads(Var x, int64_t b, int64_t s, int64_t d) {
  return reshape(transpose(x, {0, 2, 1, 3}), {b, s, d});
}

// Scaled dot-product attention over already-normed inputs. mask (optional)
// is an additive score tensor broadcastable to [B, h, Tq, Tk].
Var attention(Tape& tape, Var q_in, Var kv_in, const Var* mask,
              const TransformerEncoder::Block& p, const ParamPtr& wq,
              const ParamPtr& bq, const ParamPtr& wk, const ParamPtr& bk,
              const ParamPtr& wv, const ParamPtr& bv, const ParamPtr& wo,
              const ParamPtr& bo, int64_t heads,
              std::vector<Tensor>* probe_out) {
  (void)p;
  const int64_t b = q_in.shape()[0];
  const int64_t tq = q_in.shape()[1];
  const int64_t d = q_in.shape()[2];
  const int64_t tk = kv_in.shape()[1];
  const int64_t dk = d / heads;

  Var q = split_heads(leaf_linear(tape, q_in, wq, bq), b, tq, heads, dk);
  Var k = split_heads(leaf_linear(tape, kv_in, wk, bk), b, tk, heads, dk);
  Var v = split_heads(leaf_linear(tape, kv_in, wv, bv), b, tk, heads, dk);

  Var scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(dk)));
  if (mask != nullptr) scores = add(scores, *mask);
  Var probs = softmax(scores);
  if (probe_out != nullptr) probe_out->push_back(probs.value());
  Var ctx = merge_heads(matmul(probs, v), b, tq, d);
  return leaf_linear(tape, ctx, wo, bo);
}

Var maybe_dropout(Tape& tape, Var x, double p, bool train, Rng* rng) {
  (void)tape;
  if (!train || p == 0.0) return x;
  SEMBED_CHECK(rng != nullptr, ContractError,
               "training forward with dropout needs an RNG");
  return dropout(x, p, *rng, true);
}

// Token + position embedding for a padded id batch, with dropout.
Var embed_ids(Tape& tape, const PaddedBatch& batch, const ParamPtr& tok,
              const ParamPtr& pos, double p, bool train, Rng* rng) {
  const int64_t b = batch.rows, s = batch.cols;
  std::vector<int64_t> positions(static_cast<size_t>(b * s));
  for (int64_t r = 0; r < b; ++r) {
    for (int64_t c = 0; c < s; ++c) positions[static_cast<size_t>(r * s + c)] = c;
  }
  Var te = embedding_lookup(tape.leaf(tok), batch.ids, {b, s});
  Var pe = embedding_lookup(tape.leaf(pos), positions, {b, s});
  return maybe_dropout(tape, add(te, pe), p, train, rng);
}

void validate_batch(const PaddedBatch& batch, const ModelConfig& cfg) {
  SEMBED_CHECK(batch.rows >= 1 && batch.cols >= 1, ContractError, "empty batch");
  SEMBED_CHECK(batch.cols <= cfg.max_len, ShapeError, "sequence length ",
               batch.cols, " exceeds max_len ", cfg.max_len);
  SEMBED_CHECK(batch.lengths.size() == static_cast<size_t>(batch.rows),
               ShapeError, "lengths/rows mismatch");
  for (int64_t r = 0; r < batch.rows; ++r) {
    const int64_t len = batch.lengths[static_cast<size_t>(r)];
    SEMBED_CHECK(len >= 1 && len <= batch.cols, ShapeError,
                 "row length ", len, " outside [1, ", batch.cols, "]");
  }
}

}  // namespace

Pooling pooling_from_string(const std::string& s) {
  if (s == "cls") return Pooling::kCls;
  if (s == "mean") return Pooling::kMean;
  if (s == "max") return Pooling::kMax;
  throw DataError("unknown pooling: " + s);
}

const char* to_string(Pooling p) {
  switch (p) {
    case Pooling::kCls: return "cls";
    case Pooling::kMean: return "mean";
    case Pooling::kMax: return "max";
  }
  return "?";
}

void ModelConfig::validate() const {
  SEMBED_CHECK(layers >= 1, ContractError, "layers must be >= 1");
  SEMBED_CHECK(hidden >= 1 && heads >= 1 && ffn >= 1, ContractError,
               "model dims must be positive");
  SEMBED_CHECK(hidden % heads == 0, ContractError, "hidden ", hidden,
               " not divisible by heads ", heads);
  SEMBED_CHECK(vocab_size >= kNumSpecials, ContractError,
               "vocab_size must cover the special tokens");
  SEMBED_CHECK(max_len >= 2, ContractError, "max_len must be >= 2");
  SEMBED_CHECK(dropout >= 0.0 && dropout < 1.0, ContractError,
               "dropout must be in [0, 1)");
}

TransformerEncoder::TransformerEncoder(const ModelConfig& cfg, uint64_t seed,
                                       const std::string& prefix)
    : cfg_(cfg), prefix_(prefix) {
  cfg_.validate();
  const int64_t d = cfg_.hidden, f = cfg_.ffn;
  tok_emb_ = init_normal(prefix + ".embed.tok", {cfg_.vocab_size, d}, seed);
  pos_emb_ = init_normal(prefix + ".embed.pos", {cfg_.max_len, d}, seed);
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const std::string lp = prefix + ".l" + std::to_string(i);
    Block b;
    b.att_ln_g = init_const(lp + ".att.ln.g", {d}, 1.0);
    b.att_ln_b = init_const(lp + ".att.ln.b", {d}, 0.0);
    b.wq = init_normal(lp + ".att.wq", {d, d}, seed);
    b.bq = init_const(lp + ".att.bq", {d}, 0.0);
    b.wk = init_normal(lp + ".att.wk", {d, d}, seed);
    b.bk = init_const(lp + ".att.bk", {d}, 0.0);
    b.wv = init_normal(lp + ".att.wv", {d, d}, seed);
    b.bv = init_const(lp + ".att.bv", {d}, 0.0);
    b.wo = init_normal(lp + ".att.wo", {d, d}, seed);
    b.bo = init_const(lp + ".att.bo", {d}, 0.0);
    b.ffn_ln_g = init_const(lp + ".ffn.ln.g", {d}, 1.0);
    b.ffn_ln_b = init_const(lp + ".ffn.ln.b", {d}, 0.0);
    b.w1 = init_normal(lp + ".ffn.w1", {d, f}, seed);
    b.b1 = init_const(lp + ".ffn.b1", {f}, 0.0);
    b.w2 = init_normal(lp + ".ffn.w2", {f, d}, seed);
    b.b2 = init_const(lp + ".ffn.b2", {d}, 0.0);
    blocks_.push_back(std::move(b));
  }
  final_ln_g_ = init_const(prefix + ".final.g", {d}, 1.0);
  final_ln_b_ = init_const(prefix + ".final.b", {d}, 0.0);
}

Var TransformerEncoder::forward(Tape& tape, const PaddedBatch& batch, bool train,
                                Rng* dropout_rng, AttnProbe* probe) const {
  validate_batch(batch, cfg_);
  const int64_t b = batch.rows, s = batch.cols;

  // Additive key-validity mask [B, 1, 1, S]: PAD keys score kMaskedScore,
  // which underflows to exactly zero weight after softmax.
  Tensor mask_t({b, 1, 1, s});
  for (int64_t r = 0; r < b; ++r) {
    for (int64_t c = 0; c < s; ++c) {
      mask_t[r * s + c] = c < batch.lengths[static_cast<size_t>(r)] ? 0.0 : kMaskedScore;
    }
  }
  Var mask = tape.constant(std::move(mask_t));

  Var x = embed_ids(tape, batch, tok_emb_, pos_emb_, cfg_.dropout, train, dropout_rng);
  for (const Block& blk : blocks_) {
    Var normed = ln_affine(tape, x, blk.att_ln_g, blk.att_ln_b);
    Var att = attention(tape, normed, normed, &mask, blk, blk.wq, blk.bq,
                        blk.wk, blk.bk, blk.wv, blk.bv, blk.wo, blk.bo,
                        cfg_.heads, probe ? &probe->self_attn : nullptr);
    x = add(x, maybe_dropout(tape, att, cfg_.dropout, train, dropout_rng));
    Var normed2 = ln_affine(tape, x, blk.ffn_ln_g, blk.ffn_ln_b);
    Var ff = leaf_linear(tape, gelu(leaf_linear(tape, normed2, blk.w1, blk.b1)),
                         blk.w2, blk.b2);
    x = add(x, maybe_dropout(tape, ff, cfg_.dropout, train, dropout_rng));
  }
  return ln_affine(tape, x, final_ln_g_, final_ln_b_);
}

std::vector<ParamPtr> TransformerEncoder::parameters() const {
  std::vector<ParamPtr> out{tok_emb_, pos_emb_};
  for (const Block& b : blocks_) {
    out.insert(out.end(), {b.att_ln_g, b.att_ln_b, b.wq, b.bq, b.wk, b.bk,
                           b.wv, b.bv, b.wo, b.bo, b.ffn_ln_g, b.ffn_ln_b,
                           b.w1, b.b1, b.w2, b.b2});
  }
  out.push_back(final_ln_g_);
  out.push_back(final_ln_b_);
  return out;
}

namespace {

ParamPtr clone_param(const ParamPtr& p, const std::string& old_prefix,
                     const std::string& new_prefix) {
  std::string name = p->name;
  SEMBED_CHECK(name.rfind(old_prefix, 0) == 0, ContractError,
               "parameter ", name, " does not start with ", old_prefix);
  name = new_prefix + name.substr(old_prefix.size());
  auto q = make_param(std::move(name), p->value, p->trainable);
  return q;
}

}  // namespace

TransformerEncoder TransformerEncoder::clone(const std::string& new_prefix) const {
  TransformerEncoder out;
  out.cfg_ = cfg_;
  out.prefix_ = new_prefix;
  auto cp = [&](const ParamPtr& p) { return clone_param(p, prefix_, new_prefix); };
  out.tok_emb_ = cp(tok_emb_);
  out.pos_emb_ = cp(pos_emb_);
  for (const Block& b : blocks_) {
    Block nb;
    nb.att_ln_g = cp(b.att_ln_g);
    nb.att_ln_b = cp(b.att_ln_b);
    nb.wq = cp(b.wq);
    nb.bq = cp(b.bq);
    nb.wk = cp(b.wk);
    nb.bk = cp(b.bk);
    nb.wv = cp(b.wv);
    nb.bv = cp(b.bv);
    nb.wo = cp(b.wo);
    nb.bo = cp(b.bo);
    nb.ffn_ln_g = cp(b.ffn_ln_g);
    nb.ffn_ln_b = cp(b.ffn_ln_b);
    nb.w1 = cp(b.w1);
    nb.b1 = cp(b.b1);
    nb.w2 = cp(b.w2);
    nb.b2 = cp(b.b2);
    out.blocks_.push_back(std::move(nb));
  }
  out.final_ln_g_ = cp(final_ln_g_);
  out.final_ln_b_ = cp(final_ln_b_);
  return out;
}

TransformerDecoder::TransformerDecoder(const ModelConfig& cfg, uint64_t seed,
                                       const std::string& prefix)
    : cfg_(cfg), prefix_(prefix) {
  cfg_.validate();
  const int64_t d = cfg_.hidden;
  // Reuse the encoder layout for the shared part so tensor names line up
  // layer by layer.
  TransformerEncoder base(cfg, seed, prefix);
  tok_emb_ = base.tok_emb_;
  pos_emb_ = base.pos_emb_;
  final_ln_g_ = base.final_ln_g_;
  final_ln_b_ = base.final_ln_b_;
  for (int64_t i = 0; i < cfg_.layers; ++i) {
    const std::string lp = prefix + ".l" + std::to_string(i);
    Block b;
    b.base = base.blocks_[static_cast<size_t>(i)];
    b.cross_ln_g = init_const(lp + ".cross.ln.g", {d}, 1.0);
    b.cross_ln_b = init_const(lp + ".cross.ln.b", {d}, 0.0);
    b.cwq = init_normal(lp + ".cross.wq", {d, d}, seed);
    b.cbq = init_const(lp + ".cross.bq", {d}, 0.0);
    b.cwk = init_normal(lp + ".cross.wk", {d, d}, seed);
    b.cbk = init_const(lp + ".cross.bk", {d}, 0.0);
    b.cwv = init_normal(lp + ".cross.wv", {d, d}, seed);
    b.cbv = init_const(lp + ".cross.bv", {d}, 0.0);
    b.cwo = init_normal(lp + ".cross.wo", {d, d}, seed);
    b.cbo = init_const(lp + ".cross.bo", {d}, 0.0);
    blocks_.push_back(std::move(b));
  }
}

Var TransformerDecoder::forward(Tape& tape, Var sent, const PaddedBatch& prefix_ids,
                                bool train, Rng* dropout_rng, AttnProbe* probe) const {
  validate_batch(prefix_ids, cfg_);
  const int64_t b = prefix_ids.rows, t = prefix_ids.cols;
  SEMBED_CHECK(sent.shape() == Shape({b, cfg_.hidden}), ShapeError,
               "sentence embedding shape ", shape_to_string(sent.shape()),
               " does not match batch");

  // Causal plus key-validity mask [B, 1, T, T].
  Tensor mask_t({b, 1, t, t});
  for (int64_t r = 0; r < b; ++r) {
    const int64_t len = prefix_ids.lengths[static_cast<size_t>(r)];
    for (int64_t i = 0; i < t; ++i) {
      for (int64_t j = 0; j < t; ++j) {
        const bool ok = j <= i && j < len;
        mask_t[(r * t + i) * t + j] = ok ? 0.0 : kMaskedScore;
      }
    }
  }
  Var mask = tape.constant(std::move(mask_t));

  Var kv = reshape(sent, {b, 1, cfg_.hidden});
  Var x = embed_ids(tape, prefix_ids, tok_emb_, pos_emb_, cfg_.dropout, train, dropout_rng);
  for (const Block& blk : blocks_) {
    Var normed = ln_affine(tape, x, blk.base.att_ln_g, blk.base.att_ln_b);
    Var att = attention(tape, normed, normed, &mask, blk.base, blk.base.wq,
                        blk.base.bq, blk.base.wk, blk.base.bk, blk.base.wv,
                        blk.base.bv, blk.base.wo, blk.base.bo, cfg_.heads,
                        probe ? &probe->self_attn : nullptr);
    x = add(x, maybe_dropout(tape, att, cfg_.dropout, train, dropout_rng));

    // Bottleneck: the only key/value is the sentence embedding.
    Var cn = ln_affine(tape, x, blk.cross_ln_g, blk.cross_ln_b);
    Var catt = attention(tape, cn, kv, nullptr, blk.base, blk.cwq, blk.cbq,
                         blk.cwk, blk.cbk, blk.cwv, blk.cbv, blk.cwo, blk.cbo,
                         cfg_.heads, probe ? &probe->cross_attn : nullptr);
    x = add(x, maybe_dropout(tape, catt, cfg_.dropout, train, dropout_rng));

    Var normed2 = ln_affine(tape, x, blk.base.ffn_ln_g, blk.base.ffn_ln_b);
    Var ff = leaf_linear(tape, gelu(leaf_linear(tape, normed2, blk.base.w1, blk.base.b1)),
                         blk.base.w2, blk.base.b2);
    x = add(x, maybe_dropout(tape, ff, cfg_.dropout, train, dropout_rng));
  }
  return ln_affine(tape, x, final_ln_g_, final_ln_b_);
}

Var TransformerDecoder::logits(Tape& tape, Var hidden) const {
  return matmul(hidden, transpose(tape.leaf(tok_emb_)));
}

std::vector<ParamPtr> TransformerDecoder::parameters() const {
  std::vector<ParamPtr> out{tok_emb_, pos_emb_};
  for (const Block& b : blocks_) {
    out.insert(out.end(),
               {b.base.att_ln_g, b.base.att_ln_b, b.base.wq, b.base.bq,
                b.base.wk, b.base.bk, b.base.wv, b.base.bv, b.base.wo,
                b.base.bo, b.cross_ln_g, b.cross_ln_b, b.cwq, b.cbq, b.cwk,
                b.cbk, b.cwv, b.cbv, b.cwo, b.cbo, b.base.ffn_ln_g,
                b.base.ffn_ln_b, b.base.w1, b.base.b1, b.base.w2, b.base.b2});
  }
  out.push_back(final_ln_g_);
  out.push_back(final_ln_b_);
  return out;
}

void tie_parameters(const TransformerEncoder& enc, TransformerDecoder& dec) {
  SEMBED_CHECK(enc.cfg_.layers == dec.cfg_.layers &&
                   enc.cfg_.hidden == dec.cfg_.hidden &&
                   enc.cfg_.heads == dec.cfg_.heads &&
                   enc.cfg_.ffn == dec.cfg_.ffn &&
                   enc.cfg_.vocab_size == dec.cfg_.vocab_size,
               ContractError, "tie_parameters: incompatible configurations");
  dec.tok_emb_ = enc.tok_emb_;
  for (int64_t i = 0; i < enc.cfg_.layers; ++i) {
    dec.blocks_[static_cast<size_t>(i)].base = enc.blocks_[static_cast<size_t>(i)];
  }
}

Var pool(Var hidden, const std::vector<int64_t>& lengths, Pooling method) {
  Tape& tape = *hidden.tape;
  SEMBED_CHECK(hidden.shape().size() == 3, ShapeError,
               "pool expects [B, S, d] hidden states");
  const int64_t b = hidden.shape()[0], s = hidden.shape()[1], d = hidden.shape()[2];
  SEMBED_CHECK(lengths.size() == static_cast<size_t>(b), ShapeError,
               "lengths/batch mismatch");
  for (int64_t len : lengths) {
    SEMBED_CHECK(len >= 1 && len <= s, ContractError,
                 "pool length ", len, " outside [1, ", s, "]");
  }

  switch (method) {
    case Pooling::kCls:
      return reshape(slice(hidden, 1, 0, 1), {b, d});
    case Pooling::kMean: {
      Tensor mask_t({b, s, 1});
      Tensor recip_t({b, 1});
      for (int64_t r = 0; r < b; ++r) {
        const int64_t len = lengths[static_cast<size_t>(r)];
        for (int64_t c = 0; c < len; ++c) mask_t[r * s + c] = 1.0;
        recip_t[r] = 1.0 / static_cast<double>(len);
      }
      Var masked = mul(hidden, tape.constant(std::move(mask_t)));
      Var summed = reshape(sum_last(transpose(masked, {0, 2, 1})), {b, d});
      return mul(summed, tape.constant(std::move(recip_t)));
    }
    case Pooling::kMax: {
      // Running elementwise max as a 0/1 select between the running value and
      // the next row. The select mask is a constant built from current values,
      // so the result is the exact max (no a + (b - a) rounding) and the
      // gradient routes to the selected entries only. Rows past an item's
      // length never win the select, so PAD cannot contribute.
      Var m = slice(hidden, 1, 0, 1);  // [B, 1, d]; row 0 is always content
      for (int64_t c = 1; c < s; ++c) {
        bool any = false;
        Tensor take({b, 1, d});
        Tensor keep({b, 1, d});
        const Tensor& cur = m.value();
        for (int64_t r = 0; r < b; ++r) {
          bool real = c < lengths[static_cast<size_t>(r)];
          any |= real;
          for (int64_t k = 0; k < d; ++k) {
            bool wins = real && hidden.value().at({r, c, k}) > cur.at({r, 0, k});
            take.at({r, 0, k}) = wins ? 1.0 : 0.0;
            keep.at({r, 0, k}) = wins ? 0.0 : 1.0;
          }
        }
        if (!any) break;
        Var row = slice(hidden, 1, c, 1);
        m = add(mul(m, tape.constant(std::move(keep))),
                mul(row, tape.constant(std::move(take))));
      }
      return reshape(m, {b, d});
    }
  }
  throw ContractError("pool: unknown method");
}

Var embed_sentences(Tape& tape, const TransformerEncoder& enc,
                    const std::vector<std::vector<int64_t>>& sentences,
                    bool train, Rng* dropout_rng) {
  SEMBED_CHECK(!sentences.empty(), ContractError, "embed_sentences: empty batch");
  const int64_t max_content = enc.config().max_len - 1;
  std::vector<std::vector<int64_t>> rows;
  rows.reserve(sentences.size());
  for (const auto& sent : sentences) {
    std::vector<int64_t> row{kClsId};
    for (size_t i = 0; i < sent.size() && static_cast<int64_t>(i) < max_content; ++i) {
      row.push_back(sent[i]);
    }
    rows.push_back(std::move(row));
  }
  PaddedBatch batch = pad_sequences(rows);
  Var hidden = enc.forward(tape, batch, train, dropout_rng);
  return pool(hidden, batch.lengths, enc.config().pooling);
}

std::vector<ParamPtr> unique_params(const std::vector<std::vector<ParamPtr>>& groups) {
  std::vector<ParamPtr> out;
  for (const auto& g : groups) {
    for (const auto& p : g) {
      bool seen = false;
      for (const auto& q : out) {
        if (q.get() == p.get()) {
          seen = true;
          break;
        }
      }
      if (!seen) out.push_back(p);
    }
  }
  return out;
}

int64_t unique_param_count(const std::vector<ParamPtr>& params) {
  int64_t n = 0;
  for (const auto& p : params) {
    if (p->trainable) n += p->value.numel();
  }
  return n;
}

}  // namespace sembed
