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

#include "sembed/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sembed/autograd.h"
#include "sembed/error.h"
#include "sembed/io.h"
#include "sembed/tasks.h"

namespace sembed {
namespace {

std::vector<std::string> load_sentences(const std::string& path) {
  std::vector<std::string> lines = read_lines(path);
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const std::string& line : lines) {
    if (!split_words(line).empty()) out.push_back(line);
  }
  if (out.empty()) throw DataError("no usable sentences in " + path);
  return out;
}

struct LoadedPairs {
  std::vector<std::string> s1;
  std::vector<std::string> s2;
  std::vector<double> scores;  // empty unless want_scores
};

LoadedPairs load_pair_file(const std::string& path, bool want_scores) {
  std::vector<std::string> lines = read_lines(path);
  LoadedPairs out;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("s1") || !j.contains("s2") ||
        !j["s1"].is_string() || !j["s2"].is_string()) {
      throw DataError(path + ":" + std::to_string(i + 1) +
                      ": expected {\"s1\": str, \"s2\": str, ...}");
    }
    out.s1.push_back(j["s1"].get<std::string>());
    out.s2.push_back(j["s2"].get<std::string>());
    if (want_scores) {
      if (!j.contains("score") || !j["score"].is_number()) {
        throw DataError(path + ":" + std::to_string(i + 1) +
                        ": missing numeric \"score\"");
      }
      out.scores.push_back(j["score"].get<double>());
    }
  }
  if (out.s1.empty()) throw DataError("no usable pairs in " + path);
  return out;
}

std::vector<std::vector<int64_t>> tokenize_all(
    const std::vector<std::string>& texts, const Vocabulary& vocab) {
  std::vector<std::vector<int64_t>> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(tokenize(t, vocab));
  return out;
}

// Random subsample without replacement, order-preserving. Used by the
// corpus-size sweep axis.
template <typename T>
std::vector<T> subsample(std::vector<T> items, int64_t limit, uint64_t seed) {
  if (limit <= 0 || static_cast<size_t>(limit) >= items.size()) return items;
  Rng rng(derive_seed(seed, "corpus.subsample"));
  std::vector<size_t> idx(items.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(limit));
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(std::move(items[i]));
  return out;
}

std::vector<ParamPtr> collect_params(const ModelBundle& b) {
  std::vector<std::vector<ParamPtr>> groups;
  if (b.cfg.objective == Objective::kFlow) {
    groups.push_back(b.flow->parameters());
  } else {
    groups.push_back(b.encoder->parameters());
    if (b.decoder) groups.push_back(b.decoder->parameters());
    if (b.partner) groups.push_back(b.partner->parameters());
  }
  return unique_params(groups);
}

void copy_tensor_values(Tensor& dst, const Tensor& src,
                        const std::string& name) {
  if (dst.shape() != src.shape()) {
    throw ShapeError("checkpoint tensor " + name + " has shape " +
                     shape_to_string(src.shape()) + ", model expects " +
                     shape_to_string(dst.shape()));
  }
  dst = src;
}

}  // namespace

ModelBundle build_models(const RunConfig& cfg, Vocabulary vocab) {
  SEMBED_CHECK(vocab.size() > kNumSpecials, DataError,
               "vocabulary has no content tokens");
  ModelBundle b;
  b.cfg = cfg;
  b.cfg.model.vocab_size = vocab.size();
  b.vocab = std::move(vocab);
  b.cfg.model.validate();
  b.encoder = std::make_unique<TransformerEncoder>(b.cfg.model, b.cfg.seed,
                                                   "encoder");
  if (cfg.objective == Objective::kTsdae) {
    b.decoder = std::make_unique<TransformerDecoder>(b.cfg.model, b.cfg.seed,
                                                     "decoder");
    if (b.cfg.model.tie_weights) tie_parameters(*b.encoder, *b.decoder);
  }
  if (cfg.objective == Objective::kCt) {
    // Both towers start from identical weights; only tower one is kept.
    b.partner = std::make_unique<TransformerEncoder>(
        b.encoder->clone("partner"));
  }
  if (cfg.objective == Objective::kFlow) {
    FlowConfig fc;
    fc.dim = b.cfg.model.hidden;
    fc.layers = cfg.flow_layers;
    fc.hidden = cfg.flow_hidden;
    b.flow = std::make_unique<CouplingFlow>(fc, b.cfg.seed, "flow");
  }
  return b;
}

ModelBundle load_model_bundle(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  RunConfig cfg = parse_run_config_json(ckpt.config_json, path + ":config");
  Vocabulary vocab = Vocabulary::from_tokens(ckpt.vocab_tokens);
  cfg.model.vocab_size = vocab.size();
  cfg.model.validate();

  bool has_decoder = false;
  bool has_partner = false;
  bool has_flow = false;
  for (const ParamPtr& p : ckpt.params) {
    if (p->name.rfind("decoder.", 0) == 0) has_decoder = true;
    if (p->name.rfind("partner.", 0) == 0) has_partner = true;
    if (p->name.rfind("flow.", 0) == 0) has_flow = true;
  }
  for (const auto& [alias, stored] : ckpt.aliases) {
    if (alias.rfind("decoder.", 0) == 0) has_decoder = true;
    (void)stored;
  }

  ModelBundle b;
  b.cfg = cfg;
  b.vocab = std::move(vocab);
  b.encoder =
      std::make_unique<TransformerEncoder>(cfg.model, cfg.seed, "encoder");
  if (has_decoder) {
    b.decoder =
        std::make_unique<TransformerDecoder>(cfg.model, cfg.seed, "decoder");
    if (cfg.model.tie_weights) tie_parameters(*b.encoder, *b.decoder);
  }
  if (has_partner) {
    b.partner =
        std::make_unique<TransformerEncoder>(b.encoder->clone("partner"));
  }
  if (has_flow) {
    FlowConfig fc;
    fc.dim = cfg.model.hidden;
    fc.layers = cfg.flow_layers;
    fc.hidden = cfg.flow_hidden;
    b.flow = std::make_unique<CouplingFlow>(fc, cfg.seed, "flow");
  }

  std::unordered_map<std::string, ParamPtr> stored;
  for (const ParamPtr& p : ckpt.params) stored.emplace(p->name, p);

  std::vector<ParamPtr> model_params = collect_params(b);
  if (b.cfg.objective == Objective::kFlow && b.flow) {
    // A flow checkpoint also carries its frozen encoder.
    model_params = unique_params({model_params, b.encoder->parameters()});
  }

  std::set<std::string> expected;
  for (const ParamPtr& p : model_params) expected.insert(p->name);
  std::set<std::string> present;
  for (const ParamPtr& p : ckpt.params) present.insert(p->name);
  if (expected != present) {
    std::ostringstream msg;
    msg << "checkpoint " << path << " does not match its config:";
    for (const std::string& n : expected) {
      if (!present.count(n)) msg << " missing " << n;
    }
    for (const std::string& n : present) {
      if (!expected.count(n)) msg << " unexpected " << n;
    }
    throw DataError(msg.str());
  }

  for (const ParamPtr& p : model_params) {
    copy_tensor_values(p->value, stored.at(p->name)->value, p->name);
  }
  return b;
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream out;
  out << "step,loss,lr\n";
  for (const TrainLogRow& r : rows) {
    out << r.step << "," << format_g9(r.loss) << "," << format_g9(r.lr)
        << "\n";
  }
  return out.str();
}

Trainer::Trainer(RunConfig cfg)
    : order_rng_(derive_seed(cfg.seed, "data.order")),
      noise_rng_(derive_seed(cfg.seed, "noise")),
      dropout_rng_(derive_seed(cfg.seed, "dropout")),
      adam_(AdamConfig{}) {
  cfg.validate();
  SEMBED_CHECK(!cfg.data.empty(), DataError, "training requires --data");
  if (!cfg.checkpoint.empty() && cfg.objective != Objective::kFlow) {
    throw DataError(
        "a starting checkpoint is only used by the flow objective");
  }

  const bool pair_data =
      cfg.objective == Objective::kMnrl || cfg.objective == Objective::kMse;

  if (cfg.objective == Objective::kFlow) {
    SEMBED_CHECK(!cfg.checkpoint.empty(), DataError,
                 "the flow objective requires --checkpoint with the trained "
                 "encoder to debias");
    ModelBundle base = load_model_bundle(cfg.checkpoint);
    std::vector<std::string> texts = load_sentences(cfg.data);
    texts = subsample(std::move(texts), cfg.corpus_limit, cfg.seed);
    // The encoder stays frozen: sentences are embedded once up front and the
    // flow trains on those fixed vectors.
    EmbeddingScorer scorer(*base.encoder, base.vocab);
    flow_inputs_ = scorer.embed(texts);
    dataset_size_ = flow_inputs_.size();

    ModelConfig model_cfg = base.cfg.model;
    cfg.model = model_cfg;
    bundle_ = build_models(cfg, std::move(base.vocab));
    bundle_.encoder = std::move(base.encoder);
    cfg_ = bundle_.cfg;
  } else if (pair_data) {
    LoadedPairs loaded =
        load_pair_file(cfg.data, cfg.objective == Objective::kMse);
    std::vector<std::string> all;
    all.reserve(loaded.s1.size() + loaded.s2.size());
    all.insert(all.end(), loaded.s1.begin(), loaded.s1.end());
    all.insert(all.end(), loaded.s2.begin(), loaded.s2.end());
    Vocabulary vocab = cfg.vocab_path.empty()
                           ? Vocabulary::build(all, cfg.vocab_min_freq)
                           : Vocabulary::load(cfg.vocab_path);
    bundle_ = build_models(cfg, std::move(vocab));
    cfg_ = bundle_.cfg;

    std::vector<size_t> keep(loaded.s1.size());
    for (size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    if (cfg.corpus_limit > 0) {
      keep = subsample(std::move(keep), cfg.corpus_limit, cfg.seed);
    }
    for (size_t i : keep) {
      pairs_.x.push_back(tokenize(loaded.s1[i], bundle_.vocab));
      pairs_.y.push_back(tokenize(loaded.s2[i], bundle_.vocab));
      if (cfg.objective == Objective::kMse) {
        scored_pairs_.scores.push_back(loaded.scores[i]);
      }
    }
    if (cfg.objective == Objective::kMse) {
      scored_pairs_.x = pairs_.x;
      scored_pairs_.y = pairs_.y;
    }
    dataset_size_ = pairs_.x.size();
  } else {
    std::vector<std::string> texts = load_sentences(cfg.data);
    texts = subsample(std::move(texts), cfg.corpus_limit, cfg.seed);
    Vocabulary vocab = cfg.vocab_path.empty()
                           ? Vocabulary::build(texts, cfg.vocab_min_freq)
                           : Vocabulary::load(cfg.vocab_path);
    bundle_ = build_models(cfg, std::move(vocab));
    cfg_ = bundle_.cfg;
    corpus_ = tokenize_all(texts, bundle_.vocab);
    dataset_size_ = corpus_.size();
  }

  SEMBED_CHECK(dataset_size_ > 0, DataError, "empty training set");
  if (cfg_.objective == Objective::kCt && cfg_.ct_negatives > 0) {
    SEMBED_CHECK(dataset_size_ >= 2, DataError,
                 "contrastive tension needs at least two sentences to draw "
                 "negatives");
  }

  AdamConfig acfg;
  acfg.lr = cfg_.lr;
  acfg.weight_decay = cfg_.weight_decay;
  adam_ = AdamState(acfg);
  train_params_ = collect_params(bundle_);
}

double Trainer::step_lr(int64_t step) const {
  if (cfg_.objective != Objective::kCt || cfg_.ct_lr_steps.empty()) {
    return cfg_.lr;
  }
  // Piecewise-constant decay: factor[i] applies up to and including boundary
  // step i, factor[i+1] afterwards.
  size_t seg = 0;
  while (seg < cfg_.ct_lr_steps.size() &&
         step > cfg_.ct_lr_steps[seg]) {
    ++seg;
  }
  return cfg_.lr * cfg_.ct_lr_factors[seg];
}

std::vector<size_t> Trainer::next_batch() {
  if (perm_pos_ >= perm_.size()) {
    perm_.resize(dataset_size_);
    for (size_t i = 0; i < dataset_size_; ++i) perm_[i] = i;
    order_rng_.shuffle(perm_);
    perm_pos_ = 0;
  }
  size_t take = std::min(static_cast<size_t>(cfg_.batch_size),
                         perm_.size() - perm_pos_);
  std::vector<size_t> batch(perm_.begin() + perm_pos_,
                            perm_.begin() + perm_pos_ + take);
  perm_pos_ += take;
  return batch;
}

double Trainer::train_step(int64_t step) {
  std::vector<size_t> idx = next_batch();
  Tape tape;
  Var loss;

  switch (cfg_.objective) {
    case Objective::kTsdae: {
      std::vector<std::vector<int64_t>> sents;
      for (size_t i : idx) sents.push_back(corpus_[i]);
      TsdaeBatch batch = make_tsdae_batch(sents, cfg_.noise, bundle_.vocab,
                                          noise_rng_, cfg_.model.max_len);
      loss = tsdae_loss(tape, *bundle_.encoder, *bundle_.decoder, batch,
                        /*train=*/true, &dropout_rng_);
      break;
    }
    case Objective::kMlm: {
      std::vector<std::vector<int64_t>> sents;
      for (size_t i : idx) sents.push_back(corpus_[i]);
      MlmBatch batch = make_mlm_batch(sents, bundle_.vocab, cfg_.mlm_prob,
                                      noise_rng_, cfg_.model.max_len);
      loss = mlm_loss(tape, *bundle_.encoder, batch, /*train=*/true,
                      &dropout_rng_);
      break;
    }
    case Objective::kCt: {
      CtBatch batch = make_ct_batch(corpus_, idx, cfg_.ct_negatives,
                                    noise_rng_);
      loss = ct_loss(tape, *bundle_.encoder, *bundle_.partner, batch,
                     /*train=*/true, &dropout_rng_);
      break;
    }
    case Objective::kSimcse: {
      std::vector<std::vector<int64_t>> sents;
      for (size_t i : idx) sents.push_back(corpus_[i]);
      loss = simcse_loss(tape, *bundle_.encoder, sents, cfg_.mnrl_scale,
                         /*train=*/true, &dropout_rng_);
      break;
    }
    case Objective::kMnrl: {
      PairBatch batch;
      for (size_t i : idx) {
        batch.x.push_back(pairs_.x[i]);
        batch.y.push_back(pairs_.y[i]);
      }
      loss = mnrl_loss(tape, *bundle_.encoder, batch, cfg_.mnrl_scale,
                       /*train=*/true, &dropout_rng_);
      break;
    }
    case Objective::kMse: {
      ScoredPairBatch batch;
      for (size_t i : idx) {
        batch.x.push_back(scored_pairs_.x[i]);
        batch.y.push_back(scored_pairs_.y[i]);
        batch.scores.push_back(scored_pairs_.scores[i]);
      }
      loss = mse_loss(tape, *bundle_.encoder, batch, /*train=*/true,
                      &dropout_rng_);
      break;
    }
    case Objective::kFlow: {
      int64_t b = static_cast<int64_t>(idx.size());
      int64_t d = cfg_.model.hidden;
      Tensor x({b, d});
      for (int64_t r = 0; r < b; ++r) {
        for (int64_t c = 0; c < d; ++c) {
          x.at({r, c}) = flow_inputs_[idx[static_cast<size_t>(r)]]
                                     [static_cast<size_t>(c)];
        }
      }
      loss = bundle_.flow->nll(tape, tape.constant(std::move(x)));
      break;
    }
  }

  GradientMap grads = tape.backward(loss);
  adam_.config().lr = step_lr(step);
  adam_.update(train_params_, grads);
  return loss.value().at({0});
}

double Trainer::eval_aggregate() const {
  TaskDataset ds = load_task_dataset(cfg_.eval_data);
  EmbeddingScorer scorer(*bundle_.encoder, bundle_.vocab);
  MetricReport report =
      run_task(ds, scorer, to_string(cfg_.objective), cfg_.seed, cfg_.ir_k);
  return report.aggregate;
}

std::vector<TrainLogRow> Trainer::run() {
  int64_t steps_per_epoch = static_cast<int64_t>(
      (dataset_size_ + static_cast<size_t>(cfg_.batch_size) - 1) /
      static_cast<size_t>(cfg_.batch_size));
  int64_t total = cfg_.max_steps;
  if (cfg_.epochs > 0) {
    int64_t planned = cfg_.epochs * steps_per_epoch;
    total = (cfg_.max_steps > 0) ? std::min(cfg_.max_steps, planned) : planned;
  }
  SEMBED_CHECK(total > 0, DataError,
               "step budget is zero; set max_steps or epochs");

  const bool early_stop = cfg_.early_stop_patience > 0 &&
                          !cfg_.eval_data.empty() &&
                          cfg_.objective != Objective::kFlow;
  double best = -std::numeric_limits<double>::infinity();
  int64_t misses = 0;

  log_.clear();
  log_.reserve(static_cast<size_t>(total));
  for (int64_t step = 1; step <= total; ++step) {
    double loss = train_step(step);
    log_.push_back({step, loss, adam_.config().lr});
    if (early_stop && step % cfg_.early_stop_every == 0) {
      double score = eval_aggregate();
      if (score > best + 1e-12) {
        best = score;
        misses = 0;
      } else if (++misses >= cfg_.early_stop_patience) {
        break;
      }
    }
  }
  return log_;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ckpt;
  ckpt.config_json = run_config_to_json(cfg_);
  int64_t content = bundle_.vocab.content_size();
  ckpt.vocab_tokens.reserve(static_cast<size_t>(content));
  for (int64_t i = 0; i < content; ++i) {
    ckpt.vocab_tokens.push_back(bundle_.vocab.token(kNumSpecials + i));
  }

  std::vector<ParamPtr> params = collect_params(bundle_);
  if (cfg_.objective == Objective::kFlow) {
    // Keep the frozen encoder alongside the flow so the checkpoint embeds
    // and debiases on its own.
    params = unique_params({params, bundle_.encoder->parameters()});
  }
  ckpt.params = params;

  if (bundle_.decoder && cfg_.model.tie_weights) {
    // Tied decoder slots are stored once under their encoder name; record
    // the decoder-side view as aliases.
    std::unordered_set<const Tensor*> enc_set;
    for (const ParamPtr& p : bundle_.encoder->parameters()) {
      enc_set.insert(&p->value);
    }
    for (const ParamPtr& p : bundle_.decoder->parameters()) {
      if (!enc_set.count(&p->value)) continue;
      std::string suffix = p->name.substr(std::string("encoder.").size());
      ckpt.aliases.emplace_back("decoder." + suffix, p->name);
    }
  }

  if (adam_.step_count() > 0) {
    ckpt.has_adam = true;
    ckpt.adam_step = adam_.step_count();
    for (const ParamPtr& p : params) {
      auto it = adam_.first_moments().find(p->name);
      if (it == adam_.first_moments().end()) continue;
      ckpt.adam_m.emplace(p->name, it->second);
      ckpt.adam_v.emplace(p->name, adam_.second_moments().at(p->name));
    }
  }
  return ckpt;
}

void Trainer::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  save_checkpoint(snapshot(), path_join(dir, "checkpoint.bin"));
  write_text_atomic(path_join(dir, "loss_log.csv"), train_log_to_csv(log_));
  write_text_atomic(path_join(dir, "config.json"),
                    run_config_to_json(cfg_) + "\n");
}

}  // namespace sembed
