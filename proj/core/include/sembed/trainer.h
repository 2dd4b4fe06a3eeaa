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

#ifndef SEMBED_TRAINER_H_
#define SEMBED_TRAINER_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sembed/checkpoint.h"
#include "sembed/config.h"
#include "sembed/flow.h"
#include "sembed/model.h"
#include "sembed/objectives.h"
#include "sembed/optim.h"
#include "sembed/vocab.h"

namespace sembed {

// A runnable model set: the encoder always, plus whichever companions the
// objective uses. The decoder shares tensors with the encoder when tying is
// on; the CT partner never shares.
struct ModelBundle {
  RunConfig cfg;
  Vocabulary vocab;
  std::unique_ptr<TransformerEncoder> encoder;
  std::unique_ptr<TransformerDecoder> decoder;
  std::unique_ptr<TransformerEncoder> partner;
  std::unique_ptr<CouplingFlow> flow;
};

// Fresh models for the config's objective, initialized from (seed, tensor
// name) so the starting point depends only on the seed, never on build
// order or on which companions exist.
ModelBundle build_models(const RunConfig& cfg, Vocabulary vocab);

// Rebuilds a bundle from a checkpoint file: config and vocabulary come from
// the header; every tensor is restored by name, bit-identically for f64
// payloads. Companion models are rebuilt exactly when their tensors are
// present.
ModelBundle load_model_bundle(const std::string& path);

struct TrainLogRow {
  int64_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

// CSV with header step,loss,lr.
std::string train_log_to_csv(const std::vector<TrainLogRow>& rows);

// One training run: loads data, builds or restores models, and executes the
// objective's loop. Divergence (non-finite loss or gradients) surfaces as a
// DomainError from run().
class Trainer {
 public:
  explicit Trainer(RunConfig cfg);

  // Runs to the step budget; returns the per-step loss log.
  std::vector<TrainLogRow> run();

  // Model + vocabulary + config as a serializable checkpoint, with tied
  // tensors stored once and aliased.
  Checkpoint snapshot() const;

  // Writes checkpoint.bin, loss_log.csv, and config.json into dir.
  void save(const std::string& dir) const;

  const ModelBundle& bundle() const { return bundle_; }
  const std::vector<TrainLogRow>& log() const { return log_; }

 private:
  double step_lr(int64_t step) const;
  std::vector<size_t> next_batch();
  double train_step(int64_t step);
  double eval_aggregate() const;

  RunConfig cfg_;
  ModelBundle bundle_;

  std::vector<std::vector<int64_t>> corpus_;  // tokenized sentences
  PairBatch pairs_;                           // mnrl
  ScoredPairBatch scored_pairs_;              // mse
  std::vector<std::vector<double>> flow_inputs_;

  Rng order_rng_;
  Rng noise_rng_;
  Rng dropout_rng_;
  std::vector<size_t> perm_;
  size_t perm_pos_ = 0;
  size_t dataset_size_ = 0;

  AdamState adam_;
  std::vector<ParamPtr> train_params_;
  std::vector<TrainLogRow> log_;
};

}  // namespace sembed

#endif  // SEMBED_TRAINER_H_
