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

#ifndef SEMBED_CONFIG_H_
#define SEMBED_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sembed/model.h"
#include "sembed/noise.h"

namespace sembed {

enum class Objective { kTsdae, kMlm, kCt, kSimcse, kMnrl, kMse, kFlow };

Objective objective_from_string(const std::string& s);
const char* to_string(Objective o);

struct SweepSpec {
  std::string axis;  // corpus_size | noise_type | noise_ratio | pooling | tying
  std::vector<std::string> values;  // scalars, normalized to strings
  std::vector<uint64_t> seeds;
};

// One experiment: a single JSON document, overridable by CLI flags. Unknown
// keys are rejected so typos fail loudly.
struct RunConfig {
  Objective objective = Objective::kTsdae;
  uint64_t seed = 42;

  std::string data;        // training corpus (txt) or pair file (jsonl)
  std::string eval_data;   // task dataset manifest
  std::string vocab_path;  // optional pre-built vocabulary
  std::string checkpoint;  // model source for embed/eval, init for train
  std::string out = "out";

  ModelConfig model;  // vocab_size is filled from data at run time
  NoiseSpec noise;

  double lr = 3e-5;  // documented default; desk-scale runs want larger
  double weight_decay = 0.0;
  int64_t batch_size = 8;
  int64_t max_steps = 2000;
  int64_t epochs = 0;  // 0 = bounded by max_steps only
  int64_t log_every = 50;
  int64_t vocab_min_freq = 1;
  // 0 = use the whole corpus; otherwise train on a seed-derived random
  // subsample of this many sentences (the corpus-size sweep axis).
  int64_t corpus_limit = 0;

  double mnrl_scale = 20.0;
  double mlm_prob = 0.15;
  int64_t ct_negatives = 7;
  // lr multiplier starts at factor[0]; crossing boundary step i moves to
  // factor[i + 1]. factors has one more entry than steps.
  std::vector<double> ct_lr_factors{1.0, 0.8, 0.6, 0.4, 0.2};
  std::vector<int64_t> ct_lr_steps{500, 1000, 1500, 2000};
  int64_t flow_layers = 4;
  int64_t flow_hidden = 64;

  int64_t ir_k = 100;
  std::string scorer = "embedding";  // embedding | bm25 (eval only)

  int64_t early_stop_patience = 0;  // 0 disables validation early stopping
  int64_t early_stop_every = 200;

  SweepSpec sweep;

  // Field-level sanity; path existence is checked per subcommand.
  void validate() const;
};

RunConfig parse_run_config_json(const std::string& json_text,
                                const std::string& where);
RunConfig load_run_config(const std::string& path);

// Deterministic (ordered-key) JSON; parse_run_config_json inverts it.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace sembed

#endif  // SEMBED_CONFIG_H_
