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

#include "sembed/config.h"

#include <nlohmann/json.hpp>

#include "sembed/error.h"
#include "sembed/io.h"

namespace sembed {

using nlohmann::json;
using nlohmann::ordered_json;

Objective objective_from_string(const std::string& s) {
  if (s == "tsdae") return Objective::kTsdae;
  if (s == "mlm") return Objective::kMlm;
  if (s == "ct") return Objective::kCt;
  if (s == "simcse") return Objective::kSimcse;
  if (s == "mnrl") return Objective::kMnrl;
  if (s == "mse") return Objective::kMse;
  if (s == "flow") return Objective::kFlow;
  throw DataError("unknown objective: " + s);
}

const char* to_string(Objective o) {
  switch (o) {
    case Objective::kTsdae: return "tsdae";
    case Objective::kMlm: return "mlm";
    case Objective::kCt: return "ct";
    case Objective::kSimcse: return "simcse";
    case Objective::kMnrl: return "mnrl";
    case Objective::kMse: return "mse";
    case Objective::kFlow: return "flow";
  }
  return "?";
}

void RunConfig::validate() const {
  SEMBED_CHECK(batch_size >= 1, ContractError, "batch_size must be >= 1");
  SEMBED_CHECK(max_steps >= 0 && epochs >= 0, ContractError,
               "max_steps and epochs must be >= 0");
  SEMBED_CHECK(log_every >= 1, ContractError, "log_every must be >= 1");
  SEMBED_CHECK(vocab_min_freq >= 1, ContractError, "vocab_min_freq must be >= 1");
  SEMBED_CHECK(corpus_limit >= 0, ContractError, "corpus_limit must be >= 0");
  SEMBED_CHECK(lr > 0.0, ContractError, "lr must be positive");
  SEMBED_CHECK(weight_decay >= 0.0, ContractError, "weight_decay must be >= 0");
  SEMBED_CHECK(mlm_prob > 0.0 && mlm_prob <= 1.0, ContractError,
               "mlm_prob must be in (0, 1]");
  SEMBED_CHECK(mnrl_scale > 0.0, ContractError, "mnrl_scale must be positive");
  SEMBED_CHECK(ct_negatives >= 1, ContractError, "ct_negatives must be >= 1");
  SEMBED_CHECK(ct_lr_factors.size() == ct_lr_steps.size() + 1, ContractError,
               "ct_lr_factors needs exactly one more entry than ct_lr_steps");
  for (size_t i = 0; i + 1 < ct_lr_steps.size(); ++i) {
    SEMBED_CHECK(ct_lr_steps[i] < ct_lr_steps[i + 1], ContractError,
                 "ct_lr_steps must be strictly increasing");
  }
  for (double f : ct_lr_factors) {
    SEMBED_CHECK(f > 0.0, ContractError, "ct_lr_factors must be positive");
  }
  SEMBED_CHECK(flow_layers >= 1 && flow_hidden >= 1, ContractError,
               "flow dimensions must be positive");
  SEMBED_CHECK(ir_k >= 1, ContractError, "ir_k must be >= 1");
  SEMBED_CHECK(scorer == "embedding" || scorer == "bm25", ContractError,
               "scorer must be embedding or bm25");
  SEMBED_CHECK(early_stop_patience >= 0 && early_stop_every >= 1, ContractError,
               "invalid early-stop settings");

  // Model fields minus vocab_size, which only exists once data is loaded.
  SEMBED_CHECK(model.layers >= 1, ContractError, "layers must be >= 1");
  SEMBED_CHECK(model.hidden >= 1 && model.heads >= 1 && model.ffn >= 1,
               ContractError, "model dims must be positive");
  SEMBED_CHECK(model.hidden % model.heads == 0, ContractError,
               "hidden not divisible by heads");
  SEMBED_CHECK(model.max_len >= 2, ContractError, "max_len must be >= 2");
  SEMBED_CHECK(model.dropout >= 0.0 && model.dropout < 1.0, ContractError,
               "dropout must be in [0, 1)");
  SEMBED_CHECK(noise.ratio >= 0.0 && noise.ratio <= 1.0, ContractError,
               "noise ratio must be in [0, 1]");
}

namespace {

void check_keys(const json& j, const std::string& where,
                const std::vector<std::string>& allowed) {
  SEMBED_CHECK(j.is_object(), DataError, where, ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    SEMBED_CHECK(ok, DataError, where, ": unknown key \"", key, "\"");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T* dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    *dst = j[key].get<T>();
  } catch (const json::exception&) {
    throw DataError(detail::str(where, ": bad value for \"", key, "\""));
  }
}

std::string scalar_to_string(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
  if (v.is_number()) return format_g9(v.get<double>());
  throw DataError(where + ": sweep values must be scalars");
}

}  // namespace

RunConfig parse_run_config_json(const std::string& json_text,
                                const std::string& where) {
  json j = json::parse(json_text, nullptr, false);
  SEMBED_CHECK(!j.is_discarded(), DataError, "malformed JSON in ", where);
  check_keys(j, where,
             {"objective", "seed", "data", "eval_data", "vocab", "checkpoint",
              "out", "model", "noise", "optim", "params", "eval", "early_stop",
              "sweep"});

  RunConfig cfg;
  if (j.contains("objective")) {
    SEMBED_CHECK(j["objective"].is_string(), DataError, where,
                 ": objective must be a string");
    cfg.objective = objective_from_string(j["objective"].get<std::string>());
  }
  read_field(j, "seed", &cfg.seed, where);
  read_field(j, "data", &cfg.data, where);
  read_field(j, "eval_data", &cfg.eval_data, where);
  read_field(j, "vocab", &cfg.vocab_path, where);
  read_field(j, "checkpoint", &cfg.checkpoint, where);
  read_field(j, "out", &cfg.out, where);

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, where + ".model",
               {"layers", "hidden", "heads", "ffn", "max_len", "dropout",
                "pooling", "tie_weights"});
    read_field(m, "layers", &cfg.model.layers, where);
    read_field(m, "hidden", &cfg.model.hidden, where);
    read_field(m, "heads", &cfg.model.heads, where);
    read_field(m, "ffn", &cfg.model.ffn, where);
    read_field(m, "max_len", &cfg.model.max_len, where);
    read_field(m, "dropout", &cfg.model.dropout, where);
    if (m.contains("pooling")) {
      cfg.model.pooling = pooling_from_string(m["pooling"].get<std::string>());
    }
    read_field(m, "tie_weights", &cfg.model.tie_weights, where);
  }

  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, where + ".noise", {"kind", "ratio"});
    if (n.contains("kind")) {
      cfg.noise.kind = noise_kind_from_string(n["kind"].get<std::string>());
    }
    read_field(n, "ratio", &cfg.noise.ratio, where);
  }

  if (j.contains("optim")) {
    const json& o = j["optim"];
    check_keys(o, where + ".optim",
               {"lr", "weight_decay", "batch_size", "max_steps", "epochs",
                "log_every", "vocab_min_freq", "corpus_limit"});
    read_field(o, "lr", &cfg.lr, where);
    read_field(o, "weight_decay", &cfg.weight_decay, where);
    read_field(o, "batch_size", &cfg.batch_size, where);
    read_field(o, "max_steps", &cfg.max_steps, where);
    read_field(o, "epochs", &cfg.epochs, where);
    read_field(o, "log_every", &cfg.log_every, where);
    read_field(o, "vocab_min_freq", &cfg.vocab_min_freq, where);
    read_field(o, "corpus_limit", &cfg.corpus_limit, where);
  }

  if (j.contains("params")) {
    const json& p = j["params"];
    check_keys(p, where + ".params",
               {"mnrl_scale", "mlm_prob", "ct_negatives", "ct_lr_factors",
                "ct_lr_steps", "flow_layers", "flow_hidden"});
    read_field(p, "mnrl_scale", &cfg.mnrl_scale, where);
    read_field(p, "mlm_prob", &cfg.mlm_prob, where);
    read_field(p, "ct_negatives", &cfg.ct_negatives, where);
    read_field(p, "ct_lr_factors", &cfg.ct_lr_factors, where);
    read_field(p, "ct_lr_steps", &cfg.ct_lr_steps, where);
    read_field(p, "flow_layers", &cfg.flow_layers, where);
    read_field(p, "flow_hidden", &cfg.flow_hidden, where);
  }

  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, where + ".eval", {"ir_k", "scorer"});
    read_field(e, "ir_k", &cfg.ir_k, where);
    read_field(e, "scorer", &cfg.scorer, where);
  }

  if (j.contains("early_stop")) {
    const json& e = j["early_stop"];
    check_keys(e, where + ".early_stop", {"patience", "eval_every"});
    read_field(e, "patience", &cfg.early_stop_patience, where);
    read_field(e, "eval_every", &cfg.early_stop_every, where);
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, where + ".sweep", {"axis", "values", "seeds"});
    read_field(s, "axis", &cfg.sweep.axis, where);
    if (s.contains("values")) {
      SEMBED_CHECK(s["values"].is_array(), DataError, where,
                   ": sweep.values must be an array");
      for (const auto& v : s["values"]) {
        cfg.sweep.values.push_back(scalar_to_string(v, where));
      }
    }
    read_field(s, "seeds", &cfg.sweep.seeds, where);
  }

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config_json(read_text_file(path), path);
}

std::string run_config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["objective"] = to_string(cfg.objective);
  j["seed"] = cfg.seed;
  j["data"] = cfg.data;
  j["eval_data"] = cfg.eval_data;
  j["vocab"] = cfg.vocab_path;
  j["checkpoint"] = cfg.checkpoint;
  j["out"] = cfg.out;
  j["model"] = {{"layers", cfg.model.layers},
                {"hidden", cfg.model.hidden},
                {"heads", cfg.model.heads},
                {"ffn", cfg.model.ffn},
                {"max_len", cfg.model.max_len},
                {"dropout", cfg.model.dropout},
                {"pooling", to_string(cfg.model.pooling)},
                {"tie_weights", cfg.model.tie_weights}};
  j["noise"] = {{"kind", to_string(cfg.noise.kind)}, {"ratio", cfg.noise.ratio}};
  j["optim"] = {{"lr", cfg.lr},
                {"weight_decay", cfg.weight_decay},
                {"batch_size", cfg.batch_size},
                {"max_steps", cfg.max_steps},
                {"epochs", cfg.epochs},
                {"log_every", cfg.log_every},
                {"vocab_min_freq", cfg.vocab_min_freq},
                {"corpus_limit", cfg.corpus_limit}};
  j["params"] = {{"mnrl_scale", cfg.mnrl_scale},
                 {"mlm_prob", cfg.mlm_prob},
                 {"ct_negatives", cfg.ct_negatives},
                 {"ct_lr_factors", cfg.ct_lr_factors},
                 {"ct_lr_steps", cfg.ct_lr_steps},
                 {"flow_layers", cfg.flow_layers},
                 {"flow_hidden", cfg.flow_hidden}};
  j["eval"] = {{"ir_k", cfg.ir_k}, {"scorer", cfg.scorer}};
  j["early_stop"] = {{"patience", cfg.early_stop_patience},
                     {"eval_every", cfg.early_stop_every}};
  if (!cfg.sweep.axis.empty()) {
    j["sweep"] = {{"axis", cfg.sweep.axis},
                  {"values", cfg.sweep.values},
                  {"seeds", cfg.sweep.seeds}};
  }
  return j.dump();
}

}  // namespace sembed
