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

#include "sembed/cli.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sembed/attribution.h"
#include "sembed/config.h"
#include "sembed/error.h"
#include "sembed/flow.h"
#include "sembed/io.h"
#include "sembed/sweep.h"
#include "sembed/tasks.h"
#include "sembed/trainer.h"

namespace sembed {
namespace {

// Flag values land here first; only flags the user actually passed override
// the config.
struct FlagValues {
  std::string config, objective, noise, pooling, data, eval_data, checkpoint,
      out, scorer;
  uint64_t seed = 0;
  double noise_ratio = 0.0, lr = 0.0;
  bool tie = false;
  int64_t max_steps = 0, epochs = 0, batch_size = 0, ir_k = 0;
};

void add_common_flags(CLI::App* cmd, FlagValues* v) {
  cmd->add_option("--config", v->config, "JSON run configuration");
  cmd->add_option("--seed", v->seed, "RNG seed (overrides config)");
  cmd->add_option("--objective", v->objective,
                  "tsdae|mlm|ct|simcse|mnrl|mse|flow");
  cmd->add_option("--noise", v->noise, "delete|swap|mask|replace|add");
  cmd->add_option("--noise-ratio", v->noise_ratio, "corruption ratio");
  cmd->add_option("--pooling", v->pooling, "cls|mean|max");
  cmd->add_option("--tie", v->tie, "tie decoder weights to the encoder");
  cmd->add_option("--data", v->data, "input data path");
  cmd->add_option("--eval-data", v->eval_data, "task dataset manifest");
  cmd->add_option("--checkpoint", v->checkpoint, "model checkpoint path");
  cmd->add_option("--out", v->out, "output directory");
  cmd->add_option("--max-steps", v->max_steps, "training step budget");
  cmd->add_option("--epochs", v->epochs, "epoch budget (0 = steps only)");
  cmd->add_option("--batch-size", v->batch_size, "sentences per step");
  cmd->add_option("--lr", v->lr, "learning rate");
  cmd->add_option("--ir-k", v->ir_k, "retrieval cutoff for map@k");
  cmd->add_option("--scorer", v->scorer, "embedding|bm25");
}

RunConfig resolve_config(const CLI::App* cmd, const FlagValues& v) {
  RunConfig cfg;
  if (cmd->count("--config")) cfg = load_run_config(v.config);
  if (cmd->count("--seed")) cfg.seed = v.seed;
  if (cmd->count("--objective")) {
    cfg.objective = objective_from_string(v.objective);
  }
  if (cmd->count("--noise")) cfg.noise.kind = noise_kind_from_string(v.noise);
  if (cmd->count("--noise-ratio")) cfg.noise.ratio = v.noise_ratio;
  if (cmd->count("--pooling")) {
    cfg.model.pooling = pooling_from_string(v.pooling);
  }
  if (cmd->count("--tie")) cfg.model.tie_weights = v.tie;
  if (cmd->count("--data")) cfg.data = v.data;
  if (cmd->count("--eval-data")) cfg.eval_data = v.eval_data;
  if (cmd->count("--checkpoint")) cfg.checkpoint = v.checkpoint;
  if (cmd->count("--out")) cfg.out = v.out;
  if (cmd->count("--max-steps")) cfg.max_steps = v.max_steps;
  if (cmd->count("--epochs")) cfg.epochs = v.epochs;
  if (cmd->count("--batch-size")) cfg.batch_size = v.batch_size;
  if (cmd->count("--lr")) cfg.lr = v.lr;
  if (cmd->count("--ir-k")) cfg.ir_k = v.ir_k;
  if (cmd->count("--scorer")) cfg.scorer = v.scorer;
  cfg.validate();
  return cfg;
}

void require_file(const std::string& path, const std::string& what) {
  SEMBED_CHECK(!path.empty(), DataError, what, " is required");
  SEMBED_CHECK(file_exists(path), IoError, what, " not found: ", path);
}

int cmd_train(const RunConfig& cfg) {
  require_file(cfg.data, "--data");
  if (cfg.objective == Objective::kFlow) {
    require_file(cfg.checkpoint, "--checkpoint");
  }
  Trainer trainer(cfg);
  const std::vector<TrainLogRow>& log = trainer.run();
  trainer.save(cfg.out);
  std::cout << "train: objective=" << to_string(cfg.objective) << " steps="
            << log.size() << " first_loss=" << format_g9(log.front().loss)
            << " final_loss=" << format_g9(log.back().loss) << "\n";
  return 0;
}

int cmd_embed(const RunConfig& cfg) {
  require_file(cfg.checkpoint, "--checkpoint");
  require_file(cfg.data, "--data");
  ModelBundle bundle = load_model_bundle(cfg.checkpoint);
  // Every line is a sentence; a line with no known words embeds as the bare
  // sentence-start token.
  std::vector<std::string> sentences = read_lines(cfg.data);
  SEMBED_CHECK(!sentences.empty(), DataError, "no sentences in ", cfg.data);

  EmbeddingScorer scorer(*bundle.encoder, bundle.vocab, 64,
                         bundle.flow.get());
  std::vector<std::vector<double>> embs = scorer.embed(sentences);

  std::ostringstream out;
  out << "dim=" << bundle.cfg.model.hidden << " count=" << embs.size() << "\n";
  for (const std::vector<double>& row : embs) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      out << format_g9(row[c]);
    }
    out << "\n";
  }
  std::filesystem::create_directories(cfg.out);
  write_text_atomic(path_join(cfg.out, "embeddings.txt"), out.str());
  std::cout << "embed: count=" << embs.size()
            << " dim=" << bundle.cfg.model.hidden << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  require_file(cfg.eval_data, "--eval-data");
  TaskDataset dataset = load_task_dataset(cfg.eval_data);

  MetricReport report;
  if (cfg.scorer == "bm25") {
    Bm25Scorer scorer;
    report = run_task(dataset, scorer, "bm25", cfg.seed, cfg.ir_k);
  } else {
    SEMBED_CHECK(cfg.scorer == "embedding", DataError,
                 "unknown scorer: ", cfg.scorer);
    require_file(cfg.checkpoint, "--checkpoint");
    ModelBundle bundle = load_model_bundle(cfg.checkpoint);
    std::string model_id = to_string(bundle.cfg.objective);
    if (bundle.flow) model_id += "+flow";
    EmbeddingScorer scorer(*bundle.encoder, bundle.vocab, 64,
                           bundle.flow.get());
    report = run_task(dataset, scorer, model_id, cfg.seed, cfg.ir_k);
  }

  std::filesystem::create_directories(cfg.out);
  write_text_atomic(path_join(cfg.out, "report.csv"),
                    metric_report_to_csv(report));
  std::cout << "eval: dataset=" << dataset.name << " metric=" << report.metric
            << " aggregate=" << format_g9(report.aggregate) << "\n";
  return 0;
}

// Applies one axis value to a cell's config. Values are validated up front
// so a bad sweep fails before any training starts.
RunConfig apply_axis(const RunConfig& base, const std::string& axis,
                     const std::string& value, uint64_t seed) {
  RunConfig cfg = base;
  cfg.seed = seed;
  if (axis == "corpus_size") {
    size_t pos = 0;
    cfg.corpus_limit = std::stoll(value, &pos);
    SEMBED_CHECK(pos == value.size() && cfg.corpus_limit > 0, DataError,
                 "bad corpus_size value: ", value);
  } else if (axis == "noise_type") {
    cfg.noise.kind = noise_kind_from_string(value);
  } else if (axis == "noise_ratio") {
    size_t pos = 0;
    cfg.noise.ratio = std::stod(value, &pos);
    SEMBED_CHECK(pos == value.size(), DataError,
                 "bad noise_ratio value: ", value);
  } else if (axis == "pooling") {
    cfg.model.pooling = pooling_from_string(value);
  } else if (axis == "tying") {
    if (value == "true" || value == "1") {
      cfg.model.tie_weights = true;
    } else if (value == "false" || value == "0") {
      cfg.model.tie_weights = false;
    } else {
      throw DataError("bad tying value: " + value);
    }
  } else {
    throw DataError("unknown sweep axis: " + axis);
  }
  cfg.validate();
  return cfg;
}

int cmd_sweep(const RunConfig& cfg) {
  require_file(cfg.data, "--data");
  require_file(cfg.eval_data, "--eval-data");
  SEMBED_CHECK(!cfg.sweep.axis.empty() && !cfg.sweep.values.empty() &&
                   !cfg.sweep.seeds.empty(),
               DataError, "sweep needs axis, values, and seeds in the config");
  TaskDataset dataset = load_task_dataset(cfg.eval_data);

  std::string metric;
  switch (dataset.kind) {
    case TaskKind::kRerank: metric = "map"; break;
    case TaskKind::kIr: metric = "map@" + std::to_string(cfg.ir_k); break;
    case TaskKind::kPi: metric = "ap"; break;
    case TaskKind::kSts: metric = "spearman"; break;
  }

  // Validate every cell's config before training anything.
  for (const std::string& value : cfg.sweep.values) {
    for (uint64_t seed : cfg.sweep.seeds) {
      apply_axis(cfg, cfg.sweep.axis, value, seed);
    }
  }

  SweepCellFn cell = [&](const std::string& value, uint64_t seed) {
    RunConfig cell_cfg = apply_axis(cfg, cfg.sweep.axis, value, seed);
    try {
      Trainer trainer(cell_cfg);
      trainer.run();
      EmbeddingScorer scorer(*trainer.bundle().encoder,
                             trainer.bundle().vocab);
      MetricReport report = run_task(dataset, scorer, to_string(cfg.objective),
                                     seed, cfg.ir_k);
      return report.aggregate;
    } catch (const DomainError&) {
      // Diverged run: the cell is dropped from the mean but stays visible
      // through n_seeds.
      return std::nan("");
    }
  };

  SweepResult result = parameter_sweep(cfg.sweep.axis, cfg.sweep.values,
                                       cfg.sweep.seeds, metric, cell);
  std::filesystem::create_directories(cfg.out);
  write_text_atomic(path_join(cfg.out, "sweep.csv"),
                    sweep_result_to_csv(result));
  std::cout << "sweep: axis=" << cfg.sweep.axis << " values="
            << cfg.sweep.values.size() << " seeds=" << cfg.sweep.seeds.size()
            << "\n";
  return 0;
}

int cmd_analyze(const RunConfig& cfg) {
  require_file(cfg.checkpoint, "--checkpoint");
  require_file(cfg.data, "--data");
  ModelBundle bundle = load_model_bundle(cfg.checkpoint);
  std::vector<TaggedPair> pairs = load_tagged_pairs_jsonl(cfg.data);

  EmbeddingScorer scorer(*bundle.encoder, bundle.vocab, 64,
                         bundle.flow.get());
  EmbedFn embed = [&](const std::vector<std::string>& tokens) {
    std::string text;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (i) text += ' ';
      text += tokens[i];
    }
    return scorer.embed({text})[0];
  };

  std::ostringstream attribution;
  attribution << "pair,word,drop,in_a,in_b\n";
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].a.size() < 2 || pairs[i].b.size() < 2) continue;
    AttributionResult r = most_relevant_word(pairs[i].a, pairs[i].b, embed);
    attribution << i << "," << csv_escape(r.word) << ","
                << format_g9(r.drop) << "," << (r.removed_from_a ? 1 : 0)
                << "," << (r.removed_from_b ? 1 : 0) << "\n";
  }

  PosDistribution dist = pos_tag_distribution(pairs, embed);

  std::filesystem::create_directories(cfg.out);
  write_text_atomic(path_join(cfg.out, "attribution.csv"), attribution.str());
  write_text_atomic(path_join(cfg.out, "pos.csv"),
                    pos_distribution_to_csv(dist));
  std::cout << "analyze: pairs=" << dist.pairs_used << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Desk-scale sentence embedding laboratory"};
  app.require_subcommand(1);

  FlagValues v;
  CLI::App* train = app.add_subcommand("train", "train a model");
  CLI::App* embed = app.add_subcommand("embed", "embed a sentence list");
  CLI::App* eval = app.add_subcommand("eval", "evaluate on a task dataset");
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
  CLI::App* analyze = app.add_subcommand("analyze", "attribution analysis");
  for (CLI::App* cmd : {train, embed, eval, sweep, analyze}) {
    add_common_flags(cmd, &v);
  }

  // CLI11 wants mutable argc-style input; it parses right-to-left.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    RunConfig cfg = resolve_config(cmd, v);
    if (cmd == train) return cmd_train(cfg);
    if (cmd == embed) return cmd_embed(cfg);
    if (cmd == eval) return cmd_eval(cfg);
    if (cmd == sweep) return cmd_sweep(cfg);
    return cmd_analyze(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sembed
