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

#include "sembed/autograd.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "sembed/error.h"
#include "sembed/io.h"
#include "sembed/rng.h"
#include "sembed/tasks.h"
#include "sembed/vocab.h"

namespace sembed {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::path("tmp_trainer") / name) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all("tmp_trainer"); }
  std::string write(const std::string& file, const std::string& content) const {
    fs::path p = path / file;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Two topical clusters so short runs have learnable structure.
std::string cluster_corpus(int n, uint64_t seed) {
  const std::vector<std::string> color = {"red",   "blue",  "green",
                                          "color", "paint", "hue"};
  const std::vector<std::string> pets = {"dog", "cat", "pet",
                                         "fur", "tail", "bark"};
  Rng rng(seed);
  std::string text;
  for (int i = 0; i < n; ++i) {
    const auto& words = (i % 2 == 0) ? color : pets;
    int len = 4 + static_cast<int>(rng.uniform_int(4));
    for (int w = 0; w < len; ++w) {
      if (w > 0) text += ' ';
      text += words[rng.uniform_int(words.size())];
    }
    text += '\n';
  }
  return text;
}

RunConfig tiny_run_config(Objective obj, const std::string& data) {
  RunConfig cfg;
  cfg.objective = obj;
  cfg.seed = 7;
  cfg.data = data;
  cfg.model.layers = 1;
  cfg.model.hidden = 16;
  cfg.model.heads = 2;
  cfg.model.ffn = 32;
  cfg.model.max_len = 12;
  cfg.model.dropout = 0.0;
  cfg.lr = 5e-3;
  cfg.batch_size = 4;
  cfg.max_steps = 5;
  cfg.ct_negatives = 2;
  cfg.ct_lr_factors = {1.0};
  cfg.ct_lr_steps = {};
  return cfg;
}

double mean_of(const std::vector<TrainLogRow>& rows, size_t begin,
               size_t end) {
  double sum = 0.0;
  for (size_t i = begin; i < end; ++i) sum += rows[i].loss;
  return sum / static_cast<double>(end - begin);
}

std::vector<std::vector<std::string>> probe_sentences() {
  return {{"red", "paint", "hue"}, {"dog", "fur"}, {"cat", "tail", "pet", "bark"}};
}

std::vector<std::vector<double>> embed_with(const TransformerEncoder& enc,
                                            const Vocabulary& vocab) {
  std::vector<std::vector<std::int64_t>> toks;
  for (const auto& words : probe_sentences()) {
    std::vector<std::int64_t> ids;
    for (const auto& w : words) ids.push_back(vocab.id(w));
    toks.push_back(ids);
  }
  Tape tape;
  Tensor emb = embed_sentences(tape, enc, toks).value();
  std::vector<std::vector<double>> out;
  for (std::int64_t r = 0; r < emb.dim(0); ++r) {
    std::vector<double> row;
    for (std::int64_t c = 0; c < emb.dim(1); ++c) row.push_back(emb.at({r, c}));
    out.push_back(std::move(row));
  }
  return out;
}

TEST_CASE("build_models creates exactly the objective's companions") {
  Vocabulary vocab = Vocabulary::from_tokens({"aa", "bb", "cc", "dd"});
  RunConfig cfg = tiny_run_config(Objective::kTsdae, "unused.txt");

  ModelBundle tsdae = build_models(cfg, vocab);
  CHECK(tsdae.encoder != nullptr);
  CHECK(tsdae.decoder != nullptr);
  CHECK(tsdae.partner == nullptr);
  CHECK(tsdae.flow == nullptr);
  CHECK(tsdae.cfg.model.vocab_size == vocab.size());

  cfg.objective = Objective::kMlm;
  ModelBundle mlm = build_models(cfg, vocab);
  CHECK(mlm.decoder == nullptr);
  CHECK(mlm.partner == nullptr);
  CHECK(mlm.flow == nullptr);

  cfg.objective = Objective::kSimcse;
  ModelBundle simcse = build_models(cfg, vocab);
  CHECK(simcse.decoder == nullptr);
  CHECK(simcse.partner == nullptr);

  cfg.objective = Objective::kFlow;
  cfg.flow_layers = 2;
  cfg.flow_hidden = 8;
  ModelBundle flow = build_models(cfg, vocab);
  REQUIRE(flow.flow != nullptr);
  CHECK(flow.decoder == nullptr);
  for (const ParamPtr& p : flow.flow->parameters()) {
    CHECK(p->name.rfind("flow.", 0) == 0);
  }
}

TEST_CASE("ct partner starts as an equal but independent copy") {
  Vocabulary vocab = Vocabulary::from_tokens({"aa", "bb", "cc"});
  RunConfig cfg = tiny_run_config(Objective::kCt, "unused.txt");
  ModelBundle b = build_models(cfg, vocab);
  REQUIRE(b.partner != nullptr);

  std::vector<ParamPtr> enc = b.encoder->parameters();
  std::vector<ParamPtr> par = b.partner->parameters();
  REQUIRE(enc.size() == par.size());
  for (size_t i = 0; i < enc.size(); ++i) {
    CHECK(par[i].get() != enc[i].get());
    CHECK(par[i]->name.rfind("partner.", 0) == 0);
    REQUIRE(par[i]->value.shape() == enc[i]->value.shape());
    for (std::int64_t k = 0; k < enc[i]->value.numel(); ++k) {
      CHECK(par[i]->value.vec()[static_cast<size_t>(k)] ==
            enc[i]->value.vec()[static_cast<size_t>(k)]);
    }
  }
}

TEST_CASE("build_models rejects a vocabulary without content tokens") {
  Vocabulary empty = Vocabulary::from_tokens({});
  RunConfig cfg = tiny_run_config(Objective::kMlm, "unused.txt");
  CHECK_THROWS_AS(build_models(cfg, empty), DataError);
}

TEST_CASE("trainer constructor rejects bad setups") {
  TempDir dir("ctor");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(12, 3));

  RunConfig no_data = tiny_run_config(Objective::kTsdae, "");
  CHECK_THROWS_AS(Trainer{no_data}, DataError);

  RunConfig bad = tiny_run_config(Objective::kTsdae, corpus);
  bad.lr = 0.0;
  CHECK_THROWS_AS(Trainer{bad}, ContractError);

  RunConfig ckpt = tiny_run_config(Objective::kTsdae, corpus);
  ckpt.checkpoint = "whatever.bin";
  CHECK_THROWS_AS(Trainer{ckpt}, DataError);

  RunConfig flow = tiny_run_config(Objective::kFlow, corpus);
  CHECK_THROWS_AS(Trainer{flow}, DataError);

  RunConfig missing = tiny_run_config(Objective::kTsdae, dir.file("nope.txt"));
  CHECK_THROWS_AS(Trainer{missing}, IoError);

  std::string blank = dir.write("blank.txt", "\n  \n\t\n");
  RunConfig empty = tiny_run_config(Objective::kTsdae, blank);
  CHECK_THROWS_AS(Trainer{empty}, DataError);
}

TEST_CASE("pair objectives validate their jsonl input") {
  TempDir dir("pairs");
  std::string broken = dir.write(
      "broken.jsonl",
      "{\"s1\": \"red blue\", \"s2\": \"green hue\"}\n{\"s1\": 3}\n");
  RunConfig cfg = tiny_run_config(Objective::kMnrl, broken);
  try {
    Trainer t(cfg);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  std::string unscored = dir.write(
      "unscored.jsonl", "{\"s1\": \"red blue\", \"s2\": \"green hue\"}\n");
  RunConfig mse = tiny_run_config(Objective::kMse, unscored);
  CHECK_THROWS_AS(Trainer{mse}, DataError);

  // The same file is fine for mnrl, which ignores scores.
  RunConfig mnrl = tiny_run_config(Objective::kMnrl, unscored);
  mnrl.batch_size = 1;
  mnrl.max_steps = 1;
  CHECK_NOTHROW(Trainer{mnrl});
}

TEST_CASE("run obeys the step budget from max_steps and epochs") {
  TempDir dir("budget");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(10, 5));

  RunConfig by_steps = tiny_run_config(Objective::kMlm, corpus);
  by_steps.max_steps = 7;
  std::vector<TrainLogRow> log = Trainer(by_steps).run();
  REQUIRE(log.size() == 7);
  for (size_t i = 0; i < log.size(); ++i) {
    CHECK(log[i].step == static_cast<std::int64_t>(i + 1));
    CHECK(std::isfinite(log[i].loss));
    CHECK(log[i].lr == by_steps.lr);
  }

  // 10 sentences / batch 4 -> 3 steps per epoch.
  RunConfig by_epochs = tiny_run_config(Objective::kMlm, corpus);
  by_epochs.max_steps = 0;
  by_epochs.epochs = 2;
  CHECK(Trainer(by_epochs).run().size() == 6);

  RunConfig capped = tiny_run_config(Objective::kMlm, corpus);
  capped.max_steps = 4;
  capped.epochs = 2;
  CHECK(Trainer(capped).run().size() == 4);

  RunConfig zero = tiny_run_config(Objective::kMlm, corpus);
  zero.max_steps = 0;
  zero.epochs = 0;
  Trainer t(zero);
  CHECK_THROWS_AS(t.run(), DataError);
}

TEST_CASE("corpus_limit trains on a subsample") {
  TempDir dir("limit");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(20, 11));
  RunConfig cfg = tiny_run_config(Objective::kMlm, corpus);
  cfg.corpus_limit = 4;
  cfg.batch_size = 4;
  cfg.max_steps = 0;
  cfg.epochs = 2;  // 4 sentences / batch 4 -> 1 step per epoch
  CHECK(Trainer(cfg).run().size() == 2);
}

TEST_CASE("identical configs reproduce logs and weights bit for bit") {
  TempDir dir("determinism");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(16, 9));
  RunConfig cfg = tiny_run_config(Objective::kTsdae, corpus);
  cfg.max_steps = 8;

  Trainer a(cfg);
  Trainer b(cfg);
  std::vector<TrainLogRow> la = a.run();
  std::vector<TrainLogRow> lb = b.run();
  REQUIRE(la.size() == lb.size());
  for (size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].step == lb[i].step);
    CHECK(la[i].loss == lb[i].loss);
    CHECK(la[i].lr == lb[i].lr);
  }

  auto ea = embed_with(*a.bundle().encoder, a.bundle().vocab);
  auto eb = embed_with(*b.bundle().encoder, b.bundle().vocab);
  REQUIRE(ea.size() == eb.size());
  for (size_t i = 0; i < ea.size(); ++i) {
    REQUIRE(ea[i].size() == eb[i].size());
    for (size_t j = 0; j < ea[i].size(); ++j) CHECK(ea[i][j] == eb[i][j]);
  }

  RunConfig other = cfg;
  other.seed = 8;
  std::vector<TrainLogRow> lo = Trainer(other).run();
  bool any_diff = false;
  for (size_t i = 0; i < lo.size(); ++i) any_diff |= (lo[i].loss != la[i].loss);
  CHECK(any_diff);
}

TEST_CASE("denoising loss falls over a short run") {
  TempDir dir("tsdae");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(32, 13));
  RunConfig cfg = tiny_run_config(Objective::kTsdae, corpus);
  cfg.batch_size = 8;
  cfg.max_steps = 40;
  std::vector<TrainLogRow> log = Trainer(cfg).run();
  REQUIRE(log.size() == 40);
  double head = mean_of(log, 0, 5);
  double tail = mean_of(log, 35, 40);
  CHECK(tail < head);
}

TEST_CASE("ct learning rate follows the piecewise schedule") {
  TempDir dir("ctlr");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(12, 17));
  RunConfig cfg = tiny_run_config(Objective::kCt, corpus);
  cfg.lr = 1e-3;
  cfg.batch_size = 2;
  cfg.ct_negatives = 2;
  cfg.ct_lr_factors = {1.0, 0.5, 0.25};
  cfg.ct_lr_steps = {2, 4};
  cfg.max_steps = 6;

  std::vector<TrainLogRow> log = Trainer(cfg).run();
  REQUIRE(log.size() == 6);
  CHECK(log[0].lr == 1e-3);
  CHECK(log[1].lr == 1e-3);
  CHECK(log[2].lr == 1e-3 * 0.5);
  CHECK(log[3].lr == 1e-3 * 0.5);
  CHECK(log[4].lr == 1e-3 * 0.25);
  CHECK(log[5].lr == 1e-3 * 0.25);
  for (const TrainLogRow& r : log) CHECK(std::isfinite(r.loss));
}

TEST_CASE("mnrl and mse train on pair files") {
  TempDir dir("pairrun");
  std::string pairs = dir.write(
      "pairs.jsonl",
      "{\"s1\": \"red paint\", \"s2\": \"blue hue\", \"score\": 0.9}\n"
      "{\"s1\": \"dog fur\", \"s2\": \"cat tail\", \"score\": 0.8}\n"
      "{\"s1\": \"green color\", \"s2\": \"red blue\", \"score\": 0.7}\n"
      "{\"s1\": \"pet bark\", \"s2\": \"dog cat\", \"score\": 0.2}\n");

  RunConfig mnrl = tiny_run_config(Objective::kMnrl, pairs);
  mnrl.batch_size = 2;
  mnrl.max_steps = 5;
  std::vector<TrainLogRow> ml = Trainer(mnrl).run();
  REQUIRE(ml.size() == 5);
  for (const TrainLogRow& r : ml) CHECK(std::isfinite(r.loss));

  RunConfig mse = tiny_run_config(Objective::kMse, pairs);
  mse.batch_size = 4;
  mse.max_steps = 3;
  std::vector<TrainLogRow> sl = Trainer(mse).run();
  REQUIRE(sl.size() == 3);
  for (const TrainLogRow& r : sl) {
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss >= 0.0);  // mean squared difference
  }
}

TEST_CASE("train_log_to_csv emits step,loss,lr rows") {
  std::vector<TrainLogRow> rows = {{1, 0.5, 0.001}, {2, 0.25, 0.001}};
  CHECK(train_log_to_csv(rows) == "step,loss,lr\n1,0.5,0.001\n2,0.25,0.001\n");
  CHECK(train_log_to_csv({}) == "step,loss,lr\n");
}

TEST_CASE("save writes artifacts and load_model_bundle restores them") {
  TempDir dir("saveload");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(16, 21));
  RunConfig cfg = tiny_run_config(Objective::kTsdae, corpus);
  cfg.max_steps = 6;
  cfg.out = dir.file("run");

  Trainer t(cfg);
  t.run();
  t.save(cfg.out);

  CHECK(fs::exists(fs::path(cfg.out) / "checkpoint.bin"));
  CHECK(read_text_file(path_join(cfg.out, "loss_log.csv")) ==
        train_log_to_csv(t.log()));
  CHECK(read_text_file(path_join(cfg.out, "config.json")) ==
        run_config_to_json(t.bundle().cfg) + "\n");

  ModelBundle loaded =
      load_model_bundle(path_join(cfg.out, "checkpoint.bin"));
  CHECK(loaded.cfg.objective == Objective::kTsdae);
  REQUIRE(loaded.decoder != nullptr);
  CHECK(loaded.vocab.size() == t.bundle().vocab.size());

  auto before = embed_with(*t.bundle().encoder, t.bundle().vocab);
  auto after = embed_with(*loaded.encoder, loaded.vocab);
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) {
    REQUIRE(before[i].size() == after[i].size());
    for (size_t j = 0; j < before[i].size(); ++j) {
      CHECK(before[i][j] == after[i][j]);
    }
  }
}

TEST_CASE("snapshot aliases tied decoder tensors instead of duplicating") {
  TempDir dir("alias");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(10, 23));
  RunConfig cfg = tiny_run_config(Objective::kTsdae, corpus);
  cfg.max_steps = 2;
  Trainer t(cfg);
  t.run();

  Checkpoint ckpt = t.snapshot();
  CHECK(!ckpt.aliases.empty());
  for (const auto& [alias, stored] : ckpt.aliases) {
    CHECK(alias.rfind("decoder.", 0) == 0);
    CHECK(stored.rfind("encoder.", 0) == 0);
  }
  for (const ParamPtr& p : ckpt.params) {
    for (const auto& [alias, stored] : ckpt.aliases) CHECK(p->name != alias);
  }
  CHECK(ckpt.has_adam);
  CHECK(ckpt.adam_step == 2);
}

TEST_CASE("flow trains on a frozen encoder from a checkpoint") {
  TempDir dir("flow");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(24, 29));

  RunConfig base = tiny_run_config(Objective::kMlm, corpus);
  base.max_steps = 3;
  base.out = dir.file("base");
  Trainer bt(base);
  bt.run();
  bt.save(base.out);
  auto frozen = embed_with(*bt.bundle().encoder, bt.bundle().vocab);

  RunConfig fc = tiny_run_config(Objective::kFlow, corpus);
  fc.checkpoint = path_join(base.out, "checkpoint.bin");
  fc.flow_layers = 2;
  fc.flow_hidden = 8;
  fc.lr = 1e-2;
  fc.batch_size = 8;
  fc.max_steps = 30;
  // Deliberately wrong model settings: the checkpoint's model wins.
  fc.model.hidden = 4;
  fc.model.heads = 1;

  Trainer ft(fc);
  CHECK(ft.bundle().cfg.model.hidden == base.model.hidden);
  std::vector<TrainLogRow> log = ft.run();
  REQUIRE(log.size() == 30);
  for (const TrainLogRow& r : log) CHECK(std::isfinite(r.loss));
  CHECK(mean_of(log, 25, 30) < mean_of(log, 0, 5));

  // The encoder must come through untouched.
  auto still = embed_with(*ft.bundle().encoder, ft.bundle().vocab);
  for (size_t i = 0; i < frozen.size(); ++i) {
    for (size_t j = 0; j < frozen[i].size(); ++j) {
      CHECK(still[i][j] == frozen[i][j]);
    }
  }

  // The snapshot carries flow and encoder together and restores both.
  Checkpoint ckpt = ft.snapshot();
  bool has_flow = false;
  bool has_encoder = false;
  for (const ParamPtr& p : ckpt.params) {
    has_flow |= p->name.rfind("flow.", 0) == 0;
    has_encoder |= p->name.rfind("encoder.", 0) == 0;
  }
  CHECK(has_flow);
  CHECK(has_encoder);

  ft.save(dir.file("flowrun"));
  ModelBundle loaded =
      load_model_bundle(path_join(dir.file("flowrun"), "checkpoint.bin"));
  REQUIRE(loaded.flow != nullptr);
  std::vector<ParamPtr> got = loaded.flow->parameters();
  std::vector<ParamPtr> want = ft.bundle().flow->parameters();
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i]->name == want[i]->name);
    for (std::int64_t k = 0; k < want[i]->value.numel(); ++k) {
      CHECK(got[i]->value.vec()[static_cast<size_t>(k)] ==
            want[i]->value.vec()[static_cast<size_t>(k)]);
    }
  }
}

TEST_CASE("validation early stopping cuts the run short") {
  TempDir dir("early");
  std::string corpus = dir.write("corpus.txt", cluster_corpus(16, 31));
  dir.write("rr.jsonl",
            "{\"query\": \"red paint\", \"candidates\": [\"blue hue\", "
            "\"dog bark\"], \"relevant\": [0]}\n");
  std::string manifest = dir.write(
      "tasks.json",
      "{\"name\": \"val\", \"kind\": \"rerank\","
      " \"subdatasets\": [{\"name\": \"s1\", \"path\": \"rr.jsonl\"}]}\n");

  RunConfig cfg = tiny_run_config(Objective::kTsdae, corpus);
  cfg.eval_data = manifest;
  cfg.early_stop_patience = 1;
  cfg.early_stop_every = 1;
  cfg.max_steps = 50;

  // AP over two candidates takes only two values, so the score cannot keep
  // improving and patience 1 must trigger long before the budget.
  std::vector<TrainLogRow> log = Trainer(cfg).run();
  CHECK(log.size() < 50);
}

}  // namespace
}  // namespace sembed
