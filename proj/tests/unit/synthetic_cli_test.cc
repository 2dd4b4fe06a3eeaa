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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "sembed/attribution.h"
#include "sembed/cli.h"
#include "sembed/config.h"
#include "sembed/error.h"
#include "sembed/io.h"
#include "sembed/synthetic.h"
#include "sembed/tasks.h"
#include "sembed/vocab.h"

namespace sembed {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::path("tmp_syncli") / name) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all("tmp_syncli"); }
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

const std::set<std::string> kTags = {"DT", "JJ", "NN", "VB", "IN"};

std::unordered_map<std::string, std::int64_t> cluster_of_text(
    const SyntheticCorpus& c) {
  std::unordered_map<std::string, std::int64_t> m;
  for (size_t i = 0; i < c.texts.size(); ++i) m[c.texts[i]] = c.cluster[i];
  return m;
}

TEST_CASE("synthetic corpus is balanced, unique, and tagged") {
  SyntheticCorpus c = make_synthetic_corpus(120, 10, 42);
  REQUIRE(c.texts.size() == 120);
  REQUIRE(c.tokens.size() == 120);
  REQUIRE(c.tags.size() == 120);
  REQUIRE(c.cluster.size() == 120);
  CHECK(c.num_clusters == 10);

  std::vector<int> per_cluster(10, 0);
  std::unordered_set<std::string> texts;
  for (size_t i = 0; i < c.texts.size(); ++i) {
    REQUIRE(c.cluster[i] >= 0);
    REQUIRE(c.cluster[i] < 10);
    ++per_cluster[static_cast<size_t>(c.cluster[i])];
    texts.insert(c.texts[i]);

    REQUIRE(c.tokens[i].size() == c.tags[i].size());
    CHECK(c.tokens[i].size() >= 9);
    CHECK(c.tokens[i].size() <= 10);
    for (const std::string& t : c.tags[i]) CHECK(kTags.count(t) == 1);
    CHECK(split_words(c.texts[i]) == c.tokens[i]);
  }
  CHECK(texts.size() == 120);  // globally unique sentences
  for (int n : per_cluster) CHECK(n == 12);
}

TEST_CASE("in_clusters filters by cluster id") {
  SyntheticCorpus c = make_synthetic_corpus(30, 6, 1);
  std::vector<size_t> got = c.in_clusters(2, 4);
  std::vector<size_t> want;
  for (size_t i = 0; i < c.cluster.size(); ++i) {
    if (c.cluster[i] >= 2 && c.cluster[i] < 4) want.push_back(i);
  }
  CHECK(got == want);
}

TEST_CASE("corpus generation is seed-deterministic") {
  SyntheticCorpus a = make_synthetic_corpus(40, 5, 9);
  SyntheticCorpus b = make_synthetic_corpus(40, 5, 9);
  CHECK(a.texts == b.texts);
  CHECK(a.cluster == b.cluster);
  SyntheticCorpus other = make_synthetic_corpus(40, 5, 10);
  CHECK(a.texts != other.texts);

  CHECK_THROWS_AS(make_synthetic_corpus(3, 5, 1), ContractError);
  CHECK_THROWS_AS(make_synthetic_corpus(0, 0, 1), ContractError);
}

TEST_CASE("rerank queries mark exactly the same-cluster candidates") {
  SyntheticCorpus c = make_synthetic_corpus(80, 8, 3);
  auto cluster_of = cluster_of_text(c);
  auto queries = make_rerank_queries(c, 4, 8, 12, 3, 10, 5);
  REQUIRE(queries.size() == 12);
  for (const RerankQuery& q : queries) {
    REQUIRE(q.candidates.size() == 10);
    REQUIRE(q.relevant.size() == 3);
    std::int64_t qc = cluster_of.at(q.query);
    CHECK(qc >= 4);
    std::set<std::int64_t> rel(q.relevant.begin(), q.relevant.end());
    REQUIRE(rel.size() == 3);
    for (std::int64_t i = 0; i < 10; ++i) {
      std::int64_t cc = cluster_of.at(q.candidates[static_cast<size_t>(i)]);
      CHECK(cc >= 4);
      if (rel.count(i)) {
        CHECK(cc == qc);
      } else {
        CHECK(cc != qc);
      }
      // The query sentence itself never appears as a candidate.
      CHECK(q.candidates[static_cast<size_t>(i)] != q.query);
    }
  }
  CHECK_THROWS_AS(make_rerank_queries(c, 4, 8, 2, 5, 5, 1), ContractError);
}

TEST_CASE("ir data lists the query's own document among duplicates") {
  SyntheticCorpus c = make_synthetic_corpus(60, 6, 7);
  auto cluster_of = cluster_of_text(c);
  IrData ir = make_ir_data(c, 3, 6, 10, 2);
  CHECK(ir.corpus.size() == c.in_clusters(3, 6).size());

  std::unordered_map<std::string, std::string> text_of_id;
  std::unordered_set<std::string> ids;
  for (const IrDoc& d : ir.corpus) {
    CHECK(ids.insert(d.id).second);
    text_of_id[d.id] = d.text;
  }

  REQUIRE(ir.queries.size() == 10);
  for (const IrQuery& q : ir.queries) {
    std::int64_t qc = cluster_of.at(q.query);
    bool self_listed = false;
    REQUIRE(!q.duplicates.empty());
    for (const std::string& id : q.duplicates) {
      REQUIRE(text_of_id.count(id) == 1);
      CHECK(cluster_of.at(text_of_id[id]) == qc);
      self_listed |= text_of_id[id] == q.query;
    }
    CHECK(self_listed);
  }
}

TEST_CASE("pi pairs alternate labels with gold across the threshold") {
  SyntheticCorpus c = make_synthetic_corpus(60, 6, 13);
  auto cluster_of = cluster_of_text(c);
  auto pairs = make_pi_pairs(c, 3, 6, 20, 4);
  REQUIRE(pairs.size() == 20);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const PiPair& p = pairs[i];
    CHECK(p.has_threshold);
    CHECK(p.threshold == 0.5);
    if (i % 2 == 0) {
      CHECK(p.label == 1);
      CHECK(p.gold > 0.5);
      CHECK(cluster_of.at(p.s1) == cluster_of.at(p.s2));
    } else {
      CHECK(p.label == 0);
      CHECK(p.gold < 0.5);
      CHECK(cluster_of.at(p.s1) != cluster_of.at(p.s2));
    }
  }
}

TEST_CASE("sts gold grows with noun overlap") {
  SyntheticCorpus c = make_synthetic_corpus(60, 6, 17);
  auto cluster_of = cluster_of_text(c);
  auto pairs = make_sts_pairs(c, 3, 6, 30, 8);
  REQUIRE(pairs.size() == 30);
  double same_sum = 0.0;
  int same_n = 0;
  double diff_sum = 0.0;
  int diff_n = 0;
  for (const StsPair& p : pairs) {
    CHECK(p.score >= 0.0);
    CHECK(p.score <= 0.25 * 3 + 0.15);
    if (cluster_of.at(p.s1) == cluster_of.at(p.s2)) {
      same_sum += p.score;
      ++same_n;
    } else {
      diff_sum += p.score;
      ++diff_n;
    }
  }
  REQUIRE(same_n > 0);
  REQUIRE(diff_n > 0);
  // Same-cluster pairs share all three nouns; cross-cluster pairs share none.
  CHECK(same_sum / same_n > diff_sum / diff_n);
}

TEST_CASE("text and tagged pairs stay within one cluster") {
  SyntheticCorpus c = make_synthetic_corpus(40, 5, 19);
  auto cluster_of = cluster_of_text(c);
  auto pairs = make_text_pairs(c, 0, 5, 15, 3);
  REQUIRE(pairs.size() == 15);
  for (const TextPair& p : pairs) {
    CHECK(p.s1 != p.s2);
    CHECK(cluster_of.at(p.s1) == cluster_of.at(p.s2));
  }

  auto tagged = make_tagged_pairs(c, 0, 5, 10, 3);
  REQUIRE(tagged.size() == 10);
  for (const TaggedPair& t : tagged) {
    CHECK(t.label == 1);
    REQUIRE(t.a.size() == t.a_pos.size());
    REQUIRE(t.b.size() == t.b_pos.size());
    for (const std::string& tag : t.a_pos) CHECK(kTags.count(tag) == 1);
  }
}

TEST_CASE("bundle writes loadable datasets split from training clusters") {
  TempDir dir("bundle");
  write_synthetic_bundle(dir.path.string(), 60, 5, 11);

  for (const char* f :
       {"corpus.txt", "pairs.jsonl", "scored_pairs.jsonl", "tagged.jsonl",
        "rerank.json", "rerank.jsonl", "ir.json", "ir_corpus.jsonl",
        "ir_queries.jsonl", "pi.json", "pi.jsonl", "sts.json", "sts.jsonl"}) {
    CHECK(fs::exists(dir.path / f));
  }

  // 60 sentences over 5 clusters, two held out: 36 training lines.
  CHECK(read_lines(dir.file("corpus.txt")).size() == 36);

  TaskDataset rr = load_task_dataset(dir.file("rerank.json"));
  CHECK(rr.kind == TaskKind::kRerank);
  CHECK(rr.name == "synthetic-rerank");
  REQUIRE(rr.subs.size() == 1);
  CHECK(rr.subs[0].name == "clusters");

  CHECK(load_task_dataset(dir.file("ir.json")).kind == TaskKind::kIr);
  CHECK(load_task_dataset(dir.file("pi.json")).kind == TaskKind::kPi);
  CHECK(load_task_dataset(dir.file("sts.json")).kind == TaskKind::kSts);

  auto tagged = load_tagged_pairs_jsonl(dir.file("tagged.jsonl"));
  CHECK(!tagged.empty());

  CHECK_THROWS_AS(write_synthetic_bundle(dir.file("x"), 12, 3, 1),
                  ContractError);
}

RunConfig cli_base_config(const TempDir& dir) {
  RunConfig cfg;
  cfg.objective = Objective::kTsdae;
  cfg.seed = 5;
  cfg.data = dir.file("corpus.txt");
  cfg.model.layers = 1;
  cfg.model.hidden = 16;
  cfg.model.heads = 2;
  cfg.model.ffn = 32;
  cfg.model.max_len = 12;
  cfg.model.dropout = 0.0;
  cfg.lr = 5e-3;
  cfg.batch_size = 8;
  cfg.max_steps = 6;
  return cfg;
}

TEST_CASE("cli drives train, embed, eval, sweep, and analyze end to end") {
  TempDir dir("cli");
  write_synthetic_bundle(dir.path.string(), 60, 5, 11);

  RunConfig cfg = cli_base_config(dir);
  cfg.out = dir.file("run");
  std::string cfg_path = dir.write("cfg.json", run_config_to_json(cfg) + "\n");

  REQUIRE(run_command({"train", "--config", cfg_path}) == 0);
  CHECK(fs::exists(fs::path(cfg.out) / "checkpoint.bin"));
  CHECK(fs::exists(fs::path(cfg.out) / "config.json"));
  std::vector<std::string> log_lines =
      read_lines(path_join(cfg.out, "loss_log.csv"));
  REQUIRE(log_lines.size() == 7);  // header + six steps
  CHECK(log_lines[0] == "step,loss,lr");

  // A flag overrides the same field from the config file.
  REQUIRE(run_command({"train", "--config", cfg_path, "--max-steps", "3",
                       "--out", dir.file("run3")}) == 0);
  CHECK(read_lines(path_join(dir.file("run3"), "loss_log.csv")).size() == 4);

  // Retraining with identical config reproduces the loss log byte for byte.
  REQUIRE(run_command({"train", "--config", cfg_path, "--out",
                       dir.file("rerun")}) == 0);
  CHECK(read_text_file(path_join(dir.file("rerun"), "loss_log.csv")) ==
        read_text_file(path_join(cfg.out, "loss_log.csv")));

  std::string ckpt = path_join(cfg.out, "checkpoint.bin");

  REQUIRE(run_command({"embed", "--checkpoint", ckpt, "--data",
                       dir.file("corpus.txt"), "--out", dir.file("emb")}) == 0);
  std::vector<std::string> emb_lines =
      read_lines(path_join(dir.file("emb"), "embeddings.txt"));
  REQUIRE(emb_lines.size() == 37);  // "dim= count=" header + 36 sentences
  CHECK(emb_lines[0] == "dim=16 count=36");
  CHECK(split_words(emb_lines[1]).size() == 16);

  REQUIRE(run_command({"eval", "--checkpoint", ckpt, "--eval-data",
                       dir.file("rerank.json"), "--seed", "5", "--out",
                       dir.file("ev")}) == 0);
  std::vector<std::string> report =
      read_lines(path_join(dir.file("ev"), "report.csv"));
  REQUIRE(report.size() == 3);  // header + clusters + mean
  CHECK(report[0] == "dataset,subdataset,metric,value,model,seed");
  CHECK(report[1].find("synthetic-rerank,clusters,map,") == 0);
  CHECK(report[1].find(",tsdae,5") != std::string::npos);
  CHECK(report[2].find("synthetic-rerank,mean,map,") == 0);

  REQUIRE(run_command({"eval", "--scorer", "bm25", "--eval-data",
                       dir.file("rerank.json"), "--out",
                       dir.file("ev_bm25")}) == 0);
  std::vector<std::string> bm_report =
      read_lines(path_join(dir.file("ev_bm25"), "report.csv"));
  REQUIRE(bm_report.size() == 3);
  CHECK(bm_report[1].find(",bm25,") != std::string::npos);

  RunConfig sweep_cfg = cli_base_config(dir);
  sweep_cfg.out = dir.file("sw");
  sweep_cfg.eval_data = dir.file("rerank.json");
  sweep_cfg.max_steps = 2;
  sweep_cfg.sweep.axis = "noise_ratio";
  sweep_cfg.sweep.values = {"0.2", "0.6"};
  sweep_cfg.sweep.seeds = {1};
  std::string sweep_path =
      dir.write("sweep.json", run_config_to_json(sweep_cfg) + "\n");
  REQUIRE(run_command({"sweep", "--config", sweep_path}) == 0);
  std::vector<std::string> sweep_lines =
      read_lines(path_join(sweep_cfg.out, "sweep.csv"));
  REQUIRE(sweep_lines.size() == 3);
  CHECK(sweep_lines[0] == "axis,value,metric,mean,std,n_seeds");
  CHECK(sweep_lines[1].find("noise_ratio,0.2,map,") == 0);
  CHECK(sweep_lines[2].find("noise_ratio,0.6,map,") == 0);

  REQUIRE(run_command({"analyze", "--checkpoint", ckpt, "--data",
                       dir.file("tagged.jsonl"), "--out",
                       dir.file("an")}) == 0);
  std::vector<std::string> attr =
      read_lines(path_join(dir.file("an"), "attribution.csv"));
  REQUIRE(attr.size() >= 2);
  CHECK(attr[0] == "pair,word,drop,in_a,in_b");
  std::vector<std::string> pos =
      read_lines(path_join(dir.file("an"), "pos.csv"));
  REQUIRE(pos.size() >= 2);
  CHECK(pos[0] == "tag,chosen_share,prior_share");
  double share_sum = 0.0;
  for (size_t i = 1; i < pos.size(); ++i) {
    size_t c1 = pos[i].find(',');
    size_t c2 = pos[i].find(',', c1 + 1);
    share_sum += std::stod(pos[i].substr(c1 + 1, c2 - c1 - 1));
  }
  CHECK(share_sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cli reports failures with a nonzero exit code") {
  TempDir dir("clierr");
  CHECK(run_command({}) != 0);
  CHECK(run_command({"bogus"}) != 0);
  CHECK(run_command({"train"}) != 0);  // --data is required
  CHECK(run_command({"train", "--data", dir.file("missing.txt")}) != 0);
  CHECK(run_command({"embed", "--checkpoint", dir.file("nope.bin"), "--data",
                     dir.file("nope.txt")}) != 0);
  CHECK(run_command({"eval", "--scorer", "tfidf", "--eval-data",
                     dir.file("nope.json")}) != 0);

  std::string bad_cfg = dir.write("bad.json", "{\"objectvie\": \"tsdae\"}\n");
  CHECK(run_command({"train", "--config", bad_cfg}) != 0);

  std::string corpus = dir.write("c.txt", "the red fox\nthe blue owl\n");
  CHECK(run_command({"train", "--data", corpus, "--lr", "0"}) != 0);
}

}  // namespace
}  // namespace sembed
