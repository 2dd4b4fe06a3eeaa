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

#ifndef SEMBED_TASKS_H_
#define SEMBED_TASKS_H_

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sembed/model.h"
#include "sembed/vocab.h"

namespace sembed {

enum class TaskKind { kRerank, kIr, kPi, kSts };

TaskKind task_kind_from_string(const std::string& s);
const char* to_string(TaskKind kind);

struct RerankQuery {
  std::string query;
  std::vector<std::string> candidates;
  std::vector<int64_t> relevant;  // indices into candidates
};

struct IrDoc {
  std::string id;
  std::string text;
};

struct IrQuery {
  std::string query;
  std::vector<std::string> duplicates;  // corpus ids
};

struct PiPair {
  std::string s1, s2;
  double gold = 0.0;  // confidence in [0, 1]
  int label = 0;
  bool has_threshold = false;
  double threshold = 0.0;
};

struct StsPair {
  std::string s1, s2;
  double score = 0.0;
};

// One evaluation unit; only the members for the owning dataset's kind are
// populated.
struct Subdataset {
  std::string name;
  std::vector<RerankQuery> rerank;
  std::vector<IrDoc> ir_corpus;
  std::vector<IrQuery> ir_queries;
  std::vector<PiPair> pi;
  std::vector<StsPair> sts;
};

struct TaskDataset {
  TaskKind kind = TaskKind::kRerank;
  std::string name;
  std::vector<Subdataset> subs;

  // Every structural invariant checked before any scoring: ids resolve,
  // relevant sets stay non-empty (for IR, after exact self-match exclusion),
  // PI labels are consistent with their thresholds, STS gold is usable.
  void validate() const;
};

// Loads a dataset manifest: {"name": str, "kind": str, "subdatasets": [...]},
// each entry {"name": str, "path": str} (rerank/pi/sts) or
// {"name": str, "corpus": str, "queries": str} (ir). Relative paths resolve
// against the manifest's directory. The loaded dataset is validated.
TaskDataset load_task_dataset(const std::string& manifest_path);

// Per-kind JSONL loaders, exposed for tests and generators.
std::vector<RerankQuery> load_rerank_jsonl(const std::string& path);
std::vector<IrDoc> load_ir_corpus_jsonl(const std::string& path);
std::vector<IrQuery> load_ir_queries_jsonl(const std::string& path);
std::vector<PiPair> load_pi_jsonl(const std::string& path);
std::vector<StsPair> load_sts_jsonl(const std::string& path);

// Similarity backend. Higher scores mean more similar.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Fixes the candidate pool scored by subsequent score_query calls.
  virtual void set_candidates(const std::vector<std::string>& texts) = 0;
  virtual std::vector<double> score_query(const std::string& query) = 0;

  // Paired similarity. The default scores each left side against a pool of
  // all right sides and keeps the diagonal, which gives lexical scorers a
  // corpus to draw statistics from.
  virtual std::vector<double> score_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs);
};

class CouplingFlow;

// Cosine similarity between pooled encoder embeddings, optionally mapped
// through a debiasing flow first.
class EmbeddingScorer : public Scorer {
 public:
  EmbeddingScorer(const TransformerEncoder& enc, const Vocabulary& vocab,
                  int64_t batch_size = 64, const CouplingFlow* flow = nullptr);

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts);

  void set_candidates(const std::vector<std::string>& texts) override;
  std::vector<double> score_query(const std::string& query) override;
  std::vector<double> score_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs) override;

 private:
  const TransformerEncoder& enc_;
  const Vocabulary& vocab_;
  int64_t batch_size_;
  const CouplingFlow* flow_;
  std::vector<std::vector<double>> candidates_;
};

// BM25 lexical baseline; tokenization matches the vocabulary module's word
// splitter.
class Bm25Scorer : public Scorer {
 public:
  explicit Bm25Scorer(double k1 = 1.2, double b = 0.75);
  ~Bm25Scorer() override;

  void set_candidates(const std::vector<std::string>& texts) override;
  std::vector<double> score_query(const std::string& query) override;

 private:
  double k1_, b_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct MetricRow {
  std::string dataset;
  std::string subdataset;
  std::string metric;
  double value = 0.0;
  std::string model;
  uint64_t seed = 0;
};

struct MetricReport {
  std::vector<MetricRow> rows;  // per-subdataset rows then the "mean" row
  std::string metric;
  double aggregate = 0.0;  // unweighted mean over subdatasets
};

// rerank -> MAP, ir -> MAP@ir_k over the full corpus, pi -> AP of model
// similarity against the binary gold, sts -> Spearman against gold scores.
// IR excludes corpus documents whose text equals the query byte-for-byte.
MetricReport run_task(const TaskDataset& dataset, Scorer& scorer,
                      const std::string& model_id, uint64_t seed,
                      int64_t ir_k = 100);

// CSV with header dataset,subdataset,metric,value,model,seed.
std::string metric_report_to_csv(const MetricReport& report);

}  // namespace sembed

#endif  // SEMBED_TASKS_H_
