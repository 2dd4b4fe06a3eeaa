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

#include "sembed/tasks.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sembed/bm25.h"
#include "sembed/error.h"
#include "sembed/flow.h"
#include "sembed/io.h"
#include "sembed/metrics.h"

namespace sembed {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  SEMBED_CHECK(!j.is_discarded(), DataError, "malformed JSON in ", where);
  return j;
}

// Non-empty lines of a JSONL file, parsed, with 1-based line numbers.
std::vector<std::pair<size_t, json>> parse_jsonl(const std::string& path) {
  std::vector<std::pair<size_t, json>> out;
  const std::vector<std::string> lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    out.emplace_back(i + 1, parse_json(lines[i], path + ":" + std::to_string(i + 1)));
  }
  SEMBED_CHECK(!out.empty(), DataError, path, " has no records");
  return out;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
  SEMBED_CHECK(j.contains(key) && j[key].is_string(), DataError, where,
               ": missing string field \"", key, "\"");
  return j[key].get<std::string>();
}

double require_number(const json& j, const char* key, const std::string& where) {
  SEMBED_CHECK(j.contains(key) && j[key].is_number(), DataError, where,
               ": missing numeric field \"", key, "\"");
  return j[key].get<double>();
}

}  // namespace

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "rerank") return TaskKind::kRerank;
  if (s == "ir") return TaskKind::kIr;
  if (s == "pi") return TaskKind::kPi;
  if (s == "sts") return TaskKind::kSts;
  throw DataError("unknown task kind: " + s);
}

const char* to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kRerank: return "rerank";
    case TaskKind::kIr: return "ir";
    case TaskKind::kPi: return "pi";
    case TaskKind::kSts: return "sts";
  }
  return "?";
}

std::vector<RerankQuery> load_rerank_jsonl(const std::string& path) {
  std::vector<RerankQuery> out;
  for (const auto& [line, j] : parse_jsonl(path)) {
    const std::string where = path + ":" + std::to_string(line);
    RerankQuery q;
    q.query = require_string(j, "query", where);
    SEMBED_CHECK(j.contains("candidates") && j["candidates"].is_array(),
                 DataError, where, ": missing array field \"candidates\"");
    for (const auto& c : j["candidates"]) {
      SEMBED_CHECK(c.is_string(), DataError, where, ": candidate is not a string");
      q.candidates.push_back(c.get<std::string>());
    }
    SEMBED_CHECK(j.contains("relevant") && j["relevant"].is_array(), DataError,
                 where, ": missing array field \"relevant\"");
    for (const auto& r : j["relevant"]) {
      SEMBED_CHECK(r.is_number_integer(), DataError, where,
                   ": relevant entry is not an integer");
      q.relevant.push_back(r.get<int64_t>());
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<IrDoc> load_ir_corpus_jsonl(const std::string& path) {
  std::vector<IrDoc> out;
  for (const auto& [line, j] : parse_jsonl(path)) {
    const std::string where = path + ":" + std::to_string(line);
    out.push_back({require_string(j, "id", where), require_string(j, "text", where)});
  }
  return out;
}

std::vector<IrQuery> load_ir_queries_jsonl(const std::string& path) {
  std::vector<IrQuery> out;
  for (const auto& [line, j] : parse_jsonl(path)) {
    const std::string where = path + ":" + std::to_string(line);
    IrQuery q;
    q.query = require_string(j, "query", where);
    SEMBED_CHECK(j.contains("duplicates") && j["duplicates"].is_array(),
                 DataError, where, ": missing array field \"duplicates\"");
    for (const auto& d : j["duplicates"]) {
      SEMBED_CHECK(d.is_string(), DataError, where, ": duplicate id is not a string");
      q.duplicates.push_back(d.get<std::string>());
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<PiPair> load_pi_jsonl(const std::string& path) {
  std::vector<PiPair> out;
  for (const auto& [line, j] : parse_jsonl(path)) {
    const std::string where = path + ":" + std::to_string(line);
    PiPair p;
    p.s1 = require_string(j, "s1", where);
    p.s2 = require_string(j, "s2", where);
    p.gold = require_number(j, "gold", where);
    const double label = require_number(j, "label", where);
    SEMBED_CHECK(label == 0.0 || label == 1.0, DataError, where,
                 ": label must be 0 or 1");
    p.label = static_cast<int>(label);
    if (j.contains("threshold")) {
      p.has_threshold = true;
      p.threshold = require_number(j, "threshold", where);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<StsPair> load_sts_jsonl(const std::string& path) {
  std::vector<StsPair> out;
  for (const auto& [line, j] : parse_jsonl(path)) {
    const std::string where = path + ":" + std::to_string(line);
    out.push_back({require_string(j, "s1", where), require_string(j, "s2", where),
                   require_number(j, "score", where)});
  }
  return out;
}

namespace {

// IR candidate pool after removing exact self-matches for one query: kept
// corpus positions and the surviving gold ids.
struct IrPool {
  std::vector<size_t> kept;
  std::unordered_set<std::string> gold;
};

IrPool ir_pool_for_query(const Subdataset& sub, const IrQuery& q) {
  IrPool pool;
  pool.gold.insert(q.duplicates.begin(), q.duplicates.end());
  for (size_t d = 0; d < sub.ir_corpus.size(); ++d) {
    if (sub.ir_corpus[d].text == q.query) {
      pool.gold.erase(sub.ir_corpus[d].id);
    } else {
      pool.kept.push_back(d);
    }
  }
  return pool;
}

void validate_subdataset(const TaskDataset& ds, const Subdataset& sub) {
  const std::string where = ds.name + "/" + sub.name;
  switch (ds.kind) {
    case TaskKind::kRerank: {
      SEMBED_CHECK(!sub.rerank.empty(), DataError, where, ": no queries");
      for (size_t i = 0; i < sub.rerank.size(); ++i) {
        const RerankQuery& q = sub.rerank[i];
        SEMBED_CHECK(!q.candidates.empty(), DataError, where, " query ", i,
                     ": no candidates");
        SEMBED_CHECK(!q.relevant.empty(), DataError, where, " query ", i,
                     ": empty relevant set");
        std::set<int64_t> seen;
        for (int64_t r : q.relevant) {
          SEMBED_CHECK(r >= 0 && r < static_cast<int64_t>(q.candidates.size()),
                       DataError, where, " query ", i, ": relevant index ", r,
                       " out of range");
          SEMBED_CHECK(seen.insert(r).second, DataError, where, " query ", i,
                       ": duplicate relevant index ", r);
        }
      }
      break;
    }
    case TaskKind::kIr: {
      SEMBED_CHECK(!sub.ir_corpus.empty(), DataError, where, ": empty corpus");
      SEMBED_CHECK(!sub.ir_queries.empty(), DataError, where, ": no queries");
      std::unordered_set<std::string> ids;
      for (const IrDoc& d : sub.ir_corpus) {
        SEMBED_CHECK(!d.id.empty(), DataError, where, ": empty doc id");
        SEMBED_CHECK(ids.insert(d.id).second, DataError, where,
                     ": duplicate doc id ", d.id);
      }
      for (size_t i = 0; i < sub.ir_queries.size(); ++i) {
        const IrQuery& q = sub.ir_queries[i];
        SEMBED_CHECK(!q.duplicates.empty(), DataError, where, " query ", i,
                     ": empty duplicate set");
        for (const std::string& id : q.duplicates) {
          SEMBED_CHECK(ids.count(id) == 1, DataError, where, " query ", i,
                       ": unresolved duplicate id ", id);
        }
        const IrPool pool = ir_pool_for_query(sub, q);
        SEMBED_CHECK(!pool.gold.empty(), DataError, where, " query ", i,
                     ": all gold documents are exact self-matches");
        SEMBED_CHECK(!pool.kept.empty(), DataError, where, " query ", i,
                     ": no candidates left after self-match exclusion");
      }
      break;
    }
    case TaskKind::kPi: {
      SEMBED_CHECK(!sub.pi.empty(), DataError, where, ": no pairs");
      int positives = 0;
      for (size_t i = 0; i < sub.pi.size(); ++i) {
        const PiPair& p = sub.pi[i];
        SEMBED_CHECK(p.gold >= 0.0 && p.gold <= 1.0, DataError, where,
                     " pair ", i, ": gold confidence outside [0, 1]");
        if (p.has_threshold) {
          const int expect = p.gold >= p.threshold ? 1 : 0;
          SEMBED_CHECK(p.label == expect, DataError, where, " pair ", i,
                       ": label ", p.label, " inconsistent with gold ",
                       p.gold, " at threshold ", p.threshold);
        }
        positives += p.label;
      }
      SEMBED_CHECK(positives >= 1, DataError, where,
                   ": AP needs at least one positive pair");
      break;
    }
    case TaskKind::kSts: {
      SEMBED_CHECK(sub.sts.size() >= 2, DataError, where,
                   ": spearman needs at least two pairs");
      const double first = sub.sts.front().score;
      bool varied = false;
      for (const StsPair& p : sub.sts) {
        if (p.score != first) varied = true;
      }
      SEMBED_CHECK(varied, DataError, where, ": constant gold scores");
      break;
    }
  }
}

}  // namespace

void TaskDataset::validate() const {
  SEMBED_CHECK(!subs.empty(), DataError, name, ": no subdatasets");
  std::unordered_set<std::string> names;
  for (const Subdataset& sub : subs) {
    SEMBED_CHECK(!sub.name.empty(), DataError, name, ": empty subdataset name");
    SEMBED_CHECK(sub.name != "mean", DataError, name,
                 ": subdataset name \"mean\" is reserved for the aggregate row");
    SEMBED_CHECK(names.insert(sub.name).second, DataError, name,
                 ": duplicate subdataset name ", sub.name);
    validate_subdataset(*this, sub);
  }
}

TaskDataset load_task_dataset(const std::string& manifest_path) {
  const json j = parse_json(read_text_file(manifest_path), manifest_path);
  TaskDataset ds;
  ds.name = require_string(j, "name", manifest_path);
  ds.kind = task_kind_from_string(require_string(j, "kind", manifest_path));
  SEMBED_CHECK(j.contains("subdatasets") && j["subdatasets"].is_array(),
               DataError, manifest_path, ": missing array field \"subdatasets\"");

  const std::string dir = path_dirname(manifest_path);
  for (const auto& e : j["subdatasets"]) {
    Subdataset sub;
    sub.name = require_string(e, "name", manifest_path);
    if (ds.kind == TaskKind::kIr) {
      sub.ir_corpus = load_ir_corpus_jsonl(
          path_join(dir, require_string(e, "corpus", manifest_path)));
      sub.ir_queries = load_ir_queries_jsonl(
          path_join(dir, require_string(e, "queries", manifest_path)));
    } else {
      const std::string path =
          path_join(dir, require_string(e, "path", manifest_path));
      switch (ds.kind) {
        case TaskKind::kRerank: sub.rerank = load_rerank_jsonl(path); break;
        case TaskKind::kPi: sub.pi = load_pi_jsonl(path); break;
        case TaskKind::kSts: sub.sts = load_sts_jsonl(path); break;
        case TaskKind::kIr: break;  // handled above
      }
    }
    ds.subs.push_back(std::move(sub));
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Scorers

std::vector<double> Scorer::score_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  SEMBED_CHECK(!pairs.empty(), ContractError, "no pairs to score");
  std::vector<std::string> pool;
  pool.reserve(pairs.size());
  for (const auto& p : pairs) pool.push_back(p.second);
  set_candidates(pool);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(score_query(pairs[i].first)[i]);
  }
  return out;
}

EmbeddingScorer::EmbeddingScorer(const TransformerEncoder& enc,
                                 const Vocabulary& vocab, int64_t batch_size,
                                 const CouplingFlow* flow)
    : enc_(enc), vocab_(vocab), batch_size_(batch_size), flow_(flow) {
  SEMBED_CHECK(batch_size >= 1, ContractError, "batch_size must be >= 1");
}

std::vector<std::vector<double>> EmbeddingScorer::embed(
    const std::vector<std::string>& texts) {
  SEMBED_CHECK(!texts.empty(), ContractError, "no texts to embed");
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (size_t start = 0; start < texts.size();
       start += static_cast<size_t>(batch_size_)) {
    const size_t end = std::min(texts.size(), start + static_cast<size_t>(batch_size_));
    std::vector<std::vector<int64_t>> ids;
    for (size_t i = start; i < end; ++i) ids.push_back(tokenize(texts[i], vocab_));
    Tape tape;
    Var emb = embed_sentences(tape, enc_, ids);
    Tensor v = emb.value();
    if (flow_) v = flow_->transform_values(v);
    const int64_t d = v.shape()[1];
    for (int64_t r = 0; r < v.shape()[0]; ++r) {
      std::vector<double> row(static_cast<size_t>(d));
      for (int64_t c = 0; c < d; ++c) row[static_cast<size_t>(c)] = v[r * d + c];
      out.push_back(std::move(row));
    }
  }
  return out;
}

void EmbeddingScorer::set_candidates(const std::vector<std::string>& texts) {
  candidates_ = embed(texts);
}

std::vector<double> EmbeddingScorer::score_query(const std::string& query) {
  SEMBED_CHECK(!candidates_.empty(), ContractError,
               "score_query before set_candidates");
  const std::vector<std::vector<double>> q = embed({query});
  std::vector<double> out;
  out.reserve(candidates_.size());
  for (const auto& c : candidates_) out.push_back(cosine_similarity(q[0], c));
  return out;
}

std::vector<double> EmbeddingScorer::score_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  SEMBED_CHECK(!pairs.empty(), ContractError, "no pairs to score");
  std::vector<std::string> left, right;
  for (const auto& p : pairs) {
    left.push_back(p.first);
    right.push_back(p.second);
  }
  const auto el = embed(left);
  const auto er = embed(right);
  std::vector<double> out;
  out.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    out.push_back(cosine_similarity(el[i], er[i]));
  }
  return out;
}

struct Bm25Scorer::Impl {
  std::unique_ptr<Bm25Index> index;
};

Bm25Scorer::Bm25Scorer(double k1, double b)
    : k1_(k1), b_(b), impl_(std::make_unique<Impl>()) {}

Bm25Scorer::~Bm25Scorer() = default;

void Bm25Scorer::set_candidates(const std::vector<std::string>& texts) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(texts.size());
  for (const std::string& t : texts) docs.push_back(split_words(t));
  impl_->index = std::make_unique<Bm25Index>(docs, k1_, b_);
}

std::vector<double> Bm25Scorer::score_query(const std::string& query) {
  SEMBED_CHECK(impl_->index != nullptr, ContractError,
               "score_query before set_candidates");
  return impl_->index->score_all(split_words(query));
}

// ---------------------------------------------------------------------------
// Task runner

MetricReport run_task(const TaskDataset& dataset, Scorer& scorer,
                      const std::string& model_id, uint64_t seed, int64_t ir_k) {
  dataset.validate();
  SEMBED_CHECK(ir_k >= 1, ContractError, "ir_k must be >= 1");

  MetricReport report;
  switch (dataset.kind) {
    case TaskKind::kRerank: report.metric = "map"; break;
    case TaskKind::kIr: report.metric = "map@" + std::to_string(ir_k); break;
    case TaskKind::kPi: report.metric = "ap"; break;
    case TaskKind::kSts: report.metric = "spearman"; break;
  }

  for (const Subdataset& sub : dataset.subs) {
    double value = 0.0;
    switch (dataset.kind) {
      case TaskKind::kRerank: {
        std::vector<RankedJudgment> queries;
        for (const RerankQuery& q : sub.rerank) {
          scorer.set_candidates(q.candidates);
          RankedJudgment rj;
          rj.scores = scorer.score_query(q.query);
          rj.labels.assign(q.candidates.size(), 0);
          for (int64_t r : q.relevant) rj.labels[static_cast<size_t>(r)] = 1;
          queries.push_back(std::move(rj));
        }
        value = mean_average_precision(queries);
        break;
      }
      case TaskKind::kIr: {
        std::vector<std::string> texts;
        texts.reserve(sub.ir_corpus.size());
        for (const IrDoc& d : sub.ir_corpus) texts.push_back(d.text);
        scorer.set_candidates(texts);
        std::vector<RankedJudgment> queries;
        for (const IrQuery& q : sub.ir_queries) {
          const std::vector<double> all = scorer.score_query(q.query);
          const IrPool pool = ir_pool_for_query(sub, q);
          RankedJudgment rj;
          for (size_t d : pool.kept) {
            rj.scores.push_back(all[d]);
            rj.labels.push_back(pool.gold.count(sub.ir_corpus[d].id) ? 1 : 0);
          }
          queries.push_back(std::move(rj));
        }
        value = mean_average_precision_at_k(queries, ir_k);
        break;
      }
      case TaskKind::kPi: {
        std::vector<std::pair<std::string, std::string>> pairs;
        std::vector<int> labels;
        for (const PiPair& p : sub.pi) {
          pairs.emplace_back(p.s1, p.s2);
          labels.push_back(p.label);
        }
        value = average_precision(scorer.score_pairs(pairs), labels);
        break;
      }
      case TaskKind::kSts: {
        std::vector<std::pair<std::string, std::string>> pairs;
        std::vector<double> gold;
        for (const StsPair& p : sub.sts) {
          pairs.emplace_back(p.s1, p.s2);
          gold.push_back(p.score);
        }
        value = spearman(scorer.score_pairs(pairs), gold);
        break;
      }
    }
    report.rows.push_back({dataset.name, sub.name, report.metric, value,
                           model_id, seed});
  }

  double sum = 0.0;
  for (const MetricRow& row : report.rows) sum += row.value;
  report.aggregate = sum / static_cast<double>(report.rows.size());
  report.rows.push_back({dataset.name, "mean", report.metric, report.aggregate,
                         model_id, seed});
  return report;
}

std::string metric_report_to_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "dataset,subdataset,metric,value,model,seed\n";
  for (const MetricRow& row : report.rows) {
    out << csv_escape(row.dataset) << ',' << csv_escape(row.subdataset) << ','
        << csv_escape(row.metric) << ',' << format_g9(row.value) << ','
        << csv_escape(row.model) << ',' << row.seed << '\n';
  }
  return out.str();
}

}  // namespace sembed
