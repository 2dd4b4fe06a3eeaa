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

#include "sembed/synthetic.h"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "sembed/error.h"
#include "sembed/io.h"
#include "sembed/rng.h"

namespace sembed {
namespace {

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::string make_word(Rng& rng, int syllables) {
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += kConsonants[rng.uniform_int(14)];
    w += kVowels[rng.uniform_int(5)];
  }
  return w;
}

std::vector<std::string> make_word_list(Rng& rng, size_t count, int syllables,
                                        std::unordered_set<std::string>& used) {
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string w = make_word(rng, syllables);
    if (used.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

struct WordBank {
  std::vector<std::string> nouns;
  std::vector<std::string> adjectives;
  std::vector<std::string> verbs;
};

WordBank make_word_bank(Rng& rng) {
  std::unordered_set<std::string> used = {"the", "with"};
  WordBank bank;
  bank.nouns = make_word_list(rng, 64, 2, used);
  bank.adjectives = make_word_list(rng, 120, 3, used);
  bank.verbs = make_word_list(rng, 96, 2, used);
  return bank;
}

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// X, Y, Z are the cluster's nouns in the order chosen for this sentence.
Sentence render(int tmpl, const std::string& x, const std::string& y,
                const std::string& z, const std::string& a1,
                const std::string& a2, const std::string& v) {
  switch (tmpl) {
    case 0:
      return {{"the", a1, x, v, "the", y, "with", "the", z},
              {"DT", "JJ", "NN", "VB", "DT", "NN", "IN", "DT", "NN"}};
    case 1:
      return {{"the", x, v, "the", a1, y, "with", "the", a2, z},
              {"DT", "NN", "VB", "DT", "JJ", "NN", "IN", "DT", "JJ", "NN"}};
    default:
      return {{"the", x, "with", "the", y, v, "the", a1, z},
              {"DT", "NN", "IN", "DT", "NN", "VB", "DT", "JJ", "NN"}};
  }
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Without-replacement sample of k items from pool (pool is consumed).
template <typename T>
std::vector<T> sample(std::vector<T> pool, size_t k, Rng& rng) {
  SEMBED_CHECK(k <= pool.size(), ContractError,
               "sample size exceeds pool size");
  rng.shuffle(pool);
  pool.resize(k);
  return pool;
}

std::vector<std::string> nouns_of(const SyntheticCorpus& corpus, size_t i) {
  std::vector<std::string> out;
  for (size_t t = 0; t < corpus.tokens[i].size(); ++t) {
    if (corpus.tags[i][t] == "NN") out.push_back(corpus.tokens[i][t]);
  }
  return out;
}

// Indices grouped by cluster, restricted to [lo, hi).
std::vector<std::vector<size_t>> by_cluster(const SyntheticCorpus& corpus,
                                            int64_t lo, int64_t hi) {
  SEMBED_CHECK(lo >= 0 && lo < hi && hi <= corpus.num_clusters, ContractError,
               "bad cluster range");
  std::vector<std::vector<size_t>> groups(static_cast<size_t>(hi - lo));
  for (size_t i = 0; i < corpus.cluster.size(); ++i) {
    int64_t c = corpus.cluster[i];
    if (c >= lo && c < hi) groups[static_cast<size_t>(c - lo)].push_back(i);
  }
  for (const auto& g : groups) {
    SEMBED_CHECK(!g.empty(), DataError, "cluster range has an empty cluster");
  }
  return groups;
}

// A same-cluster pair of distinct sentences; the cluster must have >= 2.
std::pair<size_t, size_t> same_cluster_pair(
    const std::vector<std::vector<size_t>>& groups, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto& g = groups[rng.uniform_int(groups.size())];
    if (g.size() < 2) continue;
    size_t a = rng.uniform_int(g.size());
    size_t b = rng.uniform_int(g.size());
    if (a != b) return {g[a], g[b]};
  }
  throw DataError("no cluster in range has two sentences");
}

void write_jsonl(const std::string& path,
                 const std::vector<nlohmann::json>& rows) {
  std::string text;
  for (const nlohmann::json& j : rows) text += j.dump() + "\n";
  write_text_atomic(path, text);
}

void write_manifest(const std::string& path, const std::string& name,
                    const std::string& kind, const nlohmann::json& sub) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["kind"] = kind;
  j["subdatasets"] = nlohmann::json::array({sub});
  write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace

std::vector<size_t> SyntheticCorpus::in_clusters(int64_t lo, int64_t hi) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < cluster.size(); ++i) {
    if (cluster[i] >= lo && cluster[i] < hi) out.push_back(i);
  }
  return out;
}

SyntheticCorpus make_synthetic_corpus(int64_t n_sentences, int64_t n_clusters,
                                      uint64_t seed) {
  SEMBED_CHECK(n_clusters >= 1 && n_sentences >= n_clusters, ContractError,
               "need n_sentences >= n_clusters >= 1");
  Rng rng(derive_seed(seed, "synthetic"));
  WordBank bank = make_word_bank(rng);

  // Each cluster is an unordered triple of distinct nouns, unique across
  // clusters.
  std::set<std::vector<std::string>> seen_triples;
  std::vector<std::vector<std::string>> cluster_nouns;
  while (cluster_nouns.size() < static_cast<size_t>(n_clusters)) {
    std::vector<std::string> triple;
    while (triple.size() < 3) {
      const std::string& n = bank.nouns[rng.uniform_int(bank.nouns.size())];
      if (std::find(triple.begin(), triple.end(), n) == triple.end()) {
        triple.push_back(n);
      }
    }
    std::vector<std::string> key = triple;
    std::sort(key.begin(), key.end());
    if (seen_triples.insert(key).second) {
      cluster_nouns.push_back(std::move(triple));
    }
  }

  SyntheticCorpus corpus;
  corpus.num_clusters = n_clusters;
  std::unordered_set<std::string> seen_texts;
  for (int64_t i = 0; i < n_sentences; ++i) {
    int64_t c = i % n_clusters;  // round-robin keeps clusters balanced
    for (int attempt = 0;; ++attempt) {
      SEMBED_CHECK(attempt < 10000, DataError,
                   "cannot generate enough distinct sentences per cluster");
      std::vector<std::string> nouns = cluster_nouns[static_cast<size_t>(c)];
      rng.shuffle(nouns);
      const std::string& a1 =
          bank.adjectives[rng.uniform_int(bank.adjectives.size())];
      const std::string& a2 =
          bank.adjectives[rng.uniform_int(bank.adjectives.size())];
      const std::string& v = bank.verbs[rng.uniform_int(bank.verbs.size())];
      Sentence s = render(static_cast<int>(rng.uniform_int(3)), nouns[0],
                          nouns[1], nouns[2], a1, a2, v);
      std::string text = join_tokens(s.tokens);
      if (!seen_texts.insert(text).second) continue;
      corpus.texts.push_back(std::move(text));
      corpus.tokens.push_back(std::move(s.tokens));
      corpus.tags.push_back(std::move(s.tags));
      corpus.cluster.push_back(c);
      break;
    }
  }
  return corpus;
}

std::vector<RerankQuery> make_rerank_queries(const SyntheticCorpus& corpus,
                                             int64_t cluster_lo,
                                             int64_t cluster_hi,
                                             int64_t n_queries,
                                             int64_t n_relevant,
                                             int64_t n_candidates,
                                             uint64_t seed) {
  SEMBED_CHECK(n_relevant >= 1 && n_candidates > n_relevant, ContractError,
               "need n_candidates > n_relevant >= 1");
  Rng rng(derive_seed(seed, "synthetic.rerank"));
  auto groups = by_cluster(corpus, cluster_lo, cluster_hi);
  SEMBED_CHECK(groups.size() >= 2, ContractError,
               "rerank needs at least two clusters for distractors");

  std::vector<RerankQuery> out;
  for (int64_t q = 0; q < n_queries; ++q) {
    size_t g = rng.uniform_int(groups.size());
    const auto& members = groups[g];
    SEMBED_CHECK(members.size() >= static_cast<size_t>(n_relevant) + 1,
                 DataError, "cluster too small for the relevant count");

    std::vector<size_t> shuffled = members;
    rng.shuffle(shuffled);
    size_t query_idx = shuffled[0];
    std::vector<size_t> relevant(shuffled.begin() + 1,
                                 shuffled.begin() + 1 + n_relevant);

    std::vector<size_t> pool;
    for (size_t og = 0; og < groups.size(); ++og) {
      if (og == g) continue;
      pool.insert(pool.end(), groups[og].begin(), groups[og].end());
    }
    std::vector<size_t> distractors =
        sample(std::move(pool), static_cast<size_t>(n_candidates - n_relevant),
               rng);

    // Candidate order mixes relevants and distractors.
    std::vector<std::pair<size_t, bool>> cands;
    for (size_t r : relevant) cands.push_back({r, true});
    for (size_t d : distractors) cands.push_back({d, false});
    rng.shuffle(cands);

    RerankQuery rq;
    rq.query = corpus.texts[query_idx];
    for (size_t i = 0; i < cands.size(); ++i) {
      rq.candidates.push_back(corpus.texts[cands[i].first]);
      if (cands[i].second) rq.relevant.push_back(static_cast<int64_t>(i));
    }
    out.push_back(std::move(rq));
  }
  return out;
}

IrData make_ir_data(const SyntheticCorpus& corpus, int64_t cluster_lo,
                    int64_t cluster_hi, int64_t n_queries, uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic.ir"));
  std::vector<size_t> range = corpus.in_clusters(cluster_lo, cluster_hi);
  SEMBED_CHECK(!range.empty(), DataError, "empty cluster range");
  SEMBED_CHECK(static_cast<size_t>(n_queries) <= range.size(), ContractError,
               "more queries than sentences in range");

  IrData data;
  std::unordered_map<size_t, std::string> id_of;
  for (size_t i = 0; i < range.size(); ++i) {
    std::string id = "d" + std::to_string(i);
    id_of[range[i]] = id;
    data.corpus.push_back({std::move(id), corpus.texts[range[i]]});
  }

  std::vector<size_t> query_sents =
      sample(range, static_cast<size_t>(n_queries), rng);
  for (size_t qs : query_sents) {
    IrQuery q;
    q.query = corpus.texts[qs];
    // The query's own document is listed too; evaluation removes it by
    // exact text match.
    for (size_t i : range) {
      if (corpus.cluster[i] == corpus.cluster[qs]) {
        q.duplicates.push_back(id_of.at(i));
      }
    }
    data.queries.push_back(std::move(q));
  }
  return data;
}

std::vector<PiPair> make_pi_pairs(const SyntheticCorpus& corpus,
                                  int64_t cluster_lo, int64_t cluster_hi,
                                  int64_t n_pairs, uint64_t seed) {
  SEMBED_CHECK(n_pairs >= 2, ContractError, "need at least two pairs");
  Rng rng(derive_seed(seed, "synthetic.pi"));
  auto groups = by_cluster(corpus, cluster_lo, cluster_hi);
  std::vector<size_t> range = corpus.in_clusters(cluster_lo, cluster_hi);

  std::vector<PiPair> out;
  for (int64_t i = 0; i < n_pairs; ++i) {
    PiPair p;
    p.has_threshold = true;
    p.threshold = 0.5;
    if (i % 2 == 0) {
      auto [a, b] = same_cluster_pair(groups, rng);
      p.s1 = corpus.texts[a];
      p.s2 = corpus.texts[b];
      p.label = 1;
      p.gold = 0.75 + 0.2 * rng.uniform();
    } else {
      size_t a = range[rng.uniform_int(range.size())];
      size_t b = a;
      while (corpus.cluster[b] == corpus.cluster[a]) {
        b = range[rng.uniform_int(range.size())];
      }
      p.s1 = corpus.texts[a];
      p.s2 = corpus.texts[b];
      p.label = 0;
      p.gold = 0.05 + 0.3 * rng.uniform();
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<StsPair> make_sts_pairs(const SyntheticCorpus& corpus,
                                    int64_t cluster_lo, int64_t cluster_hi,
                                    int64_t n_pairs, uint64_t seed) {
  SEMBED_CHECK(n_pairs >= 2, ContractError, "need at least two pairs");
  Rng rng(derive_seed(seed, "synthetic.sts"));
  auto groups = by_cluster(corpus, cluster_lo, cluster_hi);
  std::vector<size_t> range = corpus.in_clusters(cluster_lo, cluster_hi);

  std::vector<StsPair> out;
  for (int64_t i = 0; i < n_pairs; ++i) {
    size_t a, b;
    if (i % 2 == 0) {
      std::tie(a, b) = same_cluster_pair(groups, rng);
    } else {
      a = range[rng.uniform_int(range.size())];
      b = range[rng.uniform_int(range.size())];
      while (b == a) b = range[rng.uniform_int(range.size())];
    }
    std::vector<std::string> na = nouns_of(corpus, a);
    std::vector<std::string> nb = nouns_of(corpus, b);
    std::set<std::string> sa(na.begin(), na.end());
    int overlap = 0;
    for (const std::string& n : std::set<std::string>(nb.begin(), nb.end())) {
      if (sa.count(n)) ++overlap;
    }
    double score = 0.25 * overlap + 0.15 * rng.uniform();
    out.push_back({corpus.texts[a], corpus.texts[b], score});
  }
  return out;
}

std::vector<TextPair> make_text_pairs(const SyntheticCorpus& corpus,
                                      int64_t cluster_lo, int64_t cluster_hi,
                                      int64_t n_pairs, uint64_t seed) {
  SEMBED_CHECK(n_pairs >= 1, ContractError, "need at least one pair");
  Rng rng(derive_seed(seed, "synthetic.pairs"));
  auto groups = by_cluster(corpus, cluster_lo, cluster_hi);
  std::vector<TextPair> out;
  for (int64_t i = 0; i < n_pairs; ++i) {
    auto [a, b] = same_cluster_pair(groups, rng);
    out.push_back({corpus.texts[a], corpus.texts[b]});
  }
  return out;
}

std::vector<TaggedPair> make_tagged_pairs(const SyntheticCorpus& corpus,
                                          int64_t cluster_lo,
                                          int64_t cluster_hi, int64_t n_pairs,
                                          uint64_t seed) {
  SEMBED_CHECK(n_pairs >= 1, ContractError, "need at least one pair");
  Rng rng(derive_seed(seed, "synthetic.tagged"));
  auto groups = by_cluster(corpus, cluster_lo, cluster_hi);
  std::vector<TaggedPair> out;
  for (int64_t i = 0; i < n_pairs; ++i) {
    auto [a, b] = same_cluster_pair(groups, rng);
    TaggedPair p;
    p.a = corpus.tokens[a];
    p.a_pos = corpus.tags[a];
    p.b = corpus.tokens[b];
    p.b_pos = corpus.tags[b];
    p.label = 1;
    out.push_back(std::move(p));
  }
  return out;
}

void write_synthetic_bundle(const std::string& dir, int64_t n_sentences,
                            int64_t n_clusters, uint64_t seed) {
  SEMBED_CHECK(n_clusters >= 5, ContractError,
               "bundle needs at least five clusters for a held-out split");
  SyntheticCorpus corpus =
      make_synthetic_corpus(n_sentences, n_clusters, seed);

  // At least two clusters stay held out so rerank always has distractors.
  int64_t held_out = std::max<int64_t>(2, n_clusters / 5);
  int64_t train_hi = n_clusters - held_out;

  std::filesystem::create_directories(dir);

  std::string corpus_text;
  for (size_t i : corpus.in_clusters(0, train_hi)) {
    corpus_text += corpus.texts[i] + "\n";
  }
  write_text_atomic(path_join(dir, "corpus.txt"), corpus_text);

  size_t train_count = corpus.in_clusters(0, train_hi).size();
  auto pairs = make_text_pairs(corpus, 0, train_hi,
                               static_cast<int64_t>(train_count), seed);
  {
    std::vector<nlohmann::json> rows;
    Rng jitter(derive_seed(seed, "synthetic.scored"));
    std::vector<nlohmann::json> scored;
    for (const TextPair& p : pairs) {
      rows.push_back({{"s1", p.s1}, {"s2", p.s2}});
      scored.push_back({{"s1", p.s1},
                        {"s2", p.s2},
                        {"score", 0.8 + 0.2 * jitter.uniform()}});
    }
    write_jsonl(path_join(dir, "pairs.jsonl"), rows);
    write_jsonl(path_join(dir, "scored_pairs.jsonl"), scored);
  }

  size_t eval_count = corpus.in_clusters(train_hi, n_clusters).size();
  int64_t n_queries = std::min<int64_t>(50, static_cast<int64_t>(eval_count));
  // Rerank geometry shrinks with the held-out split: the relevant set must
  // fit inside one cluster (minus the query) and the distractors inside the
  // other clusters, sampled without replacement.
  int64_t min_cluster = static_cast<int64_t>(eval_count);
  int64_t max_cluster = 0;
  for (int64_t c = train_hi; c < n_clusters; ++c) {
    int64_t sz = static_cast<int64_t>(corpus.in_clusters(c, c + 1).size());
    min_cluster = std::min(min_cluster, sz);
    max_cluster = std::max(max_cluster, sz);
  }
  int64_t n_rel = std::min<int64_t>(5, min_cluster - 1);
  int64_t worst_pool = static_cast<int64_t>(eval_count) - max_cluster;
  int64_t n_cand = std::min<int64_t>(20, n_rel + worst_pool);
  SEMBED_CHECK(n_rel >= 1 && n_cand > n_rel, ContractError,
               "bundle too small for rerank queries; need clusters of >= 2 "
               "sentences");
  auto rerank = make_rerank_queries(corpus, train_hi, n_clusters, n_queries,
                                    n_rel, n_cand, seed);
  {
    std::vector<nlohmann::json> rows;
    for (const RerankQuery& q : rerank) {
      rows.push_back({{"query", q.query},
                      {"candidates", q.candidates},
                      {"relevant", q.relevant}});
    }
    write_jsonl(path_join(dir, "rerank.jsonl"), rows);
    write_manifest(path_join(dir, "rerank.json"), "synthetic-rerank",
                   "rerank", {{"name", "clusters"}, {"path", "rerank.jsonl"}});
  }

  IrData ir = make_ir_data(corpus, train_hi, n_clusters,
                           std::min<int64_t>(40, n_queries), seed);
  {
    std::vector<nlohmann::json> docs, queries;
    for (const IrDoc& d : ir.corpus) {
      docs.push_back({{"id", d.id}, {"text", d.text}});
    }
    for (const IrQuery& q : ir.queries) {
      queries.push_back({{"query", q.query}, {"duplicates", q.duplicates}});
    }
    write_jsonl(path_join(dir, "ir_corpus.jsonl"), docs);
    write_jsonl(path_join(dir, "ir_queries.jsonl"), queries);
    write_manifest(path_join(dir, "ir.json"), "synthetic-ir", "ir",
                   {{"name", "clusters"},
                    {"corpus", "ir_corpus.jsonl"},
                    {"queries", "ir_queries.jsonl"}});
  }

  int64_t n_pi = std::min<int64_t>(200, 4 * static_cast<int64_t>(eval_count));
  auto pi = make_pi_pairs(corpus, train_hi, n_clusters, n_pi, seed);
  {
    std::vector<nlohmann::json> rows;
    for (const PiPair& p : pi) {
      rows.push_back({{"s1", p.s1},
                      {"s2", p.s2},
                      {"gold", p.gold},
                      {"label", p.label},
                      {"threshold", p.threshold}});
    }
    write_jsonl(path_join(dir, "pi.jsonl"), rows);
    write_manifest(path_join(dir, "pi.json"), "synthetic-pi", "pi",
                   {{"name", "clusters"}, {"path", "pi.jsonl"}});
  }

  auto sts = make_sts_pairs(corpus, train_hi, n_clusters, n_pi, seed);
  {
    std::vector<nlohmann::json> rows;
    for (const StsPair& p : sts) {
      rows.push_back({{"s1", p.s1}, {"s2", p.s2}, {"score", p.score}});
    }
    write_jsonl(path_join(dir, "sts.jsonl"), rows);
    write_manifest(path_join(dir, "sts.json"), "synthetic-sts", "sts",
                   {{"name", "clusters"}, {"path", "sts.jsonl"}});
  }

  auto tagged = make_tagged_pairs(
      corpus, train_hi, n_clusters,
      std::min<int64_t>(100, static_cast<int64_t>(eval_count)), seed);
  {
    std::vector<nlohmann::json> rows;
    for (const TaggedPair& p : tagged) {
      rows.push_back({{"a", p.a},
                      {"a_pos", p.a_pos},
                      {"b", p.b},
                      {"b_pos", p.b_pos},
                      {"label", p.label}});
    }
    write_jsonl(path_join(dir, "tagged.jsonl"), rows);
  }
}

}  // namespace sembed
