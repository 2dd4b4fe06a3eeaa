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

#ifndef SEMBED_SYNTHETIC_H_
#define SEMBED_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sembed/attribution.h"
#include "sembed/tasks.h"

namespace sembed {

// A paraphrase-cluster corpus of templated pseudo-word sentences. Each
// cluster is a distinct noun triple; sentences in a cluster reuse the triple
// with varying order, adjectives, verbs, and templates, so cluster identity
// is carried by the nouns. Sentence texts are globally unique.
struct SyntheticCorpus {
  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> tokens;  // parallel to texts
  std::vector<std::vector<std::string>> tags;    // DT/JJ/NN/VB/IN
  std::vector<int64_t> cluster;                  // cluster id per sentence
  int64_t num_clusters = 0;

  // Sentence indices whose cluster lies in [lo, hi).
  std::vector<size_t> in_clusters(int64_t lo, int64_t hi) const;
};

// Vocabulary is ~300 distinct words (syllabic pseudo-words plus function
// words). Sentences are 9 or 10 tokens. Requires n_sentences >= n_clusters.
SyntheticCorpus make_synthetic_corpus(int64_t n_sentences, int64_t n_clusters,
                                      uint64_t seed);

// Each query gets n_relevant same-cluster candidates and distractors from
// other clusters in [lo, hi), shuffled together.
std::vector<RerankQuery> make_rerank_queries(const SyntheticCorpus& corpus,
                                             int64_t cluster_lo,
                                             int64_t cluster_hi,
                                             int64_t n_queries,
                                             int64_t n_relevant,
                                             int64_t n_candidates,
                                             uint64_t seed);

struct IrData {
  std::vector<IrDoc> corpus;
  std::vector<IrQuery> queries;
};

// Documents are all sentences in [lo, hi); query texts are drawn from the
// same sentences, and the query's own document is listed among its
// duplicates, which exercises the evaluator's exact-match exclusion.
IrData make_ir_data(const SyntheticCorpus& corpus, int64_t cluster_lo,
                    int64_t cluster_hi, int64_t n_queries, uint64_t seed);

// Alternating positives (same cluster) and negatives, gold on opposite
// sides of the 0.5 threshold.
std::vector<PiPair> make_pi_pairs(const SyntheticCorpus& corpus,
                                  int64_t cluster_lo, int64_t cluster_hi,
                                  int64_t n_pairs, uint64_t seed);

// Gold score grows with the noun overlap of the two sentences, plus jitter.
std::vector<StsPair> make_sts_pairs(const SyntheticCorpus& corpus,
                                    int64_t cluster_lo, int64_t cluster_hi,
                                    int64_t n_pairs, uint64_t seed);

struct TextPair {
  std::string s1, s2;
};

// Same-cluster sentence pairs (positives for pair-based objectives).
std::vector<TextPair> make_text_pairs(const SyntheticCorpus& corpus,
                                      int64_t cluster_lo, int64_t cluster_hi,
                                      int64_t n_pairs, uint64_t seed);

// Same-cluster token/tag pairs for attribution analysis.
std::vector<TaggedPair> make_tagged_pairs(const SyntheticCorpus& corpus,
                                          int64_t cluster_lo,
                                          int64_t cluster_hi, int64_t n_pairs,
                                          uint64_t seed);

// Writes a complete experiment bundle into dir: corpus.txt (training
// clusters), pairs.jsonl, scored_pairs.jsonl, tagged.jsonl, and one manifest
// plus data files per task (rerank.json, ir.json, pi.json, sts.json). Tasks
// use held-out clusters (the top 20%, at least one).
void write_synthetic_bundle(const std::string& dir, int64_t n_sentences,
                            int64_t n_clusters, uint64_t seed);

}  // namespace sembed

#endif  // SEMBED_SYNTHETIC_H_
